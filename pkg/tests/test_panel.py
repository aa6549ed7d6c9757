import numpy as np
import pytest

from multisc import panel
from multisc.exceptions import PanelFormatError


def write_csv(path, rows, header="unit,time,outcome,treated"):
    path.write_text(header + "\n" + "\n".join(rows) + "\n", encoding="utf-8")


def tiny_rows():
    # 2 units x 3 times, unit A treated
    return [
        "A,1,1.0,1", "A,2,2.0,1", "A,3,3.0,1",
        "B,1,4.0,0", "B,2,5.0,0", "B,3,6.0,0",
    ]


class TestIngest:
    def test_smallest_complete_grid(self, tmp_path):
        csv = tmp_path / "panel.csv"
        write_csv(csv, tiny_rows())
        data = panel.ingest_csv(csv, t0_marker=2)
        assert data.m == 1 and data.n == 1
        assert data.t0 == 2 and data.t1 == 1
        assert data.units == ("A", "B")

    def test_missing_cell_names_unit_and_time(self, tmp_path):
        csv = tmp_path / "panel.csv"
        write_csv(csv, [r for r in tiny_rows() if not r.startswith("B,3")])
        with pytest.raises(PanelFormatError, match=r"'B'.*3"):
            panel.ingest_csv(csv, t0_marker=2)

    def test_non_numeric_outcome_names_row(self, tmp_path):
        csv = tmp_path / "panel.csv"
        rows = tiny_rows()
        rows[3] = "B,1,oops,0"
        write_csv(csv, rows)
        with pytest.raises(PanelFormatError, match="row 5"):
            panel.ingest_csv(csv, t0_marker=2)

    def test_inconsistent_treated_flag(self, tmp_path):
        csv = tmp_path / "panel.csv"
        rows = tiny_rows()
        rows[2] = "A,3,3.0,0"
        write_csv(csv, rows)
        with pytest.raises(PanelFormatError, match="inconsistent"):
            panel.ingest_csv(csv, t0_marker=2)

    def test_duplicate_cell_rejected(self, tmp_path):
        csv = tmp_path / "panel.csv"
        write_csv(csv, tiny_rows() + ["A,1,9.0,1"])
        with pytest.raises(PanelFormatError, match="duplicate"):
            panel.ingest_csv(csv, t0_marker=2)

    def test_schema_remap(self, tmp_path):
        csv = tmp_path / "panel.csv"
        rows = [r.replace(",", ";").replace(";", ",") for r in tiny_rows()]
        write_csv(csv, rows, header="county,month,rate,order")
        data = panel.ingest_csv(
            csv,
            schema={"unit": "county", "time": "month",
                    "outcome": "rate", "treated": "order"},
            t0_marker=2,
        )
        assert data.m == 1

    def test_treated_first_then_lexicographic(self, tmp_path):
        csv = tmp_path / "panel.csv"
        rows = [
            "z,1,1.0,1", "z,2,1.0,1",
            "a,1,2.0,0", "a,2,2.0,0",
            "c,1,3.0,1", "c,2,3.0,1",
            "b,1,4.0,0", "b,2,4.0,0",
        ]
        write_csv(csv, rows)
        data = panel.ingest_csv(csv, t0_marker=1)
        assert data.units == ("c", "z", "a", "b")
        assert data.treated == (True, True, False, False)

    def test_sidecar_marker(self, tmp_path):
        csv = tmp_path / "panel.csv"
        write_csv(csv, tiny_rows())
        (tmp_path / "panel.json").write_text('{"t0_marker": 2}', encoding="utf-8")
        assert panel.read_sidecar_marker(csv) == 2

    def test_deterministic(self, tmp_path):
        csv = tmp_path / "panel.csv"
        write_csv(csv, tiny_rows())
        one = panel.ingest_csv(csv, t0_marker=2)
        two = panel.ingest_csv(csv, t0_marker=2)
        assert np.array_equal(one.outcomes, two.outcomes)
        assert one.units == two.units


class TestPanelInvariants:
    def test_needs_both_groups(self):
        with pytest.raises(ValueError):
            panel.PanelData(
                units=("A", "B"), times=(1, 2),
                outcomes=np.ones((2, 2)), treated=(True, True), t0=1, t1=1)

    def test_rejects_non_finite(self):
        cells = np.ones((2, 2))
        cells[0, 0] = np.inf
        with pytest.raises(ValueError):
            panel.PanelData(units=("A", "B"), times=(1, 2), outcomes=cells,
                            treated=(True, False), t0=1, t1=1)


class TestSplit:
    def make_panel(self, m=1, n=2, t0=3, t1=1):
        units = tuple(f"t{i}" for i in range(m)) + tuple(f"c{i}" for i in range(n))
        total = t0 + t1
        outcomes = np.arange(total * (m + n), dtype=float).reshape(total, m + n)
        return panel.PanelData(
            units=units, times=tuple(range(total)), outcomes=outcomes,
            treated=(True,) * m + (False,) * n, t0=t0, t1=t1)

    def test_dimension_bookkeeping(self):
        design = panel.split(self.make_panel())
        assert design.y_pre.shape == (3, 1)
        assert design.x_pre.shape == (3, 2)
        assert design.y_post.shape == (1, 1)
        assert design.x_post.shape == (1, 2)

    def test_copy_semantics_constant_column(self):
        data = self.make_panel()
        outcomes = data.outcomes.copy()
        outcomes[:, 1] = 5.0
        data = panel.PanelData(units=data.units, times=data.times,
                               outcomes=outcomes, treated=data.treated,
                               t0=data.t0, t1=data.t1)
        design = panel.split(data)
        assert np.all(design.x_pre[:, 0] == 5.0)
        assert np.all(design.x_post[:, 0] == 5.0)

    def test_partition_round_trip(self):
        data = self.make_panel(m=2, n=3, t0=4, t1=2)
        design = panel.split(data)
        top = np.hstack([design.y_pre, design.x_pre])
        bottom = np.hstack([design.y_post, design.x_post])
        assert np.array_equal(np.vstack([top, bottom]), data.outcomes)

    def test_zero_post_periods_allowed(self):
        design = panel.split(self.make_panel(t1=0))
        assert design.t1 == 0
