"""Panel-data model, CSV ingestion, and the pre/post design-matrix split.

A panel holds outcomes on a complete (unit, time) grid with one shared
treatment date.  Units are ordered treated-first, then lexicographically, so
column j of every derived matrix refers to the same unit everywhere.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import PanelFormatError

DEFAULT_SCHEMA = {"unit": "unit", "time": "time", "outcome": "outcome", "treated": "treated"}


@dataclass(frozen=True)
class PanelData:
    """Complete balanced panel with a single adoption date.

    ``outcomes`` is (t0 + t1) x len(units), rows in time order, columns in
    unit order (treated units first, each group sorted by identifier).
    """

    units: tuple[str, ...]
    times: tuple[int, ...]
    outcomes: np.ndarray
    treated: tuple[bool, ...]
    t0: int
    t1: int

    def __post_init__(self):
        n_units = len(self.units)
        if self.outcomes.shape != (self.t0 + self.t1, n_units):
            raise ValueError("outcomes shape must be (t0 + t1, number of units)")
        if not np.isfinite(self.outcomes).all():
            raise ValueError("outcomes must be finite")
        if self.t0 < 1 or self.t1 < 0:
            raise ValueError("need t0 >= 1 and t1 >= 0")
        if len(self.times) != self.t0 + self.t1:
            raise ValueError("times length must equal t0 + t1")
        if any(later <= earlier for earlier, later in zip(self.times, self.times[1:])):
            raise ValueError("times must be strictly increasing")
        if len(self.treated) != n_units:
            raise ValueError("one treated flag per unit required")
        n_treated = sum(self.treated)
        if n_treated == 0 or n_treated == n_units:
            raise ValueError("panel needs at least one treated and one control unit")
        if any(self.treated[i] < self.treated[i + 1] for i in range(n_units - 1)):
            raise ValueError("units must be ordered treated-first")

    @property
    def m(self) -> int:
        return sum(self.treated)

    @property
    def n(self) -> int:
        return len(self.units) - self.m


@dataclass(frozen=True)
class DesignSplit:
    """The four matrices of the pre/post, treated/control partition."""

    y_pre: np.ndarray   # t0 x m
    x_pre: np.ndarray   # t0 x n
    y_post: np.ndarray  # t1 x m
    x_post: np.ndarray  # t1 x n
    m: int
    n: int
    treated_units: tuple[str, ...] = field(default=())
    control_units: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if self.m < 1 or self.n < 1 or self.y_pre.shape[0] < 1:
            raise ValueError("need t0, m, n all >= 1")
        if self.y_pre.shape != (self.x_pre.shape[0], self.m):
            raise ValueError("y_pre must be t0 x m")
        if self.x_pre.shape[1] != self.n:
            raise ValueError("x_pre must be t0 x n")
        if self.y_post.shape[1] != self.m or self.x_post.shape[1] != self.n:
            raise ValueError("post matrices must match m and n")
        if self.y_post.shape[0] != self.x_post.shape[0]:
            raise ValueError("post matrices must share a row count")

    @property
    def t0(self) -> int:
        return self.y_pre.shape[0]

    @property
    def t1(self) -> int:
        return self.y_post.shape[0]


def ingest_csv(path, schema: dict | None = None, t0_marker: int | None = None) -> PanelData:
    """Read a long-format panel CSV into a :class:`PanelData`.

    Parameters
    ----------
    path : str or Path
        UTF-8 CSV with a header row carrying (unit, time, outcome, treated)
        columns; column names may be remapped through `schema`.
    schema : dict, optional
        Mapping from the canonical names ``unit``/``time``/``outcome``/
        ``treated`` to the column names used in the file.
    t0_marker : int
        Time index of the last pre-treatment period.

    Raises
    ------
    PanelFormatError
        On missing cells (named by unit and time), non-numeric outcomes
        (named by row number), or inconsistent treated flags.
    """
    path = Path(path)
    names = dict(DEFAULT_SCHEMA)
    if schema:
        unknown = set(schema) - set(DEFAULT_SCHEMA)
        if unknown:
            raise ValueError(f"unknown schema keys: {sorted(unknown)}")
        names.update(schema)
    if t0_marker is None:
        raise ValueError("t0_marker is required (pass it or read the sidecar)")

    cells: dict[tuple[str, int], float] = {}
    treated_flags: dict[str, bool] = {}
    with path.open(newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        header = reader.fieldnames or []
        missing_cols = [col for col in names.values() if col not in header]
        if missing_cols:
            raise PanelFormatError(f"missing columns {missing_cols} in {path.name}")
        for row_number, row in enumerate(reader, start=2):
            unit = row[names["unit"]].strip()
            try:
                time = int(row[names["time"]])
            except ValueError as err:
                raise PanelFormatError(
                    f"row {row_number}: non-integer time {row[names['time']]!r}"
                ) from err
            try:
                outcome = float(row[names["outcome"]])
            except ValueError as err:
                raise PanelFormatError(
                    f"row {row_number}: non-numeric outcome {row[names['outcome']]!r}"
                ) from err
            if not np.isfinite(outcome):
                raise PanelFormatError(f"row {row_number}: non-finite outcome")
            flag_raw = row[names["treated"]].strip()
            if flag_raw not in {"0", "1"}:
                raise PanelFormatError(
                    f"row {row_number}: treated flag must be 0 or 1, got {flag_raw!r}"
                )
            flag = flag_raw == "1"
            if unit in treated_flags and treated_flags[unit] != flag:
                raise PanelFormatError(
                    f"unit {unit!r}: inconsistent treated flag across rows"
                )
            treated_flags[unit] = flag
            key = (unit, time)
            if key in cells:
                raise PanelFormatError(f"duplicate cell for unit {unit!r}, time {time}")
            cells[key] = outcome

    if not cells:
        raise PanelFormatError(f"{path.name} holds no data rows")

    times = sorted({time for _, time in cells})
    units = sorted(treated_flags, key=lambda u: (not treated_flags[u], u))
    for unit in units:
        for time in times:
            if (unit, time) not in cells:
                raise PanelFormatError(f"missing cell for unit {unit!r}, time {time}")

    t0 = sum(1 for time in times if time <= t0_marker)
    if t0 < 1:
        raise PanelFormatError("t0_marker precedes every observed period")
    outcomes = np.array([[cells[(unit, time)] for unit in units] for time in times])
    return PanelData(
        units=tuple(units),
        times=tuple(times),
        outcomes=outcomes,
        treated=tuple(treated_flags[u] for u in units),
        t0=t0,
        t1=len(times) - t0,
    )


def read_sidecar_marker(csv_path) -> int | None:
    """`t0_marker` from the companion JSON sidecar, if one exists."""
    sidecar = Path(csv_path).with_suffix(".json")
    if not sidecar.exists():
        return None
    payload = json.loads(sidecar.read_text(encoding="utf-8"))
    marker = payload.get("t0_marker")
    return None if marker is None else int(marker)


def split(panel: PanelData) -> DesignSplit:
    """Partition the outcomes matrix into the four pre/post design blocks."""
    m = panel.m
    outcomes = panel.outcomes
    return DesignSplit(
        y_pre=outcomes[: panel.t0, :m].copy(),
        x_pre=outcomes[: panel.t0, m:].copy(),
        y_post=outcomes[panel.t0 :, :m].copy(),
        x_post=outcomes[panel.t0 :, m:].copy(),
        m=m,
        n=panel.n,
        treated_units=panel.units[:m],
        control_units=panel.units[m:],
    )
