"""Independent reference implementations used only to check the library.

Everything here is deliberately naive (one-sided Jacobi sweeps, textbook
Gaussian elimination, brute-force grids) and shares no code with the
package, so agreement between the two is meaningful.
"""

import numpy as np


def jacobi_svd_values(mat, sweeps=60, tol=1e-14):
    """Singular values via one-sided Jacobi rotations, descending.

    Orthogonalizes the columns of the (tall) working matrix pair by pair
    with a fixed sweep order; column norms at convergence are the singular
    values.
    """
    a = np.array(mat, dtype=float)
    if a.shape[0] < a.shape[1]:
        a = a.T
    n = a.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p] @ a[:, q]
                app = a[:, p] @ a[:, p]
                aqq = a[:, q] @ a[:, q]
                off = max(off, abs(apq) / max(np.sqrt(app * aqq), 1e-300))
                if abs(apq) <= tol * np.sqrt(app * aqq):
                    continue
                tau = (aqq - app) / (2.0 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = c * t
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
        if off < tol:
            break
    values = np.sqrt((a * a).sum(axis=0))
    return np.sort(values)[::-1]


def jacobi_nuclear_norm(mat):
    return float(jacobi_svd_values(mat).sum())


def gauss_solve(a, b):
    """Solve a x = b by Gaussian elimination with partial pivoting."""
    a = np.array(a, dtype=float)
    b = np.array(b, dtype=float)
    n = a.shape[0]
    single = b.ndim == 1
    if single:
        b = b[:, None]
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(a[col:, col])))
        if abs(a[pivot, col]) < 1e-300:
            raise ZeroDivisionError("singular system")
        if pivot != col:
            a[[col, pivot]] = a[[pivot, col]]
            b[[col, pivot]] = b[[pivot, col]]
        for row in range(col + 1, n):
            factor = a[row, col] / a[col, col]
            a[row, col:] -= factor * a[col, col:]
            b[row] -= factor * b[col]
    x = np.zeros_like(b)
    for row in range(n - 1, -1, -1):
        x[row] = (b[row] - a[row, row + 1:] @ x[row + 1:]) / a[row, row]
    return x[:, 0] if single else x


def sqrt_lasso_objective_reference(theta, y, x, lam):
    """Objective value via the Jacobi SVD oracle (no shared code paths)."""
    residual = y - x @ theta
    t0 = y.shape[0]
    penalty = lam * float(np.abs(np.asarray(theta)).sum())
    return jacobi_nuclear_norm(residual) / np.sqrt(t0) + penalty


def grid_search(objective, axes):
    """Exhaustive minimum of `objective` over the cartesian grid `axes`."""
    best_value = np.inf
    best_point = None
    mesh = np.meshgrid(*axes, indexing="ij")
    flat = np.stack([m.ravel() for m in mesh], axis=-1)
    for point in flat:
        value = objective(point)
        if value < best_value:
            best_value = value
            best_point = point
    return best_value, np.array(best_point)
