"""Independent reference computations used to freeze expected values.

None of these call into the package's numerical code.
"""

import numpy as np


def linear_system_series(A, x0, n):
    """Columns ``x0, A x0, A^2 x0, ...`` (``n`` of them)."""
    out = [np.asarray(x0, dtype=float)]
    for _ in range(n - 1):
        out.append(A @ out[-1])
    return np.column_stack(out)


def random_diagonalizable(m, eigs, rng):
    """``(A, x0)`` with ``A = S diag(eigs) S^-1`` for a well-conditioned ``S``.

    ``eigs`` may list fewer than ``m`` values; the rest are zero. ``x0`` is a
    generic start inside the span of the eigenvectors with nonzero eigenvalue,
    so the orbit has rank exactly ``len(eigs)``.
    """
    r = len(eigs)
    full = np.zeros(m)
    full[:r] = eigs
    S, _ = np.linalg.qr(rng.standard_normal((m, m)))
    S = S + 0.1 * rng.standard_normal((m, m))
    x0 = S[:, :r] @ rng.uniform(1.0, 2.0, r)
    return S @ np.diag(full) @ np.linalg.inv(S), x0


def low_rank_series(m, n, eigs, rng):
    """``Phi0 diag(b0) Vandermonde`` data with known real eigenvalues."""
    phi = rng.standard_normal((m, len(eigs)))
    b = rng.uniform(1.0, 2.0, len(eigs))
    V = np.asarray(eigs, dtype=float)[:, None] ** np.arange(n)[None, :]
    return phi @ (b[:, None] * V)


def bisection_water_level(gains, total, noise, iters=200):
    """Water level from bisection on ``sum max(0, mu - noise/g) = total``."""
    floors = noise / np.asarray(gains, dtype=float)
    lo, hi = 0.0, floors.max() + total
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(0.0, mid - floors).sum() > total:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def dense_kriging_weights(locs, target, gamma):
    """Ordinary-Kriging weights by assembling and solving the bordered system."""
    locs = np.asarray(locs, dtype=float)
    m = len(locs)
    S = np.zeros((m + 1, m + 1))
    for i in range(m):
        for j in range(m):
            S[i, j] = 0.0 if i == j else gamma(np.linalg.norm(locs[i] - locs[j]))
    S[:m, m] = S[m, :m] = 1.0
    rhs = np.append([gamma(np.linalg.norm(p - np.asarray(target))) for p in locs], 1.0)
    sol = np.linalg.solve(S, rhs)
    return sol[:m], sol[m]


def hand_ssim(a, b, c1, c2):
    """Whole-map SSIM with explicit loops over the entries."""
    a = [float(v) for v in np.ravel(a)]
    b = [float(v) for v in np.ravel(b)]
    n = len(a)
    ma, mb = sum(a) / n, sum(b) / n
    va = sum((x - ma) ** 2 for x in a) / n
    vb = sum((y - mb) ** 2 for y in b) / n
    cov = sum((x - ma) * (y - mb) for x, y in zip(a, b)) / n
    return (2 * ma * mb + c1) * (2 * cov + c2) / ((ma**2 + mb**2 + c1) * (va + vb + c2))
