"""Exact dynamic mode decomposition.

A fitted model represents the snapshot at time index ``t`` as

    g(t) = Re( sum_j phi_j * lambda_j**t * b_j )

with ``t = 0`` the first training snapshot. Modes follow the exact-DMD
convention ``Phi = Xp V S^-1 W``, so they are eigenvectors of the full
operator ``Xp X^+`` restricted to the data.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, DivergenceWarning, NumericalError
from .grid import SnapshotPair

SVD_CUTOFF = 1e-12
DIVERGENCE_EPS = 1e-6
IMAG_TOL = 1e-8


def c_order(obj, names):
    """Store array fields C-ordered and read-only.

    Matrix products round differently for different memory layouts, so a
    model must not depend on how its arrays were produced or loaded.
    """
    for name in names:
        a = np.ascontiguousarray(getattr(obj, name))
        a.setflags(write=False)
        object.__setattr__(obj, name, a)


@dataclass(frozen=True, eq=False)
class DmdModel:
    """Modes, eigenvalues and amplitudes of a fitted decomposition.

    ``requested_rank`` is what the caller asked for; ``rank`` can be smaller
    when trailing singular values fell below the numerical cutoff.
    ``fit_residual`` is the relative Frobenius error of the training
    reconstruction.
    """

    modes: np.ndarray
    eigenvalues: np.ndarray
    amplitudes: np.ndarray
    n_train: int
    requested_rank: int
    fit_residual: float
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c_order(self, ("modes", "eigenvalues", "amplitudes"))

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def state_dim(self) -> int:
        return self.modes.shape[0]

    def diverges_at(self, t: int) -> bool:
        """True when forecasting ``t`` amplifies a mode with ``|lambda| > 1``."""
        return t >= self.n_train and bool(
            np.any(np.abs(self.eigenvalues) > 1.0 + DIVERGENCE_EPS)
        )


def vandermonde(eigenvalues, n_cols: int) -> np.ndarray:
    """Matrix with entry ``(j, k) = eigenvalues[j] ** k``, ``k = 0..n_cols-1``."""
    if n_cols < 1:
        raise DataError(f"n_cols must be at least 1, got {n_cols}")
    lam = np.asarray(eigenvalues, dtype=complex)
    return lam[:, None] ** np.arange(n_cols)[None, :]


def truncated_svd(X: np.ndarray, rank: int):
    """Rank-``rank`` SVD dropping singular values below ``SVD_CUTOFF * s_max``."""
    U, s, Vh = np.linalg.svd(X, full_matrices=False)
    keep = min(rank, int(np.sum(s > SVD_CUTOFF * s[0]))) if s[0] > 0 else 0
    if keep == 0:
        raise NumericalError("snapshot matrix is numerically zero")
    return U[:, :keep], s[:keep], Vh[:keep].conj().T


def fit_amplitudes(modes: np.ndarray, g1: np.ndarray) -> np.ndarray:
    """Least-squares amplitudes ``b`` with ``modes @ b ~ g1``."""
    return np.linalg.pinv(modes, rcond=SVD_CUTOFF) @ g1.astype(complex)


def mode_order(eigenvalues, amplitudes) -> np.ndarray:
    """Permutation sorting by descending ``|lambda|``, then ``|b|``, then phase."""
    mag = np.round(np.abs(eigenvalues), 12)
    amp = np.round(np.abs(amplitudes), 9)
    return np.lexsort((-np.angle(eigenvalues), -amp, -mag))


def sort_modes(eigenvalues, modes, amplitudes):
    order = mode_order(eigenvalues, amplitudes)
    return eigenvalues[order], modes[:, order], amplitudes[order]


def evolve(modes, eigenvalues, amplitudes, t) -> np.ndarray:
    """Complex state ``Phi diag(b) lambda**t``."""
    return modes @ (amplitudes * np.asarray(eigenvalues, dtype=complex) ** int(t))


def reconstruct(model, n_cols: int) -> np.ndarray:
    """``Phi diag(b) Vandermonde(lambda, n_cols)``, real part."""
    return (model.modes @ (model.amplitudes[:, None] * vandermonde(model.eigenvalues, n_cols))).real


def _relative_error(approx: np.ndarray, target: np.ndarray) -> float:
    denom = np.linalg.norm(target)
    err = np.linalg.norm(approx - target)
    return float(err / denom) if denom > 0 else float(err)


def finalize(eigenvalues, modes, X: np.ndarray, requested_rank: int, meta=None) -> DmdModel:
    """Fit amplitudes on the first column of ``X``, sort, and freeze a model."""
    amplitudes = fit_amplitudes(modes, X[:, 0])
    eigenvalues, modes, amplitudes = sort_modes(eigenvalues, modes, amplitudes)
    for a in (eigenvalues, modes, amplitudes):
        a.setflags(write=False)
    model = DmdModel(
        modes=modes,
        eigenvalues=eigenvalues,
        amplitudes=amplitudes,
        n_train=X.shape[1] + 1,
        requested_rank=requested_rank,
        fit_residual=0.0,
        meta=dict(meta or {}),
    )
    residual = _relative_error(reconstruct(model, X.shape[1]), X)
    object.__setattr__(model, "fit_residual", residual)
    return model


def check_rank(pair: SnapshotPair, rank: int, limit: int | None = None):
    limit = min(pair.state_dim, pair.n_pairs) if limit is None else limit
    if not 1 <= rank <= limit:
        raise DataError(f"rank must lie in [1, {limit}], got {rank}")
    if not (np.all(np.isfinite(pair.X)) and np.all(np.isfinite(pair.Xp))):
        raise DataError("snapshot matrices contain non-finite entries")


def dmd_on_matrices(X, Xp, rank):
    """Eigenvalues and exact modes (in the space of ``Xp``) for one pair."""
    U, s, V = truncated_svd(X, rank)
    XpV_s = (Xp @ V) / s
    A_tilde = U.conj().T @ XpV_s
    eigenvalues, W = np.linalg.eig(A_tilde)
    return eigenvalues, W, V, s


def dmd_fit(pair: SnapshotPair, rank: int) -> DmdModel:
    """Standard exact DMD of rank ``rank``.

    Parameters
    ----------
    pair : SnapshotPair
        Consecutive snapshot matrices.
    rank : int
        SVD truncation rank, at most ``min(M, N - 1)``.

    Returns
    -------
    DmdModel
    """
    check_rank(pair, rank)
    X, Xp = pair.X, pair.Xp
    eigenvalues, W, V, s = dmd_on_matrices(X, Xp, rank)
    modes = (Xp @ V) / s @ W
    return finalize(eigenvalues, modes, X, rank, {"variant": "dmd"})


def imag_residual(model, t: int) -> float:
    z = evolve(model.modes, model.eigenvalues, model.amplitudes, t)
    denom = np.linalg.norm(z.real)
    return float(np.linalg.norm(z.imag) / denom) if denom > 0 else float(np.linalg.norm(z.imag))


def dmd_state(model, t: int) -> np.ndarray:
    """Real state vector at time index ``t`` (reconstruction for ``t < N``).

    Forecasting with an eigenvalue outside the unit circle emits a
    :class:`DivergenceWarning` rather than failing.
    """
    if t < 0:
        raise DataError(f"time index must be non-negative, got {t}")
    if model.diverges_at(t):
        warnings.warn(
            f"forecast at t={t} uses modes with |lambda| up to "
            f"{np.abs(model.eigenvalues).max():.6f}",
            DivergenceWarning,
            stacklevel=2,
        )
    z = evolve(model.modes, model.eigenvalues, model.amplitudes, t)
    return z.real


def dmd_reconstruct_all(model) -> np.ndarray:
    """All training-window states as an ``M x (N-1)`` matrix."""
    return reconstruct(model, model.n_train - 1)
