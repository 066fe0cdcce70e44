"""Compressed DMD and kernel extended DMD.

cDMD runs the DMD eigenproblem on randomly projected snapshots and lifts the
modes back with the uncompressed data. Kernel eDMD works with Gram matrices
of the training snapshots only; the feature map is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist, pdist

from .dmd import (
    DIVERGENCE_EPS,
    SVD_CUTOFF,
    DmdModel,
    c_order,
    check_rank,
    dmd_on_matrices,
    dmd_state,
    finalize,
    fit_amplitudes,
    mode_order,
    reconstruct,
)
from .errors import ConfigError, DataError, NumericalError
from .grid import SnapshotPair

COMPRESSION_KINDS = ("gaussian", "sparse-sign", "identity")
KERNEL_KINDS = ("rbf", "polynomial")


@dataclass(frozen=True)
class CompressionSpec:
    p: int
    kind: str = "gaussian"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in COMPRESSION_KINDS:
            raise ConfigError(f"unknown compression kind {self.kind!r}")
        if self.p < 1:
            raise ConfigError(f"compressed dimension must be positive, got {self.p}")


def default_compressed_dim(rank: int, m: int) -> int:
    return min(max(4 * rank, 64), m)


def make_compression(spec: CompressionSpec, m: int) -> np.ndarray:
    """The ``p x m`` compression matrix described by ``spec``.

    gaussian entries are i.i.d. N(0, 1/p); sparse-sign entries are +-1/sqrt(p)
    with probability 1/6 each and zero otherwise; identity requires p == m.
    """
    if spec.p > m:
        raise DataError(f"compressed dimension {spec.p} exceeds state dimension {m}")
    if spec.kind == "identity":
        if spec.p != m:
            raise DataError("identity compression needs p equal to the state dimension")
        return np.eye(m)
    rng = np.random.default_rng([int(spec.seed), 17])
    if spec.kind == "gaussian":
        return rng.standard_normal((spec.p, m)) / np.sqrt(spec.p)
    u = rng.random((spec.p, m))
    signs = np.where(u < 1 / 6, 1.0, np.where(u < 1 / 3, -1.0, 0.0))
    return signs / np.sqrt(spec.p)


def cdmd_fit(pair: SnapshotPair, spec: CompressionSpec, rank: int) -> DmdModel:
    """Compressed DMD.

    The eigenproblem is solved on ``(C X, C Xp)``; full-state modes are then
    recovered as ``Xp V_c S_c^-1 W_c`` from the uncompressed snapshots.
    """
    check_rank(pair, rank)
    if not rank <= spec.p:
        raise DataError(f"compressed dimension {spec.p} is below the rank {rank}")
    C = make_compression(spec, pair.state_dim)
    eigenvalues, W, V, s = dmd_on_matrices(C @ pair.X, C @ pair.Xp, rank)
    modes = (pair.Xp @ V) / s @ W
    meta = {"variant": "cdmd", "compression": spec}
    return finalize(eigenvalues, modes, pair.X, rank, meta)


@dataclass(frozen=True)
class KernelSpec:
    """Kernel for eDMD.

    rbf: ``exp(-|a-b|^2 / (2 bandwidth^2))`` with ``bandwidth=None`` meaning
    "median pairwise snapshot distance, resolved at fit time".
    polynomial: ``(a.b / M + offset) ** degree``.
    """

    kind: str = "rbf"
    bandwidth: float | None = None
    degree: int = 2
    offset: float = 1.0

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ConfigError(f"unknown kernel kind {self.kind!r}")
        if self.bandwidth is not None and not self.bandwidth > 0:
            raise ConfigError(f"kernel bandwidth must be positive, got {self.bandwidth}")
        if int(self.degree) != self.degree or self.degree < 1:
            raise ConfigError(f"polynomial degree must be a positive integer, got {self.degree}")

    @classmethod
    def linear(cls) -> KernelSpec:
        return cls("polynomial", degree=1, offset=0.0)


def median_bandwidth(X: np.ndarray) -> float:
    """Median pairwise distance between the columns of ``X``."""
    d = pdist(X.T)
    h = float(np.median(d)) if d.size else 0.0
    return h if h > 0 else 1.0


def resolve_kernel(kernel: KernelSpec, X: np.ndarray) -> KernelSpec:
    if kernel.kind == "rbf" and kernel.bandwidth is None:
        return replace(kernel, bandwidth=median_bandwidth(X))
    return kernel


def kernel_gram(A: np.ndarray, B: np.ndarray, kernel: KernelSpec) -> np.ndarray:
    """Entry ``(i, j) = k(A[:, i], B[:, j])``."""
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    if A.shape[0] != B.shape[0]:
        raise DataError(f"state dimensions differ: {A.shape[0]} vs {B.shape[0]}")
    if kernel.kind == "rbf":
        if kernel.bandwidth is None or not kernel.bandwidth > 0:
            raise ConfigError("rbf kernel needs a positive bandwidth")
        d2 = cdist(A.T, B.T, "sqeuclidean")
        return np.exp(-d2 / (2.0 * kernel.bandwidth**2))
    return (A.T @ B / A.shape[0] + kernel.offset) ** kernel.degree


@dataclass(frozen=True, eq=False)
class EdmdModel:
    """Kernel eDMD in spectral form.

    Eigenfunction ``j`` evaluated at a state ``x`` is
    ``kernel_gram(x, X, kernel) @ coefficients[:, j]``.
    ``koopman_residual`` measures how well the eigenfunction values at the
    shifted snapshots equal the lambda-scaled values at the originals.
    """

    X: np.ndarray
    kernel: KernelSpec
    eigenvalues: np.ndarray
    coefficients: np.ndarray
    modes: np.ndarray
    amplitudes: np.ndarray
    n_train: int
    requested_rank: int
    fit_residual: float
    koopman_residual: float

    def __post_init__(self):
        c_order(self, ("X", "eigenvalues", "coefficients", "modes", "amplitudes"))

    @property
    def rank(self) -> int:
        return self.eigenvalues.shape[0]

    @property
    def state_dim(self) -> int:
        return self.modes.shape[0]

    def diverges_at(self, t: int) -> bool:
        return t >= self.n_train and bool(
            np.any(np.abs(self.eigenvalues) > 1.0 + DIVERGENCE_EPS)
        )

    def eigenfunctions(self, Y: np.ndarray) -> np.ndarray:
        """Eigenfunction values at the columns of ``Y`` (one row per column)."""
        Y = np.asarray(Y, dtype=float).reshape(self.X.shape[0], -1)
        return kernel_gram(Y, self.X, self.kernel) @ self.coefficients


def edmd_fit(pair: SnapshotPair, kernel: KernelSpec, rank: int) -> EdmdModel:
    """Kernel extended DMD of rank ``rank``.

    With ``G = k(X, X) = Q S^2 Q^T`` truncated to ``rank`` and
    ``A = k(Xp, X)``, the reduced Koopman matrix is
    ``K = S^-1 Q^T A Q S^-1``; its eigenvectors ``v`` give eigenfunction
    values ``Q S v`` on the training snapshots. State modes are the
    least-squares regression of ``X`` on those values.
    """
    check_rank(pair, rank, limit=pair.n_pairs)
    X, Xp = pair.X, pair.Xp
    kernel = resolve_kernel(kernel, X)
    G = kernel_gram(X, X, kernel)
    G = 0.5 * (G + G.T)
    A = kernel_gram(Xp, X, kernel)

    evals, Q = np.linalg.eigh(G)
    order = np.argsort(evals)[::-1]
    evals, Q = evals[order], Q[:, order]
    if not evals[0] > 0:
        raise NumericalError("Gram matrix has no positive eigenvalue")
    keep = min(rank, int(np.sum(evals > SVD_CUTOFF * evals[0])))
    Q = Q[:, :keep]
    s = np.sqrt(evals[:keep])

    K = (Q.T @ A @ Q) / np.outer(s, s)
    eigenvalues, V = np.linalg.eig(K)
    coefficients = (Q / s) @ V
    values_x = (Q * s) @ V
    values_y = A @ coefficients

    modes = np.linalg.lstsq(values_x, X.T.astype(complex), rcond=None)[0].T
    amplitudes = fit_amplitudes(modes, X[:, 0])
    order = mode_order(eigenvalues, amplitudes)
    eigenvalues, modes, amplitudes = eigenvalues[order], modes[:, order], amplitudes[order]
    coefficients, values_x, values_y = coefficients[:, order], values_x[:, order], values_y[:, order]
    denom = np.linalg.norm(values_x)
    koopman_residual = float(np.linalg.norm(values_y - values_x * eigenvalues) / denom)

    for a in (eigenvalues, coefficients, modes, amplitudes):
        a.setflags(write=False)
    model = EdmdModel(
        X=X,
        kernel=kernel,
        eigenvalues=eigenvalues,
        coefficients=coefficients,
        modes=modes,
        amplitudes=amplitudes,
        n_train=X.shape[1] + 1,
        requested_rank=rank,
        fit_residual=0.0,
        koopman_residual=koopman_residual,
    )
    approx = reconstruct(model, X.shape[1])
    residual = np.linalg.norm(approx - X) / max(np.linalg.norm(X), 1e-300)
    object.__setattr__(model, "fit_residual", float(residual))
    return model


def edmd_state(model: EdmdModel, t: int) -> np.ndarray:
    """Real state at time index ``t``, same conventions as :func:`dmd_state`."""
    return dmd_state(model, t)
