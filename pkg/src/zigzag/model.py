"""Gaussian targets, orthant truncations and the spectral quantities used for tuning."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from . import _kernels as K

__all__ = [
    "PrecisionOp",
    "DensePrecision",
    "CompoundSymmetricPrecision",
    "TridiagonalPrecision",
    "TruncatedGaussianTarget",
    "SpectralEstimate",
    "compound_symmetric_target",
    "ar1_target",
    "dense_target",
    "min_eigenvalue",
    "base_integration_time",
    "UNCONSTRAINED",
]

UNCONSTRAINED = 0

_EMPTY_1D = np.zeros(0)
_EMPTY_2D = np.zeros((0, 0))


class PrecisionOp:
    """Symmetric positive-definite operator with matvec and column access."""

    dim: int
    kind: int

    def matvec(self, w: np.ndarray) -> np.ndarray:
        w = np.ascontiguousarray(w, dtype=float)
        if w.shape != (self.dim,):
            raise ValueError(f"expected vector of length {self.dim}, got shape {w.shape}")
        out = np.empty(self.dim)
        K.op_matvec(*self.kernel_args(), w, out)
        return out

    __matmul__ = matvec

    def column(self, i: int) -> np.ndarray:
        out = np.zeros(self.dim)
        K.op_add_column(*self.kernel_args(), int(i), 1.0, out)
        return out

    def to_dense(self) -> np.ndarray:
        return np.column_stack([self.column(i) for i in range(self.dim)])

    def diagonal(self) -> np.ndarray:
        return np.array([self.column(i)[i] for i in range(self.dim)])

    def kernel_args(self) -> tuple:
        raise NotImplementedError

    def trace_inverse(self) -> float:
        """Trace of the covariance ``Phi^{-1}``."""
        raise NotImplementedError


@dataclass(frozen=True, eq=False)
class DensePrecision(PrecisionOp):
    matrix: np.ndarray
    kind: int = field(default=K.DENSE, init=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("precision matrix must be square")
        scale = np.max(np.abs(m)) if m.size else 0.0
        if scale > 0 and np.max(np.abs(m - m.T)) > 1e-8 * scale:
            raise ValueError("precision matrix is not symmetric")
        m = 0.5 * (m + m.T)
        try:
            np.linalg.cholesky(m)
        except np.linalg.LinAlgError:
            raise ValueError("precision matrix is not positive definite") from None
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def kernel_args(self):
        return (K.DENSE, self.matrix, _EMPTY_1D, _EMPTY_1D, 0.0, 0.0)

    def to_dense(self):
        return np.array(self.matrix)

    def trace_inverse(self):
        if self.dim > 2048:
            raise ValueError("dense covariance trace refused for d > 2048; use a Monte Carlo estimate")
        return float(np.trace(np.linalg.inv(self.matrix)))


@dataclass(frozen=True, eq=False)
class CompoundSymmetricPrecision(PrecisionOp):
    """Inverse of the unit-variance equicorrelation covariance.

    Stored as ``alpha * I + beta * 11^T`` so that a matvec costs O(d).
    """

    dim: int
    rho: float
    kind: int = field(default=K.COMPOUND, init=False)

    @property
    def alpha(self) -> float:
        return 1.0 / (1.0 - self.rho)

    @property
    def beta(self) -> float:
        return -self.alpha * self.rho / (1.0 + (self.dim - 1) * self.rho)

    def kernel_args(self):
        return (K.COMPOUND, _EMPTY_2D, _EMPTY_1D, _EMPTY_1D, self.alpha, self.beta)

    def trace_inverse(self):
        return float(self.dim)

    def eigenvalues(self) -> tuple[float, float]:
        """(smallest, largest) eigenvalue in closed form."""
        small = 1.0 / (1.0 + (self.dim - 1) * self.rho)
        return (small, self.alpha) if self.dim > 1 else (small, small)


@dataclass(frozen=True, eq=False)
class TridiagonalPrecision(PrecisionOp):
    diag: np.ndarray
    off: np.ndarray
    kind: int = field(default=K.TRIDIAG, init=False)

    def __post_init__(self):
        diag = np.array(self.diag, dtype=float)
        off = np.array(self.off, dtype=float)
        if off.shape != (max(diag.size - 1, 0),):
            raise ValueError("off-diagonal must have length d - 1")
        # kernels index off[i] for i < d - 1 only; pad so the array is never empty
        padded = np.append(off, 0.0)
        diag.setflags(write=False)
        padded.setflags(write=False)
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "off", padded)

    @property
    def dim(self) -> int:
        return self.diag.size

    def kernel_args(self):
        return (K.TRIDIAG, _EMPTY_2D, self.diag, self.off, 0.0, 0.0)

    def trace_inverse(self):
        return float(np.trace(np.linalg.inv(self.to_dense())))


@dataclass(frozen=True, eq=False)
class TruncatedGaussianTarget:
    """``N(mean, precision^{-1})`` restricted to ``{sign(x_i) = orthant_i}``.

    ``orthant`` entries are +1, -1, or 0 for an unconstrained coordinate.
    """

    mean: np.ndarray
    precision: PrecisionOp
    orthant: np.ndarray
    name: str = "gaussian"

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        orth = np.array(self.orthant, dtype=np.int8)
        d = self.precision.dim
        if mean.shape != (d,) or orth.shape != (d,):
            raise ValueError(f"mean and orthant must have length {d}")
        if not np.all(np.isin(orth, (-1, 0, 1))):
            raise ValueError("orthant entries must be +1, -1 or 0")
        mean.setflags(write=False)
        orth.setflags(write=False)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "orthant", orth)

    @property
    def dim(self) -> int:
        return self.precision.dim

    @property
    def truncated(self) -> bool:
        return bool(np.any(self.orthant != 0))

    def in_support(self, x) -> bool:
        """Membership in the closed orthant (walls included)."""
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.orthant * x >= 0))

    def potential(self, x) -> float:
        r = np.asarray(x, dtype=float) - self.mean
        return 0.5 * float(r @ self.precision.matvec(r))

    def gradient(self, x) -> np.ndarray:
        return self.precision.matvec(np.asarray(x, dtype=float) - self.mean)

    def kernel_args(self) -> tuple:
        return self.precision.kernel_args()

    def with_orthant(self, orthant) -> "TruncatedGaussianTarget":
        orth = np.broadcast_to(np.asarray(orthant, dtype=np.int8), (self.dim,))
        return TruncatedGaussianTarget(self.mean, self.precision, orth, self.name)

    def default_start(self) -> np.ndarray:
        """A point strictly inside the support."""
        return np.where(self.orthant != 0, self.orthant.astype(float), self.mean)


def compound_symmetric_target(d: int, rho: float, orthant=0) -> TruncatedGaussianTarget:
    """Zero-mean, unit-variance target with all pairwise correlations ``rho``."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not 0.0 <= rho < 1.0:
        raise ValueError(f"rho must lie in [0, 1), got {rho}")
    op = CompoundSymmetricPrecision(int(d), float(rho))
    orth = np.broadcast_to(np.asarray(orthant, dtype=np.int8), (d,))
    return TruncatedGaussianTarget(np.zeros(d), op, orth, name=f"cs(d={d},rho={rho})")


def ar1_target(d: int, rho: float, orthant=0) -> TruncatedGaussianTarget:
    """Stationary lag-1 autoregression with unit marginal variances."""
    if d < 1:
        raise ValueError("d must be >= 1")
    if not -1.0 < rho < 1.0:
        raise ValueError(f"|rho| must be < 1, got {rho}")
    s = 1.0 - rho * rho
    if d == 1:
        diag = np.ones(1)
        off = np.zeros(0)
    else:
        diag = np.full(d, (1.0 + rho * rho) / s)
        diag[0] = diag[-1] = 1.0 / s
        off = np.full(d - 1, -rho / s)
    orth = np.broadcast_to(np.asarray(orthant, dtype=np.int8), (d,))
    return TruncatedGaussianTarget(
        np.zeros(d), TridiagonalPrecision(diag, off), orth, name=f"ar1(d={d},rho={rho})"
    )


def dense_target(mean, precision, orthant=0, name="dense") -> TruncatedGaussianTarget:
    op = DensePrecision(np.asarray(precision, dtype=float))
    orth = np.broadcast_to(np.asarray(orthant, dtype=np.int8), (op.dim,))
    return TruncatedGaussianTarget(np.asarray(mean, dtype=float), op, orth, name=name)


@dataclass(frozen=True)
class SpectralEstimate:
    nu_min: float
    iterations_used: int
    converged: bool


def min_eigenvalue(op: PrecisionOp, tol: float = 1e-10, max_iters: int = 200, rng=None) -> SpectralEstimate:
    """Smallest eigenvalue of ``op`` by Lanczos with full reorthogonalization.

    Iterations stop once the smallest Ritz value changes by less than ``tol``
    (relative) between successive iterations. A zero ``beta`` means the Krylov
    space is invariant; the recurrence then restarts from a fresh random
    vector orthogonal to the basis built so far. ``iterations_used`` counts
    matvecs.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    d = op.dim
    limit = min(max_iters, d)
    basis = np.empty((limit, d))
    alphas = []
    betas = []

    def fresh_start(k):
        for _ in range(10):
            w = rng.standard_normal(d)
            if k:
                w -= basis[:k].T @ (basis[:k] @ w)
                w -= basis[:k].T @ (basis[:k] @ w)
            nrm = np.linalg.norm(w)
            if nrm > 1e-8 * math.sqrt(d):
                return w / nrm
        return None

    q = fresh_start(0)
    previous = math.inf
    estimate = math.inf
    for k in range(limit):
        basis[k] = q
        w = op.matvec(q)
        a = float(q @ w)
        w -= a * q
        if k:
            w -= betas[-1] * basis[k - 1]
        # full reorthogonalization, twice for stability
        w -= basis[: k + 1].T @ (basis[: k + 1] @ w)
        w -= basis[: k + 1].T @ (basis[: k + 1] @ w)
        alphas.append(a)
        if len(alphas) == 1:
            estimate = alphas[0]
        else:
            estimate = float(
                eigh_tridiagonal(np.array(alphas), np.array(betas), eigvals_only=True,
                                 select="i", select_range=(0, 0))[0]
            )
        if k > 0 and abs(estimate - previous) <= tol * abs(estimate):
            return SpectralEstimate(estimate, k + 1, True)
        previous = estimate
        if k + 1 == limit:
            break
        b = float(np.linalg.norm(w))
        if b <= 1e-12 * max(abs(a), 1.0):
            q = fresh_start(k + 1)
            if q is None:
                break
            b = 0.0
        else:
            q = w / b
        betas.append(b)
    return SpectralEstimate(estimate, len(alphas), len(alphas) == d)


def base_integration_time(op: PrecisionOp, t_rel: float = 0.1, **lanczos) -> float:
    """Base NUTS integration time ``t_rel / sqrt(nu_min(Phi))``."""
    if t_rel <= 0:
        raise ValueError("t_rel must be positive")
    est = min_eigenvalue(op, **lanczos)
    if not est.converged:
        raise RuntimeError(
            f"Lanczos did not converge after {est.iterations_used} iterations "
            f"(last estimate {est.nu_min:.6g})"
        )
    return t_rel / math.sqrt(est.nu_min)
