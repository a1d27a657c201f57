"""The moment Hankel matrix, its spectrum, and the geometric-decay curve.

The central object is the T-by-T matrix with entries
``Z[i, j] = 2 / ((i+j)^3 - (i+j))`` (1-based indices). It is the second
moment matrix of the curve ``mu(alpha)(i) = (alpha - 1) * alpha^(i-1)``
over ``alpha`` uniform on [0, 1], hence symmetric positive semidefinite
with trace below 3/4 and exponentially decaying eigenvalues. Its top
eigenvectors are the wave filters used throughout the package.

Eigenvalues below ``NOISE_FLOOR`` are at double-precision noise level:
the corresponding eigenvectors form an orthonormal basis of the tail
subspace but carry no individually meaningful shape (see the ode module
for a stable way to generate deep filters).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

__all__ = [
    "NOISE_FLOOR",
    "HankelMatrix",
    "Spectrum",
    "MuVector",
    "build_hankel",
    "hilbert_matrix",
    "mu_curve",
    "top_eigenpairs",
    "full_spectrum",
    "spectral_tail_sum",
    "project_onto_filters",
    "quarter_power_apply",
]

# eigenvalues at or below this are treated as numerically unresolved
NOISE_FLOOR = 1e-12


@dataclass(frozen=True)
class HankelMatrix:
    """Dense moment Hankel matrix of a given size."""

    size: int
    entries: np.ndarray


@dataclass(frozen=True)
class Spectrum:
    """Top eigenpairs of a symmetric matrix, eigenvalues nonincreasing.

    ``phis`` holds eigenvectors as columns, sign-normalized so the first
    coordinate with magnitude above 1e-12 is positive.
    """

    sigmas: np.ndarray
    phis: np.ndarray
    source_size: int

    def __len__(self) -> int:
        return len(self.sigmas)

    @property
    def is_full(self) -> bool:
        return len(self.sigmas) == self.source_size


@dataclass(frozen=True)
class MuVector:
    """The length-T vector with entries (alpha - 1) * alpha^(i-1)."""

    alpha: float
    entries: np.ndarray


def build_hankel(T: int) -> HankelMatrix:
    """Construct the T-by-T matrix with entries 2/((i+j)^3 - (i+j))."""
    if T < 1:
        raise ValueError(f"matrix size must be positive, got {T}")
    idx = np.arange(1, T + 1)
    s = idx[:, None] + idx[None, :]
    return HankelMatrix(size=T, entries=2.0 / (s**3 - s))


def hilbert_matrix(T: int, theta: int = -1) -> np.ndarray:
    """Hilbert-family matrix with entries 1/(i+j+theta), 1-based indices."""
    if T < 1:
        raise ValueError(f"matrix size must be positive, got {T}")
    if theta <= -2:
        raise ValueError("theta must exceed -2 for positive definiteness")
    idx = np.arange(1, T + 1)
    return 1.0 / (idx[:, None] + idx[None, :] + float(theta))


def mu_curve(alpha: float, T: int) -> MuVector:
    """Evaluate the decay curve (alpha - 1) * alpha^(i-1) for i = 1..T.

    Uses the convention 0^0 = 1, so mu(0) = -e_1.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    if T < 1:
        raise ValueError(f"length must be positive, got {T}")
    powers = np.ones(T)
    if T > 1:
        powers[1:] = np.cumprod(np.full(T - 1, alpha))
    return MuVector(alpha=float(alpha), entries=(alpha - 1.0) * powers)


def _sign_normalize(vectors: np.ndarray) -> np.ndarray:
    out = vectors.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            out[:, j] = -col
    return out


def top_eigenpairs(H: HankelMatrix, k: int) -> Spectrum:
    """Top-k eigenpairs of a symmetric matrix, nonincreasing, sign-fixed.

    Raises ``ValueError`` for k outside [1, T]; eigensolver failures
    propagate as ``numpy.linalg.LinAlgError``.
    """
    T = H.size
    if not 1 <= k <= T:
        raise ValueError(f"need 1 <= k <= {T}, got k={k}")
    if k < T:
        w, v = scipy.linalg.eigh(H.entries, subset_by_index=[T - k, T - 1])
    else:
        w, v = np.linalg.eigh(H.entries)
    order = np.argsort(w)[::-1]
    return Spectrum(
        sigmas=w[order].copy(),
        phis=_sign_normalize(v[:, order]),
        source_size=T,
    )


@functools.lru_cache(maxsize=8)
def full_spectrum(T: int) -> Spectrum:
    """All eigenpairs of the size-T moment Hankel matrix (cached)."""
    return top_eigenpairs(build_hankel(T), T)


def spectral_tail_sum(full: Spectrum, k: int) -> float:
    """Sum of eigenvalues beyond index k, negatives clamped to zero."""
    if not full.is_full:
        raise ValueError("tail sums need the complete spectrum")
    if not 0 <= k <= full.source_size:
        raise ValueError(f"need 0 <= k <= {full.source_size}, got k={k}")
    return float(np.clip(full.sigmas[k:], 0.0, None).sum())


def project_onto_filters(v: np.ndarray, spec: Spectrum, k: int) -> np.ndarray:
    """Orthogonal projection of v onto the span of the first k eigenvectors."""
    if not 1 <= k <= len(spec):
        raise ValueError(f"need 1 <= k <= {len(spec)}, got k={k}")
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.source_size,):
        raise ValueError(
            f"vector length {v.shape} does not match spectrum size {spec.source_size}"
        )
    basis = spec.phis[:, :k]
    return basis @ (basis.T @ v)


def quarter_power_apply(spec: Spectrum, v: np.ndarray) -> np.ndarray:
    """Apply the matrix quarter power sum_j sigma_j^(1/4) phi_j phi_j^T to v.

    Requires the full spectrum and a unit vector; negative numerical
    eigenvalues are clamped to zero.
    """
    if not spec.is_full:
        raise ValueError("quarter power needs the complete spectrum")
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.source_size,):
        raise ValueError("vector length does not match spectrum size")
    if abs(np.linalg.norm(v) - 1.0) > 1e-8:
        raise ValueError("input must be a unit vector")
    roots = np.clip(spec.sigmas, 0.0, None) ** 0.25
    return spec.phis @ (roots * (spec.phis.T @ v))
