"""Filter banks and convolutional featurization of input sequences.

A filter bank packages k length-T filters scaled by the quarter power of
their eigenvalues. Featurization convolves each input coordinate with
each scaled filter over strictly-past inputs (indices before time 1 are
zero), then appends the previous input, the current input, and -- in
online mode -- the previous output:

    features(t) = [conv block (k*n) | x_{t-1} (n) | x_t (n) | y_{t-1} (m)]

so the online feature width is k' = n*k + 2n + m and the batch width is
n*k + 2n.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import fft
from .hankel import NOISE_FLOOR, build_hankel, hilbert_matrix, top_eigenpairs

__all__ = [
    "EIGEN_K_CAP",
    "FilterBank",
    "FeatureLayout",
    "FeatureVector",
    "FeatureMatrix",
    "build_filter_bank",
    "featurize_online",
    "featurize_batch",
    "featurize_batch_naive",
    "augment_alternating",
    "augment_hint",
]

# beyond this many filters, double-precision eigenvectors of the moment
# matrix are noise for every practical horizon; deeper banks must use the
# ode method
EIGEN_K_CAP = 40

_SIGMA_MIN = np.finfo(float).tiny


@dataclass(frozen=True)
class FilterBank:
    """k filters of length `horizon` with their eigenvalue scalings.

    ``scaled_filters[j] = sigmas[j]**0.25 * phis[j]`` row-wise. Eigenvalues
    are clamped to the smallest positive normal float so quarter powers
    stay finite; values at or below ``NOISE_FLOOR`` mark filters whose
    shapes are numerically unreliable (eigen/hilbert methods).

    ``lambdas`` and ``sigma_extrapolated`` are populated by the ode method
    only: operator eigenvalues per filter, and which sigmas were filled in
    by geometric extrapolation rather than matched to the moment matrix.
    """

    horizon: int
    k: int
    phis: np.ndarray
    sigmas: np.ndarray
    scaled_filters: np.ndarray
    method: str
    lambdas: Optional[np.ndarray] = None
    sigma_extrapolated: Optional[np.ndarray] = None


@dataclass(frozen=True)
class FeatureLayout:
    """Block structure of a feature vector."""

    n: int
    k: int
    m: int
    include_y: bool

    @property
    def width(self) -> int:
        return self.n * self.k + 2 * self.n + (self.m if self.include_y else 0)

    def conv_block(self, j: int) -> slice:
        """Columns of the j-th (0-based) filter's convolution block."""
        return slice(j * self.n, (j + 1) * self.n)

    @property
    def x_prev_block(self) -> slice:
        return slice(self.n * self.k, self.n * self.k + self.n)

    @property
    def x_block(self) -> slice:
        return slice(self.n * self.k + self.n, self.n * self.k + 2 * self.n)

    @property
    def y_block(self) -> slice:
        if not self.include_y:
            raise ValueError("layout has no trailing output block")
        return slice(self.n * self.k + 2 * self.n, self.width)


@dataclass(frozen=True)
class FeatureVector:
    entries: np.ndarray
    layout: FeatureLayout


@dataclass(frozen=True)
class FeatureMatrix:
    """Features for every time step of a sequence, one row per step."""

    entries: np.ndarray
    layout: FeatureLayout


def _eigen_bank(T: int, k: int, method: str) -> FilterBank:
    matrix = build_hankel(T) if method == "eigen" else None
    if method == "hilbert":
        from .hankel import HankelMatrix

        matrix = HankelMatrix(size=T, entries=hilbert_matrix(T, theta=-1))
    spec = top_eigenpairs(matrix, k)
    sig = np.clip(spec.sigmas, _SIGMA_MIN, None)
    phis = spec.phis.T.copy()
    return FilterBank(
        horizon=T,
        k=k,
        phis=phis,
        sigmas=sig,
        scaled_filters=sig[:, None] ** 0.25 * phis,
        method=method,
    )


def build_filter_bank(T: int, k: int, method: str = "eigen") -> FilterBank:
    """Build a bank of k prediction filters of length T.

    Methods: ``eigen`` (top eigenvectors of the moment Hankel matrix,
    k capped at min(T, 40)), ``hilbert`` (eigenvectors of the matrix with
    entries 1/(i+j-1), same cap), ``ode`` (stable tridiagonal-operator
    filters, any k up to T).
    """
    if T < 1:
        raise ValueError(f"horizon must be positive, got {T}")
    if k < 1:
        raise ValueError(f"filter count must be positive, got {k}")
    if method in ("eigen", "hilbert"):
        cap = min(T, EIGEN_K_CAP)
        if k > cap:
            raise ValueError(
                f"method '{method}' supports at most {cap} filters at T={T} "
                f"(requested {k}); use method 'ode' for deeper banks"
            )
        return _eigen_bank(T, k, method)
    if method == "ode":
        from . import ode

        return ode.ode_filter_bank(T, k)
    raise ValueError(f"unknown filter method '{method}'")


def _as_2d(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ValueError(f"{name} must be 2-D (time, coordinates), got shape {x.shape}")
    return x


def featurize_online(
    x_history: np.ndarray, y_prev: np.ndarray, bank: FilterBank
) -> FeatureVector:
    """Features at the current step from inputs x_1..x_t and the last output.

    ``x_history`` is (t, n) with the current input last; inputs before
    time 1 are treated as zero.
    """
    xs = _as_2d(x_history, "x_history")
    t, n = xs.shape
    if t < 1:
        raise ValueError("x_history must contain at least the current input")
    y_prev = np.atleast_1d(np.asarray(y_prev, dtype=float))
    layout = FeatureLayout(n=n, k=bank.k, m=len(y_prev), include_y=True)
    out = np.zeros(layout.width)
    depth = min(t - 1, bank.horizon - 1)
    if depth > 0:
        past = xs[t - 2 :: -1][:depth]  # x_{t-1}, x_{t-2}, ...
        out[: n * bank.k] = (bank.scaled_filters[:, :depth] @ past).ravel()
    if t >= 2:
        out[layout.x_prev_block] = xs[-2]
    out[layout.x_block] = xs[-1]
    out[layout.y_block] = y_prev
    return FeatureVector(entries=out, layout=layout)


def _conv_blocks_fft(xs: np.ndarray, bank: FilterBank) -> np.ndarray:
    T, n = xs.shape
    # c[j, i, s] = sum_u filt[j, u] * x[s - u, i]; feature time t picks s = t-2
    c = fft.convolve_full(bank.scaled_filters[:, None, :], xs.T[None, :, :])
    blocks = np.zeros((T, bank.k, n))
    if T > 1:
        blocks[1:] = np.moveaxis(c[:, :, : T - 1], -1, 0)
    return blocks.reshape(T, bank.k * n)


def _batch_from_blocks(xs: np.ndarray, conv: np.ndarray, bank: FilterBank) -> FeatureMatrix:
    T, n = xs.shape
    layout = FeatureLayout(n=n, k=bank.k, m=0, include_y=False)
    out = np.zeros((T, layout.width))
    out[:, : n * bank.k] = conv
    out[1:, layout.x_prev_block] = xs[:-1]
    out[:, layout.x_block] = xs
    return FeatureMatrix(entries=out, layout=layout)


def featurize_batch(inputs: np.ndarray, bank: FilterBank) -> FeatureMatrix:
    """Features for all time steps in one pass (FFT convolutions)."""
    xs = _as_2d(inputs, "inputs")
    if xs.shape[0] != bank.horizon:
        raise ValueError(
            f"input length {xs.shape[0]} does not match bank horizon {bank.horizon}"
        )
    return _batch_from_blocks(xs, _conv_blocks_fft(xs, bank), bank)


def featurize_batch_naive(inputs: np.ndarray, bank: FilterBank) -> FeatureMatrix:
    """Direct-summation reference path for the FFT featurizer."""
    xs = _as_2d(inputs, "inputs")
    if xs.shape[0] != bank.horizon:
        raise ValueError(
            f"input length {xs.shape[0]} does not match bank horizon {bank.horizon}"
        )
    T, n = xs.shape
    conv = np.zeros((T, bank.k * n))
    for t in range(2, T + 1):
        depth = min(t - 1, bank.horizon - 1)
        past = xs[t - 2 :: -1][:depth]
        conv[t - 1] = (bank.scaled_filters[:, :depth] @ past).ravel()
    return _batch_from_blocks(xs, conv, bank)


def augment_alternating(inputs: np.ndarray) -> np.ndarray:
    """Append sign-alternating copies: x'_t = [x_t, (-1)^t x_t], t from 1."""
    xs = _as_2d(inputs, "inputs")
    signs = np.where(np.arange(1, xs.shape[0] + 1) % 2 == 1, -1.0, 1.0)
    return np.hstack([xs, signs[:, None] * xs])


def augment_hint(inputs: np.ndarray, hint: np.ndarray) -> np.ndarray:
    """Prepend a time-0 impulse carrying a hidden-state hint.

    Output has width n + d' and length T + 1: the first row is
    (0_n, hint) and the hint coordinates are zero afterwards.
    """
    xs = _as_2d(inputs, "inputs")
    hint = np.atleast_1d(np.asarray(hint, dtype=float))
    T, n = xs.shape
    out = np.zeros((T + 1, n + len(hint)))
    out[0, n:] = hint
    out[1:, :n] = xs
    return out
