"""Windowed-gridding non-uniform FFTs with direct-summation oracles.

Two transform directions back the planar reconstruction code:

* NER ("non-equispaced range"): evaluate the DFT of N equispaced samples
  at arbitrary real frequencies ``kappa``,

      out_l = sum_{n=0}^{N-1} u_n exp(-2j*pi*kappa_l*n/N).

* NED ("non-equispaced data"): accumulate M samples taken at arbitrary
  positions (in grid units, centered) onto a centered integer frequency
  grid,

      out_j = sum_m v_m exp(-2j*pi*(j . x_m)/N),   j in [-N/2, N/2).

Both fast paths share one recipe: an oversampled FFT (nominal factor
``c``, length rounded up to an even size with small prime factors) plus
a 2K-bin Kaiser-Bessel window per target.  The window pair is

    psi(theta)  = I0(beta * sqrt(alpha^2 - theta^2)),  |theta| <= alpha,
    psi_hat(x)  = 2*alpha * sinh(s)/s,  s = alpha*sqrt(beta^2 - x^2),

with sinh continued as sin once |x| passes beta (``window_ft_eval`` is
exactly the transform integral of ``window_eval``).  Sample-domain
windows are evaluated on theta in [-pi, pi), so alpha must exceed pi;
admissibility caps it below pi*(2c - 1).  The default shape puts the
first tail zero of psi_hat at the truncation edge K/c, which lands the
fast/direct mismatch near 1e-11 relative for K=6, c=2.

Plans are immutable after construction and execution is pure, so a plan
may be shared freely across threads.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, replace

import numpy as np
import scipy.fft as sfft
from scipy.special import i0

from .errors import ParameterError

__all__ = [
    "WindowSpec",
    "window_eval",
    "window_ft_eval",
    "NerPlan",
    "NedPlan",
    "nufft_ner",
    "nufft_ned",
    "nudft_ner_direct",
    "nudft_ned_direct",
    "fft_centered",
]

# Fraction of the admissible support bound pi*(2c-1) used by default.
# Kept strictly below 1 so resolved specs satisfy alpha < pi*(2c-1).
_ALPHA_FRACTION = 0.999


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("PAT_THREADS", "1")))
    except ValueError:
        return 1


def _fft(a, n=None, axis=-1):
    return sfft.fft(a, n=n, axis=axis, workers=_workers())


def _fftn(a, axes=None):
    return sfft.fftn(a, axes=axes, workers=_workers())


def _ifftn(a, axes=None):
    return sfft.ifftn(a, axes=axes, workers=_workers())


def next_even_fast_len(target: float) -> int:
    """Smallest even integer >= target with small prime factors."""
    n = int(math.ceil(target))
    n = sfft.next_fast_len(max(n, 2))
    while n % 2:
        n = sfft.next_fast_len(n + 1)
    return n


@dataclass(frozen=True)
class WindowSpec:
    """Kaiser-Bessel gridding window parameters.

    Attributes:
        c: oversampling factor, > 1.
        K: interpolation half-width; 2K oversampled bins are kept per
            target.
        alpha: window support half-width in angular units.  ``None``
            selects ``0.999 * pi * (2c - 1)`` at plan time (using the
            effective oversampling after FFT-length rounding).
        beta: window shape.  ``None`` places the first tail zero of the
            window transform at the truncation edge K/c, which damps
            the leading discarded term (the one that dominates for
            on-grid targets): ``beta = sqrt((K/c)^2 - (pi/alpha)^2)``.
    """

    c: float = 2.0
    K: int = 6
    alpha: float | None = None
    beta: float | None = None

    def __post_init__(self):
        if not np.isfinite(self.c) or self.c <= 1.0:
            raise ParameterError(f"oversampling factor must exceed 1, got {self.c}")
        if int(self.K) != self.K or self.K < 1:
            raise ParameterError(f"interpolation half-width K must be an integer >= 1, got {self.K}")
        if self.alpha is not None:
            self._check_alpha(self.alpha, self.c)
        if self.beta is not None and (not np.isfinite(self.beta) or self.beta <= 0):
            raise ParameterError(f"window shape beta must be positive, got {self.beta}")

    @staticmethod
    def _check_alpha(alpha: float, c: float) -> None:
        hi = math.pi * (2.0 * c - 1.0)
        if not (alpha > c and alpha < hi):
            raise ParameterError(f"window support alpha={alpha} outside admissible range ({c}, {hi})")
        if alpha <= math.pi:
            # the window is sampled on [-pi, pi) and must stay positive there
            raise ParameterError(f"window support alpha={alpha} must exceed pi")

    def resolved(self, c_eff: float | None = None) -> "WindowSpec":
        """Fill in concrete alpha/beta for an (effective) oversampling."""
        c = self.c if c_eff is None else c_eff
        if c_eff is not None and c_eff < self.c:
            raise ParameterError("effective oversampling below requested factor")
        alpha = self.alpha
        if alpha is None:
            alpha = _ALPHA_FRACTION * math.pi * (2.0 * c - 1.0)
        self._check_alpha(alpha, c)
        beta = self.beta
        if beta is None:
            radicand = (self.K / c) ** 2 - (math.pi / alpha) ** 2
            if radicand > 0:
                beta = math.sqrt(radicand)
            else:
                beta = math.pi * self.K * (2.0 - 1.0 / c) / alpha
        return replace(self, c=c, alpha=alpha, beta=beta)


def _resolved(spec: WindowSpec | None) -> WindowSpec:
    spec = spec if spec is not None else WindowSpec()
    if spec.alpha is None or spec.beta is None:
        spec = spec.resolved()
    return spec


def window_eval(spec: WindowSpec, theta):
    """Sample-domain window I0(beta*sqrt(alpha^2 - theta^2)), 0 outside."""
    spec = _resolved(spec)
    theta = np.asarray(theta, dtype=np.float64)
    inside = np.abs(theta) <= spec.alpha
    arg = spec.beta * np.sqrt(np.maximum(spec.alpha**2 - theta**2, 0.0))
    return np.where(inside, i0(arg), 0.0)


def window_ft_eval(spec: WindowSpec, x):
    """Transform integral of the window, int psi(theta) exp(i x theta) dtheta.

    Equals 2*alpha*sinh(s)/s with s = alpha*sqrt(beta^2 - x^2); the sinh
    turns into sin when the radicand goes negative.
    """
    spec = _resolved(spec)
    x = np.asarray(x, dtype=np.float64)
    t = spec.alpha**2 * (spec.beta**2 - x * x)  # signed s^2
    out = np.empty_like(t)
    small = np.abs(t) < 1e-9
    pos = (t >= 0) & ~small
    neg = (t < 0) & ~small
    s = np.sqrt(np.abs(t[pos]))
    out[pos] = np.sinh(s) / s
    s = np.sqrt(np.abs(t[neg]))
    out[neg] = np.sin(s) / s
    ts = t[small]
    out[small] = 1.0 + ts / 6.0 + ts * ts / 120.0
    return 2.0 * spec.alpha * out


# ---------------------------------------------------------------------------
# direct oracles
# ---------------------------------------------------------------------------

def nudft_ner_direct(u, kappas):
    """O(N*M) reference: sum_n u_n exp(-2j*pi*kappa*n/N) along the last axis.

    ``kappas`` is a 1-D target vector shared by all batch rows, or an
    array whose leading shape matches the batch shape of ``u`` for
    per-row targets.
    """
    u = np.asarray(u, dtype=np.complex128)
    kappas = np.asarray(kappas, dtype=np.float64)
    n = u.shape[-1]
    grid = np.arange(n)
    if kappas.ndim == 1:
        ew = np.exp(-2j * np.pi * np.outer(kappas, grid) / n)
        return np.einsum("...n,mn->...m", u, ew)
    if kappas.shape[:-1] != u.shape[:-1]:
        raise ParameterError("per-row kappas must match the batch shape of u")
    ub = u.reshape(-1, n)
    kb = kappas.reshape(-1, kappas.shape[-1])
    out = np.empty(kb.shape, dtype=np.complex128)
    for r in range(ub.shape[0]):
        ew = np.exp(-2j * np.pi * np.outer(kb[r], grid) / n)
        out[r] = ew @ ub[r]
    return out.reshape(kappas.shape)


def nudft_ned_direct(positions, values, out_dims):
    """Exact non-equispaced-data DFT onto a centered grid.

    Args:
        positions: (M, d) sample positions in grid units, each axis in
            [-N_i/2, N_i/2).  A 1-D array is accepted for d = 1.
        values: (M,) or (M, B) complex samples.
        out_dims: output grid lengths (each even).

    Returns:
        Complex grid of shape ``(*out_dims)`` (or ``(*out_dims, B)``) in
        centered index order: index 0 along axis i is frequency -N_i/2.
    """
    positions, values, out_dims = _check_ned_inputs(positions, values, out_dims)
    freqs = [np.arange(-n // 2, n // 2) for n in out_dims]
    phase = np.zeros((int(np.prod(out_dims)), positions.shape[0]))
    mesh = np.meshgrid(*freqs, indexing="ij")
    for ax, n in enumerate(out_dims):
        phase += np.outer(mesh[ax].ravel(), positions[:, ax]) / n
    ew = np.exp(-2j * np.pi * phase)
    out = ew @ values
    return out.reshape(tuple(out_dims) + values.shape[1:])


def _check_ned_inputs(positions, values, out_dims):
    positions = np.asarray(positions, dtype=np.float64)
    if positions.ndim == 1:
        positions = positions[:, None]
    if positions.ndim != 2:
        raise ParameterError("positions must be (M,) or (M, d)")
    out_dims = tuple(int(n) for n in np.atleast_1d(out_dims))
    if len(out_dims) != positions.shape[1]:
        raise ParameterError("out_dims length must match position dimensionality")
    if not 1 <= len(out_dims) <= 2:
        raise ParameterError("NED transforms support 1 or 2 position axes")
    for n in out_dims:
        if n < 2 or n % 2:
            raise ParameterError("centered grid lengths must be even and >= 2")
    for ax, n in enumerate(out_dims):
        if np.any(np.abs(positions[:, ax]) > n / 2):
            raise ParameterError("positions fall outside the centered domain")
    values = np.asarray(values, dtype=np.complex128)
    if values.shape[0] != positions.shape[0]:
        raise ParameterError("values and positions disagree on sample count")
    return positions, values, out_dims


# ---------------------------------------------------------------------------
# fast NER
# ---------------------------------------------------------------------------

class NerPlan:
    """Precomputed state for fast non-equispaced-range transforms of length n."""

    def __init__(self, n: int, spec: WindowSpec | None = None):
        if n < 2:
            raise ParameterError("input length must be >= 2")
        spec = spec if spec is not None else WindowSpec()
        self.n = int(n)
        self.n_over = next_even_fast_len(spec.c * n)
        self.c_eff = self.n_over / self.n
        self.spec = spec.resolved(self.c_eff)
        theta = 2.0 * np.pi * np.arange(self.n) / self.n - np.pi
        self._inv_window = 1.0 / window_eval(self.spec, theta)
        self._dk = np.arange(-self.spec.K + 1, self.spec.K + 1)
        self._norm = 1.0 / (2.0 * np.pi * self.c_eff)
        self.kappa_max = self.n_over / 2.0

    def _weights(self, kappas):
        xi = self.c_eff * kappas
        k0 = np.floor(xi).astype(np.int64)
        bins = k0[..., None] + self._dk
        offs = kappas[..., None] - bins / self.c_eff
        w = self._norm * window_ft_eval(self.spec, offs) * np.exp(-1j * np.pi * offs)
        return bins % self.n_over, w

    def execute(self, u, kappas, block_rows: int | None = None):
        """Evaluate the length-n DFT of each row of ``u`` at ``kappas``.

        ``u`` has shape (..., n); ``kappas`` is (M,) for shared targets
        or (..., M) matching the batch shape for per-row targets.
        """
        u = np.asarray(u, dtype=np.complex128)
        if u.shape[-1] != self.n:
            raise ParameterError(f"plan built for length {self.n}, got {u.shape[-1]}")
        kappas = np.asarray(kappas, dtype=np.float64)
        if not np.all(np.isfinite(kappas)):
            raise ParameterError("kappas must be finite")
        if np.any(np.abs(kappas) > self.kappa_max):
            raise ParameterError(f"|kappa| must not exceed {self.kappa_max}")
        shared = kappas.ndim == 1
        if not shared and kappas.shape[:-1] != u.shape[:-1]:
            raise ParameterError("per-row kappas must match the batch shape of u")
        m = kappas.shape[-1]
        batch_shape = u.shape[:-1]
        ub = u.reshape(-1, self.n)
        nrows = ub.shape[0]
        if block_rows is None:
            block_rows = max(1, 4_000_000 // max(1, m * 2 * self.spec.K))
        out = np.empty((nrows, m), dtype=np.complex128)
        if shared:
            bins, w = self._weights(kappas)
        else:
            kb = kappas.reshape(-1, m)
        for lo in range(0, nrows, block_rows):
            hi = min(lo + block_rows, nrows)
            fb = _fft(ub[lo:hi] * self._inv_window, n=self.n_over, axis=-1)
            if shared:
                out[lo:hi] = np.einsum("mk,bmk->bm", w, fb[:, bins])
            else:
                bins, w = self._weights(kb[lo:hi])
                rows = np.arange(hi - lo)[:, None, None]
                out[lo:hi] = np.sum(w * fb[rows, bins], axis=-1)
        return out.reshape(batch_shape + (m,)) if shared else out.reshape(kappas.shape)


def nufft_ner(u, kappas, spec: WindowSpec | None = None):
    """Fast non-equispaced-range transform (see :class:`NerPlan`)."""
    u = np.asarray(u, dtype=np.complex128)
    return NerPlan(u.shape[-1], spec).execute(u, kappas)


# ---------------------------------------------------------------------------
# fast NED
# ---------------------------------------------------------------------------

class NedPlan:
    """Precomputed state for fast non-equispaced-data transforms.

    Output grids follow the centered convention (index 0 along axis i is
    frequency -N_i/2) unless ``order="wrapped"`` asks for raw FFT order.
    """

    def __init__(self, out_dims, spec: WindowSpec | None = None):
        spec = spec if spec is not None else WindowSpec()
        self.out_dims = tuple(int(n) for n in np.atleast_1d(out_dims))
        if not 1 <= len(self.out_dims) <= 2:
            raise ParameterError("NED transforms support 1 or 2 position axes")
        for n in self.out_dims:
            if n < 2 or n % 2:
                raise ParameterError("centered grid lengths must be even and >= 2")
        self.n_over = tuple(next_even_fast_len(spec.c * n) for n in self.out_dims)
        self.c_eff = tuple(m / n for m, n in zip(self.n_over, self.out_dims))
        self.spec = spec.resolved(min(self.c_eff))
        self._specs = [spec.resolved(c) for c in self.c_eff]
        self._dk = np.arange(-self.spec.K + 1, self.spec.K + 1)
        # per-axis deapodization over centered output frequencies,
        # including the gridding normalization constant
        self._deapod = []
        for ax, n in enumerate(self.out_dims):
            j = np.arange(-n // 2, n // 2)
            psi = window_eval(self._specs[ax], 2.0 * np.pi * j / n)
            self._deapod.append(1.0 / (2.0 * np.pi * self.c_eff[ax] * psi))

    def _axis_weights(self, positions, ax):
        xi = self.c_eff[ax] * positions
        k0 = np.floor(xi).astype(np.int64)
        bins = k0[:, None] + self._dk
        offs = positions[:, None] - bins / self.c_eff[ax]
        return bins % self.n_over[ax], window_ft_eval(self._specs[ax], offs)

    def spread_matrix(self, positions):
        """Sparse (prod(n_over), M) spreading operator for fixed positions."""
        from scipy.sparse import coo_matrix

        m = positions.shape[0]
        if len(self.out_dims) == 1:
            bins, w = self._axis_weights(positions[:, 0], 0)
            rows = bins.ravel()
            cols = np.repeat(np.arange(m), bins.shape[1])
            data = w.ravel()
        else:
            b0, w0 = self._axis_weights(positions[:, 0], 0)
            b1, w1 = self._axis_weights(positions[:, 1], 1)
            rows = (b0[:, :, None] * self.n_over[1] + b1[:, None, :]).ravel()
            nw = b0.shape[1] * b1.shape[1]
            cols = np.repeat(np.arange(m), nw)
            data = (w0[:, :, None] * w1[:, None, :]).ravel()
        size = int(np.prod(self.n_over))
        return coo_matrix((data, (rows, cols)), shape=(size, m)).tocsr()

    def execute(self, positions, values, order: str = "centered"):
        positions, values, out_dims = _check_ned_inputs(positions, values, self.out_dims)
        single = values.ndim == 1
        vb = values[:, None] if single else values
        grid = self.spread_matrix(positions) @ vb
        grid = grid.reshape(self.n_over + (vb.shape[1],))
        spec_grid = _fftn(grid, axes=tuple(range(len(self.n_over))))
        # pick the centered output box out of the oversampled spectrum
        sel = [np.arange(-n // 2, n // 2) % m for n, m in zip(out_dims, self.n_over)]
        out = spec_grid[np.ix_(*sel)]
        for ax, d in enumerate(self._deapod):
            shape = [1] * out.ndim
            shape[ax] = len(d)
            out = out * d.reshape(shape)
        if order == "wrapped":
            out = np.fft.ifftshift(out, axes=tuple(range(len(out_dims))))
        elif order != "centered":
            raise ParameterError("order must be 'centered' or 'wrapped'")
        return out[..., 0] if single else out


def nufft_ned(positions, values, out_dims, spec: WindowSpec | None = None):
    """Fast non-equispaced-data transform (see :class:`NedPlan`)."""
    return NedPlan(out_dims, spec).execute(positions, values)


# ---------------------------------------------------------------------------
# centered equispaced FFT helpers
# ---------------------------------------------------------------------------

def fft_centered(grid, direction: str = "forward"):
    """Multi-dimensional FFT between the mixed index conventions used here.

    Sample space: every axis except the last is centered (index 0 means
    coordinate -N/2), the last axis is 0-based.  Frequency space: all
    axes are centered.  ``forward`` maps samples to frequencies with an
    unscaled sum; ``inverse`` is its exact inverse (1/prod(N) scaling),
    so a round trip is the identity and
    sum|F|^2 = prod(N) * sum|f|^2.
    """
    a = np.asarray(grid)
    if a.ndim == 0:
        raise ParameterError("fft_centered needs at least one axis")
    for n in a.shape:
        if n % 2:
            raise ParameterError("centered FFTs require even axis lengths")
    lat = tuple(range(a.ndim - 1))
    everything = tuple(range(a.ndim))
    if direction == "forward":
        out = _fftn(np.fft.ifftshift(a, axes=lat) if lat else a)
        return np.fft.fftshift(out, axes=everything)
    if direction == "inverse":
        out = _ifftn(np.fft.ifftshift(a, axes=everything))
        return np.fft.fftshift(out, axes=lat) if lat else out
    raise ParameterError("direction must be 'forward' or 'inverse'")
