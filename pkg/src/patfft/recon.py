"""Fourier-domain inversion for planar detection geometries.

The measured data are pressure time series on (a subset of) a planar
sensor grid.  Reconstruction maps them back to the initial pressure:

1. transform over the sensor coordinates (plain FFT on a full grid, or
   a non-equispaced-data NUFFT of the weighted samples otherwise),
2. per lateral frequency j, evaluate the time-axis DFT at the warped
   axial frequencies kappa(j, l) = sign(l)*sqrt(|j|^2 + l^2) with a
   non-equispaced-range NUFFT (or, for the baseline, by linear
   interpolation of the time-axis FFT),
3. scale by the amplitude factor 2l/kappa, zero the uninformative
   l = 0 / kappa = 0 coefficients and everything outside the measured
   band |kappa| <= N_t/2,
4. enforce Hermitian symmetry and invert with a centered FFT
   (optionally zero-padded for upsampling).

Axes and units: lateral image/sensor axes are centered (coordinate 0 in
the middle), the depth axis starts at the sensor plane; time samples map
to depth via y = sound_speed * t, so the depth pitch is
sound_speed * dt.  All transforms run in float64/complex128; narrower
input data are widened on ingest.

Every reconstruction is a pure function of its inputs with a fixed
per-element summation order, so repeated runs are bit-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft

from .errors import DataValidationError, ParameterError
from .nufft import NedPlan, NerPlan, WindowSpec

__all__ = [
    "ScalarField",
    "SensorRecord",
    "kappa",
    "amplitude_factor",
    "reconstruct_equispaced",
    "reconstruct_nedner",
    "reconstruct_interp_fft",
]

WEIGHT_SUM_RTOL = 1e-6


@dataclass
class ScalarField:
    """Real d-dimensional image/volume with physical spacings.

    ``values`` is indexed (lateral..., depth); lateral axes are centered
    (index N/2 is coordinate 0) and the depth axis starts at the sensor
    plane.  ``spacing`` gives the pitch per axis in meters.
    """

    values: np.ndarray
    spacing: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.spacing) != self.values.ndim:
            raise DataValidationError("spacing length must match array rank")
        if any(s <= 0 for s in self.spacing):
            raise DataValidationError("spacings must be positive")
        if not np.all(np.isfinite(self.values)):
            raise DataValidationError("field values must be finite")

    @property
    def n_lateral(self):
        return self.values.shape[:-1]

    @property
    def n_depth(self):
        return self.values.shape[-1]

    def lateral_coords(self, axis: int):
        n = self.values.shape[axis]
        return (np.arange(n) - n // 2) * self.spacing[axis]

    def depth_coords(self):
        return np.arange(self.values.shape[-1]) * self.spacing[-1]


@dataclass
class SensorRecord:
    """Pressure time series at M sensor positions on the detection plane.

    Attributes:
        positions: (M, d-1) sensor coordinates in meters, centered in the
            aperture (-X/2, X/2) per axis.
        weights: (M,) quadrature weights in m^(d-1); they must sum to the
            aperture measure X^(d-1).
        samples: (M, N_t) pressure samples, N_t even.
        dt: time step in seconds.
        sound_speed: in m/s; maps time to depth via y = sound_speed * t.
        dx: sensor-plane grid pitch in meters.
        n_lateral: full lateral grid shape the aperture corresponds to.
    """

    positions: np.ndarray
    weights: np.ndarray
    samples: np.ndarray
    dt: float
    sound_speed: float
    dx: float
    n_lateral: tuple
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.positions = np.atleast_2d(np.asarray(self.positions, dtype=np.float64))
        if self.positions.shape[0] == 1 and self.positions.shape[1] > 1 and len(self.n_lateral) == 1:
            self.positions = self.positions.T
        self.weights = np.asarray(self.weights, dtype=np.float64).ravel()
        self.samples = np.asarray(self.samples, dtype=np.float64)
        self.n_lateral = tuple(int(n) for n in np.atleast_1d(self.n_lateral))
        if self.positions.shape[1] != len(self.n_lateral):
            raise DataValidationError("positions and n_lateral disagree on dimensionality")
        m = self.positions.shape[0]
        if self.weights.shape[0] != m or self.samples.shape[0] != m:
            raise DataValidationError("positions, weights and samples disagree on sensor count")
        if self.samples.ndim != 2 or self.samples.shape[1] % 2:
            raise DataValidationError("samples must be (M, N_t) with even N_t")
        if self.dt <= 0 or self.sound_speed <= 0 or self.dx <= 0:
            raise DataValidationError("dt, sound_speed and dx must be positive")
        for ax, n in enumerate(self.n_lateral):
            if n % 2:
                raise DataValidationError("lateral grid sizes must be even")
            half = n * self.dx / 2.0
            if np.any(np.abs(self.positions[:, ax]) > half + 1e-9 * self.dx):
                raise DataValidationError("sensor positions fall outside the aperture")
        self.check_weight_sum(WEIGHT_SUM_RTOL)

    @property
    def n_time(self) -> int:
        return self.samples.shape[1]

    @property
    def d(self) -> int:
        return len(self.n_lateral) + 1

    @property
    def dy(self) -> float:
        return self.sound_speed * self.dt

    def aperture_measure(self) -> float:
        out = 1.0
        for n in self.n_lateral:
            out *= n * self.dx
        return out

    def check_weight_sum(self, rtol: float) -> None:
        target = self.aperture_measure()
        err = abs(self.weights.sum() - target) / target
        if err > rtol:
            raise DataValidationError(
                f"weights sum to {self.weights.sum():.9g}, expected aperture measure "
                f"{target:.9g} (relative error {err:.2e} > {rtol:g})"
            )

    def grid_positions(self) -> np.ndarray:
        """Positions in grid units (pitch 1, centered)."""
        return self.positions / self.dx


# ---------------------------------------------------------------------------
# frequency warp
# ---------------------------------------------------------------------------

def kappa(j, l):
    """Signed frequency warp sign(l) * sqrt(|j|^2 + l^2), with sign(0) = 0.

    ``j`` may be a scalar or an array whose last axis holds the lateral
    multi-index components.
    """
    j = np.asarray(j, dtype=np.float64)
    l = np.asarray(l, dtype=np.float64)
    j2 = j * j if j.ndim == 0 else np.sum(j * j, axis=-1)
    return np.sign(l) * np.sqrt(j2 + l * l)


def amplitude_factor(j, l):
    """The inversion amplitude 2l/kappa; zero at kappa = 0 (and l = 0)."""
    l = np.asarray(l, dtype=np.float64)
    kap = kappa(j, l)
    out = np.zeros(np.broadcast_shapes(kap.shape, l.shape))
    np.divide(2.0 * l, kap, out=out, where=kap != 0)
    return out if out.ndim else float(out)


# ---------------------------------------------------------------------------
# shared spectrum inversion
# ---------------------------------------------------------------------------

def _lateral_freq_sq(n_lateral, ratios=None):
    """Sum of squared lateral frequencies over the (wrapped) lateral grid.

    ``ratios`` converts each axis' integer index into depth-grid
    frequency units (ratio = depth extent / aperture extent for that
    axis); lateral and depth indices only share units on matched grids.
    """
    if ratios is None:
        ratios = (1.0,) * len(n_lateral)
    j2 = np.zeros(n_lateral)
    for ax, n in enumerate(n_lateral):
        f = (sfft.fftfreq(n) * n * ratios[ax]) ** 2
        shape = [1] * len(n_lateral)
        shape[ax] = n
        j2 = j2 + f.reshape(shape)
    return j2


def _hermitian_symmetrize(a):
    b = a
    for ax in range(a.ndim):
        b = np.roll(np.flip(b, axis=ax), 1, axis=ax)  # index k -> (-k) mod N
    return 0.5 * (a + np.conj(b))


def _upsample_axis(a, ax, u):
    n = a.shape[ax]
    m = u * n
    shape = list(a.shape)
    shape[ax] = m
    out = np.zeros(shape, dtype=a.dtype)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[ax] = slice(0, n // 2)
    dst[ax] = slice(0, n // 2)
    out[tuple(dst)] = a[tuple(src)]
    src[ax] = slice(n // 2 + 1, n)
    dst[ax] = slice(m - n // 2 + 1, m)
    out[tuple(dst)] = a[tuple(src)]
    # split the Nyquist plane between +N/2 and -N/2 to keep the padded
    # spectrum Hermitian
    src[ax] = n // 2
    dst[ax] = n // 2
    out[tuple(dst)] = 0.5 * a[tuple(src)]
    dst[ax] = m - n // 2
    out[tuple(dst)] = 0.5 * a[tuple(src)]
    return out


def _invert_spectrum(fhat, upsample, spacing):
    """Hermitian-symmetrize, zero-pad and invert a wrapped-order spectrum."""
    fhat = _hermitian_symmetrize(fhat)
    if upsample > 1:
        for ax in range(fhat.ndim):
            fhat = _upsample_axis(fhat, ax, upsample)
    img = sfft.ifftn(fhat) * upsample**fhat.ndim
    peak = np.max(np.abs(img.real))
    residual = np.max(np.abs(img.imag)) / peak if peak > 0 else 0.0
    img = np.fft.fftshift(img.real, axes=tuple(range(img.ndim - 1)))
    out_spacing = tuple(s / upsample for s in spacing)
    return ScalarField(img, out_spacing, meta={"imag_residual": float(residual)})


def _even_time_extension(gh):
    """Mirror the record in time: [g_0..g_{N-1}, 0, g_{N-1}..g_1].

    Data are recorded on t >= 0 only while the wave field is even in
    time; the mirrored sequence is that even extension on a doubled
    window, so its transform is junk-free at every (warped) frequency.
    """
    zero = np.zeros(gh.shape[:-1] + (1,), dtype=gh.dtype)
    return np.concatenate([gh, zero, gh[..., :0:-1]], axis=-1)


def _assemble_fhat(gh, nt, spec, time_eval, lat_ratios):
    """Steps 2-3: warped time-axis evaluation and amplitude scaling.

    ``gh``: lateral spectra in wrapped order, shape (*n_lateral, nt),
    time axis still in sample order.  ``lat_ratios`` converts lateral
    indices to depth-frequency units (see :func:`_lateral_freq_sq`).
    """
    n_lateral = gh.shape[:-1]
    lvals = sfft.fftfreq(nt) * nt
    j2 = _lateral_freq_sq(n_lateral, lat_ratios)
    kap = np.sign(lvals) * np.sqrt(j2[..., None] + lvals**2)
    band = (j2[..., None] + lvals**2) <= (nt / 2.0) ** 2
    amp = np.zeros(kap.shape)
    np.divide(2.0 * lvals, kap, out=amp, where=kap != 0)

    rows = int(np.prod(n_lateral)) if n_lateral else 1
    ext = _even_time_extension(gh)
    nt2 = ext.shape[-1]
    # on the doubled window the same physical frequency sits at index 2*kappa
    kap_eval = np.where(band, 2.0 * kap, 0.0)  # out-of-band entries are zeroed below
    if time_eval == "nufft":
        plan = NerPlan(nt2, spec)
        phi = plan.execute(ext.reshape(rows, nt2), kap_eval.reshape(rows, nt2 // 2))
    elif time_eval == "interp":
        spect = sfft.fft(ext, axis=-1).reshape(rows, nt2)
        kf = kap_eval.reshape(rows, nt)
        i0 = np.floor(kf).astype(np.int64)
        frac = kf - i0
        ridx = np.arange(rows)[:, None]
        phi = spect[ridx, i0 % nt2] * (1.0 - frac) + spect[ridx, (i0 + 1) % nt2] * frac
    else:
        raise ParameterError(f"unknown time_eval {time_eval!r}")
    # the mirrored extension doubles the data mass, which exactly
    # compensates the half-line recording; no further factor is needed
    return 0.5 * phi.reshape(kap.shape) * amp * band


def _grid_index_map(rec: SensorRecord):
    """Map sensor rows onto full-grid lateral indices; None if incomplete."""
    pos = rec.grid_positions()
    idx = np.rint(pos).astype(np.int64)
    if np.max(np.abs(pos - idx)) > 1e-6:
        return None
    for ax, n in enumerate(rec.n_lateral):
        idx[:, ax] += n // 2
        if np.any((idx[:, ax] < 0) | (idx[:, ax] >= n)):
            return None
    flat = np.ravel_multi_index(tuple(idx.T), rec.n_lateral)
    if len(np.unique(flat)) != int(np.prod(rec.n_lateral)) or flat.size != int(np.prod(rec.n_lateral)):
        return None
    return flat


def _full_grid_cube(rec: SensorRecord):
    flat = _grid_index_map(rec)
    if flat is None:
        raise ParameterError("record positions do not form the complete sensor grid")
    cube = np.empty((int(np.prod(rec.n_lateral)), rec.n_time))
    cube[flat] = rec.samples
    return cube.reshape(rec.n_lateral + (rec.n_time,))


def _out_spacing(rec: SensorRecord):
    return (rec.dx,) * len(rec.n_lateral) + (rec.dy,)


def _lat_ratios(rec: SensorRecord):
    depth_extent = rec.n_time * rec.dy
    return tuple(depth_extent / (n * rec.dx) for n in rec.n_lateral)


def reconstruct_equispaced(rec: SensorRecord, upsample: int = 1, spec: WindowSpec | None = None) -> ScalarField:
    """Reconstruct from a complete sensor grid (NUFFT on the time axis only).

    Raises ParameterError if the record does not cover the full grid.
    """
    _check_upsample(upsample)
    cube = _full_grid_cube(rec)
    lat_axes = tuple(range(cube.ndim - 1))
    gh = sfft.fftn(np.fft.ifftshift(cube, axes=lat_axes).astype(np.complex128), axes=lat_axes)
    fhat = _assemble_fhat(gh, rec.n_time, spec, "nufft", _lat_ratios(rec))
    return _invert_spectrum(fhat, upsample, _out_spacing(rec))


def reconstruct_nedner(
    rec: SensorRecord,
    out_dims=None,
    upsample: int = 1,
    spec: WindowSpec | None = None,
) -> ScalarField:
    """Reconstruct from arbitrarily placed sensors (NUFFT on both steps).

    The lateral spectra are accumulated from the density-weighted
    samples (h_m / dx^(d-1)) * g_m; on a complete grid with uniform
    weights this reduces to :func:`reconstruct_equispaced`.
    """
    _check_upsample(upsample)
    rec.check_weight_sum(WEIGHT_SUM_RTOL)
    out_dims = rec.n_lateral if out_dims is None else tuple(int(n) for n in np.atleast_1d(out_dims))
    dd = len(out_dims)
    scaled = rec.samples * (rec.weights / rec.dx**dd)[:, None]
    plan = NedPlan(out_dims, spec)
    pos = rec.grid_positions() * (np.asarray(out_dims, dtype=float) / np.asarray(rec.n_lateral, dtype=float))
    gh = plan.execute(pos, scaled.astype(np.complex128), order="wrapped")
    fhat = _assemble_fhat(gh, rec.n_time, spec, "nufft", _lat_ratios(rec))
    return _invert_spectrum(fhat, upsample, _out_spacing(rec))


def reconstruct_interp_fft(rec: SensorRecord, upsample: int = 1) -> ScalarField:
    """Baseline: linear interpolation of the time-axis FFT instead of a NUFFT."""
    _check_upsample(upsample)
    cube = _full_grid_cube(rec)
    lat_axes = tuple(range(cube.ndim - 1))
    gh = sfft.fftn(np.fft.ifftshift(cube, axes=lat_axes).astype(np.complex128), axes=lat_axes)
    fhat = _assemble_fhat(gh, rec.n_time, None, "interp", _lat_ratios(rec))
    return _invert_spectrum(fhat, upsample, _out_spacing(rec))


def _check_upsample(upsample):
    if int(upsample) != upsample or upsample < 1:
        raise ParameterError("upsample must be an integer >= 1")
