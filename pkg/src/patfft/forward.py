"""Synthetic data generation, independent of the reconstruction path.

Three forward routes with no shared math:

* ``forward_fourier``: exact frequency-domain forward operator (the
  inversion formula rearranged), evaluated with a non-equispaced-range
  NUFFT along the depth axis.  Frequencies with |omega| <= |j| carry no
  propagating wave and are set to zero (the operator's band limit).
* ``forward_sphere_analytic``: closed-form N-wave of a uniform ball.
* ``spherical_means_quadrature``: brute-force solution of the wave
  equation initial value problem, p = d/dt [ t * mean of f over the
  sphere of radius c*t ], with product quadrature on the sphere and a
  central-difference time derivative.  Points outside the field are
  treated as zero.

The analytic/quadrature pair cross-checks itself and the Fourier route
without touching any reconstruction code.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.fft as sfft
from scipy.ndimage import map_coordinates

from .errors import DataValidationError, ParameterError
from .nufft import NerPlan, WindowSpec
from .recon import ScalarField, SensorRecord

__all__ = [
    "Ball",
    "PhantomSpec",
    "forward_fourier",
    "forward_sphere_analytic",
    "spherical_means_quadrature",
    "add_noise",
    "subsample_record",
]


@dataclass
class Ball:
    """Uniform spherical (or circular, in 2D) initial pressure primitive.

    ``center`` is (lateral..., depth) in meters; depth is measured from
    the sensor plane.
    """

    center: tuple
    radius: float
    amplitude: float = 1.0

    def __post_init__(self):
        self.center = tuple(float(c) for c in self.center)
        if self.radius <= 0:
            raise ParameterError("ball radius must be positive")


@dataclass
class PhantomSpec:
    """Primitive list plus optional voxelized field, with domain extents."""

    dims: tuple
    spacing: tuple
    balls: list = field(default_factory=list)
    base_field: ScalarField | None = None
    sound_speed: float = 1500.0

    def __post_init__(self):
        self.dims = tuple(int(n) for n in self.dims)
        self.spacing = tuple(float(s) for s in self.spacing)
        if len(self.dims) != len(self.spacing):
            raise ParameterError("dims and spacing rank mismatch")
        depth_extent = self.dims[-1] * self.spacing[-1]
        for b in self.balls:
            if b.center[-1] - b.radius <= 0:
                raise DataValidationError("phantom support touches the sensor plane")
            if b.center[-1] + b.radius >= depth_extent:
                raise DataValidationError("phantom support leaves the domain")

    def rasterize(self) -> ScalarField:
        vals = np.zeros(self.dims)
        if self.base_field is not None:
            if self.base_field.values.shape != self.dims:
                raise DataValidationError("base field shape mismatch")
            vals += self.base_field.values
        if self.balls:
            axes = [
                (np.arange(n) - n // 2) * s for n, s in zip(self.dims[:-1], self.spacing[:-1])
            ] + [np.arange(self.dims[-1]) * self.spacing[-1]]
            mesh = np.meshgrid(*axes, indexing="ij")
            vox = min(self.spacing)
            for b in self.balls:
                dist = np.zeros(self.dims)
                for ax, c in enumerate(b.center):
                    dist += (mesh[ax] - c) ** 2
                dist = np.sqrt(dist)
                # antialiased partial-volume edge over one voxel
                vals += b.amplitude * np.clip(0.5 + (b.radius - dist) / vox, 0.0, 1.0)
        return ScalarField(vals, self.spacing)


def forward_fourier(f: ScalarField, sound_speed: float, spec: WindowSpec | None = None) -> SensorRecord:
    """Simulate full-grid sensor data from an initial pressure field.

    The time step is tied to the depth pitch by dt = dz / sound_speed,
    so the returned record has as many time samples as the field has
    depth samples.
    """
    if sound_speed <= 0:
        raise ParameterError("sound speed must be positive")
    vals = f.values
    if vals.ndim not in (2, 3):
        raise ParameterError("forward operator supports 2D and 3D fields")
    n_lateral = vals.shape[:-1]
    nt = vals.shape[-1]
    if nt % 2 or any(n % 2 for n in n_lateral):
        raise ParameterError("grid sizes must be even")
    lat_axes = tuple(range(vals.ndim - 1))
    fh = sfft.fftn(np.fft.ifftshift(vals, axes=lat_axes).astype(np.complex128), axes=lat_axes)

    from .recon import _lateral_freq_sq

    # The detected field is even in time, so its spectrum mixes both
    # axial frequency signs: ghat(j, w) = w/(2 Ky) * [fhat(+Ky) + fhat(-Ky)].
    # Synthesizing that directly on an N_t window would wrap the
    # negative-time half (the mirror wave) back into the record, so the
    # trace is built on a doubled window and samples beyond the grid
    # depth are truncated, leaving the pure outgoing wave.
    nt2 = 2 * nt
    wvals = sfft.fftfreq(nt2) * nt2 / 2.0  # in depth-grid frequency units
    depth_extent = nt * f.spacing[-1]
    ratios = tuple(depth_extent / (n * f.spacing[ax]) for ax, n in enumerate(n_lateral))
    j2 = _lateral_freq_sq(n_lateral, ratios)
    w2 = wvals**2
    prop = j2[..., None] < w2  # strict: |omega| > |j|
    ky = np.where(prop, np.sign(wvals) * np.sqrt(np.maximum(w2 - j2[..., None], 0.0)), 0.0)
    scale = np.zeros(ky.shape)
    np.divide(wvals * np.ones_like(j2)[..., None], 2.0 * ky, out=scale, where=ky != 0)

    rows = int(np.prod(n_lateral))
    plan = NerPlan(nt, spec)
    fb = fh.reshape(rows, nt)
    kb = ky.reshape(rows, nt2)
    ghat = (plan.execute(fb, kb) + plan.execute(fb, -kb)).reshape(ky.shape)
    ghat *= scale * prop

    traces = sfft.ifft(ghat, axis=-1)[..., :nt]
    traces = sfft.ifftn(traces, axes=lat_axes)
    traces = np.fft.fftshift(traces, axes=lat_axes).real

    dx = f.spacing[0]
    dt = f.spacing[-1] / sound_speed
    positions = _grid_node_positions(n_lateral, dx)
    weights = np.full(rows, dx ** len(n_lateral))
    return SensorRecord(
        positions=positions,
        weights=weights,
        samples=traces.reshape(rows, nt),
        dt=dt,
        sound_speed=sound_speed,
        dx=dx,
        n_lateral=n_lateral,
    )


def _grid_node_positions(n_lateral, dx):
    axes = [(np.arange(n) - n // 2) * dx for n in n_lateral]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def subsample_record(rec: SensorRecord, positions, weights) -> SensorRecord:
    """Extract the rows of a full-grid record nearest the given positions."""
    flat_map = {}
    pos_grid = np.rint(rec.grid_positions()).astype(np.int64)
    for row, p in enumerate(map(tuple, pos_grid)):
        flat_map[p] = row
    positions = np.atleast_2d(np.asarray(positions, dtype=np.float64))
    if positions.shape[1] != len(rec.n_lateral):
        positions = positions.T
    idx = np.rint(positions / rec.dx).astype(np.int64)
    rows = []
    for p in map(tuple, idx):
        if p not in flat_map:
            raise ParameterError(f"requested sensor node {p} not present in the record")
        rows.append(flat_map[p])
    rows = np.asarray(rows)
    return SensorRecord(
        positions=idx * rec.dx,
        weights=np.asarray(weights, dtype=np.float64),
        samples=rec.samples[rows],
        dt=rec.dt,
        sound_speed=rec.sound_speed,
        dx=rec.dx,
        n_lateral=rec.n_lateral,
        meta=dict(rec.meta),
    )


def forward_sphere_analytic(ball: Ball, sensor_position, times, sound_speed: float) -> np.ndarray:
    """N-wave pressure trace of a uniform ball at a sensor on the plane.

    p(t) = A * (dist - c t) / (2 dist) while |dist - c t| <= R, else 0.
    The sensor must lie outside the ball.
    """
    if sound_speed <= 0:
        raise ParameterError("sound speed must be positive")
    sensor = np.asarray(sensor_position, dtype=np.float64).ravel()
    center = np.asarray(ball.center, dtype=np.float64)
    if sensor.size == center.size - 1:
        sensor = np.append(sensor, 0.0)  # sensor sits on the plane
    if sensor.size != center.size:
        raise ParameterError("sensor position rank mismatch")
    dist = float(np.linalg.norm(sensor - center))
    if dist <= ball.radius:
        raise ParameterError("sensor lies inside the ball")
    times = np.asarray(times, dtype=np.float64)
    u = sound_speed * times
    trace = ball.amplitude * (dist - u) / (2.0 * dist)
    trace[np.abs(dist - u) > ball.radius] = 0.0
    return trace


def spherical_means_quadrature(
    f: ScalarField,
    sensor_position,
    times,
    sound_speed: float,
    n_polar: int = 64,
    n_azimuth: int = 128,
) -> np.ndarray:
    """Brute-force 3D wave solution p = d/dt [ t * spherical mean of f ].

    The spherical mean uses a Gauss-Legendre x uniform-azimuth product
    rule with trilinear sampling of the field; outside the field the
    initial pressure is taken to be zero.  The time derivative is a
    central difference on the supplied time grid (one-sided at the
    ends).
    """
    if f.values.ndim != 3:
        raise ParameterError("spherical means require a 3D field")
    if sound_speed <= 0:
        raise ParameterError("sound speed must be positive")
    sensor = np.asarray(sensor_position, dtype=np.float64).ravel()
    if sensor.size == 2:
        sensor = np.append(sensor, 0.0)
    times = np.asarray(times, dtype=np.float64)

    mu, wq = np.polynomial.legendre.leggauss(n_polar)  # mu = cos(theta)
    phi = 2.0 * np.pi * (np.arange(n_azimuth) + 0.5) / n_azimuth
    st = np.sqrt(1.0 - mu**2)
    dirs = np.stack(
        [
            np.outer(st, np.cos(phi)),
            np.outer(st, np.sin(phi)),
            np.outer(mu, np.ones_like(phi)),
        ],
        axis=0,
    )  # (3, n_polar, n_azimuth)

    n0, n1, n2 = f.values.shape
    off = np.array([n0 // 2, n1 // 2, 0.0])
    sp = np.asarray(f.spacing)

    means = np.empty_like(times)
    for i, t in enumerate(times):
        radius = sound_speed * t
        pts = sensor[:, None, None] + radius * dirs  # meters
        coords = pts / sp[:, None, None] + off[:, None, None]
        vals = map_coordinates(f.values, coords.reshape(3, -1), order=1, mode="constant", cval=0.0)
        vals = vals.reshape(n_polar, n_azimuth)
        means[i] = 0.5 * np.dot(wq, vals.mean(axis=1))

    q = times * means
    p = np.empty_like(q)
    p[1:-1] = (q[2:] - q[:-2]) / (times[2:] - times[:-2])
    p[0] = (q[1] - q[0]) / (times[1] - times[0])
    p[-1] = (q[-1] - q[-2]) / (times[-1] - times[-2])
    return p


def add_noise(rec: SensorRecord, snr_db, seed) -> SensorRecord:
    """Add white Gaussian noise at the requested SNR (in dB, RMS ratio).

    ``snr_db=None`` or infinity returns an identical copy.  Fixed seeds
    give byte-identical output.
    """
    if snr_db is None or np.isinf(snr_db):
        noisy = rec.samples.copy()
    else:
        if not np.isfinite(snr_db):
            raise ParameterError("snr_db must be finite or infinite/None")
        rms = np.sqrt(np.mean(rec.samples**2))
        sigma = rms / 10.0 ** (snr_db / 20.0)
        rng = np.random.default_rng(seed)
        noisy = rec.samples + sigma * rng.standard_normal(rec.samples.shape)
    return SensorRecord(
        positions=rec.positions.copy(),
        weights=rec.weights.copy(),
        samples=noisy,
        dt=rec.dt,
        sound_speed=rec.sound_speed,
        dx=rec.dx,
        n_lateral=rec.n_lateral,
        meta=dict(rec.meta),
    )
