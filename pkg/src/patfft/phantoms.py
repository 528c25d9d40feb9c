"""Procedural phantoms for the bundled experiments.

All generators are deterministic given their RNG/seed, return
:class:`~patfft.recon.ScalarField` instances, and keep their support
away from the sensor plane (depth index 0).
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter

from .recon import ScalarField

__all__ = ["gaussian_blob", "tree_phantom", "yarn_phantom"]


def gaussian_blob(dims, spacing, center=None, sigma_px=4.0, amplitude=1.0) -> ScalarField:
    """Smooth isotropic blob; ``center`` in pixels (lateral centered, depth from 0)."""
    dims = tuple(int(n) for n in dims)
    if center is None:
        center = tuple(0.0 for _ in dims[:-1]) + (dims[-1] / 2.0,)
    axes = [np.arange(n) - n // 2 for n in dims[:-1]] + [np.arange(dims[-1])]
    mesh = np.meshgrid(*axes, indexing="ij")
    r2 = np.zeros(dims)
    for ax, c in enumerate(center):
        r2 += (mesh[ax] - c) ** 2
    return ScalarField(amplitude * np.exp(-0.5 * r2 / sigma_px**2), spacing)


def tree_phantom(nx=1024, nz=256, spacing=(1e-4, 1e-4), seed=0, smooth_px=1.2) -> ScalarField:
    """Tree-like 2D phantom: broad crown near the plane, long thin trunk below.

    The crown sits closer to the sensor line, the trunk extends away
    from it, so narrow dense sensor subsets see the crown well and lose
    the trunk (the limited-view trade-off the experiments probe).
    """
    rng = np.random.default_rng(seed)
    img = np.zeros((nx, nz))
    x = np.arange(nx) - nx // 2

    crown_z, crown_rx, crown_rz = 0.27 * nz, 0.105 * nx, 0.16 * nz
    trunk_top, trunk_bot = crown_z + 0.3 * crown_rz, 0.82 * nz
    trunk_w = 0.006 * nx

    # trunk: vertical bar, slightly tapered toward the top
    z = np.arange(nz)
    zmask = (z >= trunk_top) & (z <= trunk_bot)
    taper = 0.75 + 0.25 * (z - trunk_top) / max(trunk_bot - trunk_top, 1)
    width = trunk_w * taper
    img += np.where(zmask[None, :], (np.abs(x)[:, None] <= width[None, :]) * 1.0, 0.0)

    # crown: cluster of discs inside an ellipse around (0, crown_z)
    n_leaf = 140
    for _ in range(n_leaf):
        ang = rng.uniform(0.0, 2.0 * np.pi)
        rad = np.sqrt(rng.uniform(0.0, 1.0))
        cx = rad * crown_rx * np.cos(ang)
        cz = crown_z + rad * crown_rz * np.sin(ang)
        rr = rng.uniform(0.02, 0.055) * crown_rx
        xs = slice(max(0, int(cx - rr + nx // 2) - 1), min(nx, int(cx + rr + nx // 2) + 2))
        zs = slice(max(0, int(cz - rr) - 1), min(nz, int(cz + rr) + 2))
        sub_x = x[xs][:, None] - cx
        sub_z = z[zs][None, :] - cz
        img[xs, zs] = np.maximum(img[xs, zs], (sub_x**2 + sub_z**2 <= rr * rr) * 1.0)

    # a few branches from the trunk top into the crown
    for side in (-1.0, 1.0):
        for frac in (0.45, 0.8):
            t = np.linspace(0.0, 1.0, 200)
            bx = side * frac * crown_rx * t
            bz = trunk_top - (trunk_top - crown_z) * 0.9 * t
            ix = np.clip(np.rint(bx).astype(int) + nx // 2, 0, nx - 1)
            iz = np.clip(np.rint(bz).astype(int), 0, nz - 1)
            img[ix, iz] = 1.0
            img[np.clip(ix + 1, 0, nx - 1), iz] = 1.0

    if smooth_px > 0:
        img = gaussian_filter(img, smooth_px)
    img[:, :2] = 0.0
    return ScalarField(img, spacing)


def yarn_phantom(dims=(96, 96, 96), spacing=(6e-5, 6e-5, 6e-5), seed=0, knot_depth_px=None) -> ScalarField:
    """Bright filament wandering through the volume, with a small central knot."""
    rng = np.random.default_rng(seed)
    n0, n1, n2 = (int(n) for n in dims)
    img = np.zeros((n0, n1, n2))
    if knot_depth_px is None:
        knot_depth_px = 0.45 * n2

    t = np.linspace(0.0, 2.0 * np.pi, 1600)
    coefs = rng.normal(0.0, 1.0, (3, 3, 2))

    def curve(axis, scale, offset):
        out = np.zeros_like(t)
        for k in range(1, 4):
            out += coefs[axis, k - 1, 0] * np.cos(k * t) / k + coefs[axis, k - 1, 1] * np.sin(k * t) / k
        out *= scale / (np.max(np.abs(out)) + 1e-12)
        return out + offset

    cx = curve(0, 0.30 * n0, n0 / 2.0)
    cy = curve(1, 0.30 * n1, n1 / 2.0)
    cz = curve(2, 0.22 * n2, knot_depth_px)

    sigma = 1.3
    reach = 4
    for px, py, pz in zip(cx, cy, cz):
        ix, iy, iz = int(round(px)), int(round(py)), int(round(pz))
        xs = slice(max(0, ix - reach), min(n0, ix + reach + 1))
        ys = slice(max(0, iy - reach), min(n1, iy + reach + 1))
        zs = slice(max(2, iz - reach), min(n2 - 1, iz + reach + 1))
        gx = np.arange(xs.start, xs.stop) - px
        gy = np.arange(ys.start, ys.stop) - py
        gz = np.arange(zs.start, zs.stop) - pz
        blob = np.exp(
            -(gx[:, None, None] ** 2 + gy[None, :, None] ** 2 + gz[None, None, :] ** 2)
            / (2.0 * sigma**2)
        )
        img[xs, ys, zs] = np.maximum(img[xs, ys, zs], blob)

    # small knot at the center of interest
    kx, ky, kz = n0 // 2, n1 // 2, int(round(knot_depth_px))
    gx = np.arange(n0)[:, None, None] - kx
    gy = np.arange(n1)[None, :, None] - ky
    gz = np.arange(n2)[None, None, :] - kz
    img = np.maximum(img, 1.2 * np.exp(-(gx**2 + gy**2 + gz**2) / (2.0 * (2.0 * sigma) ** 2)))
    img[:, :, :2] = 0.0
    return ScalarField(img, spacing)
