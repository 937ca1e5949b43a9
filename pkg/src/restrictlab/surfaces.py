"""Quadrature realizations of (S, sigma) and L^q(S, sigma) norms.

Supported surfaces: the unit sphere S^{d-1} with surface measure, compact
patches of the whole paraboloid {(eta, |eta|^2/2)} with d sigma = d eta,
compact patches of the whole cone {(eta, |eta|)} with
d sigma = d eta / |xi| = d eta / (sqrt(2) |eta|), and finite atomic
measures (which are their own quadrature).

The sphere rule is a product of Gauss-Jacobi nodes in the polar cosines
(weight (1-u^2)^{(d-2-j)/2}, so spherical polynomials integrate exactly)
with a uniform azimuth, twice as many azimuthal as polar nodes.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import roots_jacobi

SPHERE_DIM_CAP = 6


@dataclass(frozen=True)
class SurfaceSpec:
    kind: str
    dimension: int
    radius: float = None          # paraboloid patch |eta| <= radius
    inner_radius: float = None    # cone patch r0
    outer_radius: float = None    # cone patch r1
    points: np.ndarray = None     # atoms
    weights: np.ndarray = None

    def __post_init__(self):
        if self.kind == "sphere":
            if self.dimension < 2:
                raise ValueError("sphere requires dimension >= 2")
        elif self.kind == "paraboloid":
            if self.dimension < 2 or not (self.radius or 0) > 0:
                raise ValueError("paraboloid patch needs d >= 2 and radius > 0")
        elif self.kind == "cone":
            r0, r1 = self.inner_radius, self.outer_radius
            if self.dimension < 2 or r0 is None or r1 is None or not 0 < r0 < r1:
                raise ValueError("cone patch needs d >= 2 and 0 < r0 < r1")
        elif self.kind == "atoms":
            pts = np.asarray(self.points, float)
            wts = np.asarray(self.weights, float)
            if pts.ndim != 2 or pts.shape[0] != wts.shape[0] or pts.shape[0] == 0:
                raise ValueError("atoms need matching nonempty points/weights")
            if pts.shape[1] != self.dimension:
                raise ValueError("atom points must live in the stated dimension")
            if np.any(wts <= 0):
                raise ValueError("atom weights must be strictly positive")
            object.__setattr__(self, "points", pts)
            object.__setattr__(self, "weights", wts)
        else:
            raise ValueError(f"unknown surface kind {self.kind!r}")


def sphere(d: int) -> SurfaceSpec:
    return SurfaceSpec("sphere", d)


def paraboloid_patch(d: int, radius: float) -> SurfaceSpec:
    return SurfaceSpec("paraboloid", d, radius=radius)


def cone_patch(d: int, inner_radius: float, outer_radius: float) -> SurfaceSpec:
    return SurfaceSpec("cone", d, inner_radius=inner_radius,
                       outer_radius=outer_radius)


def finite_atomic(points, weights) -> SurfaceSpec:
    points = np.asarray(points, float)
    return SurfaceSpec("atoms", points.shape[1], points=points,
                       weights=np.asarray(weights, float))


@dataclass(frozen=True)
class SurfaceQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    descriptor: str

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]

    @property
    def total_mass(self) -> float:
        return float(np.sum(self.weights))


def _sphere_directions(d: int, resolution: int):
    """Nodes/weights on S^{d-1}, exact for spherical polynomials of degree
    <= resolution."""
    if d == 2:
        n = 2 * resolution
        th = 2 * math.pi * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=1), np.full(n, 2 * math.pi / n)
    m = (resolution + 2) // 2
    polar = []
    for j in range(1, d - 1):
        expo = (d - 2 - j) / 2
        u, w = roots_jacobi(m, expo, expo)
        polar.append((u, w))
    n_az = 2 * m
    phi = 2 * math.pi * np.arange(n_az) / n_az
    az_nodes = np.stack([np.cos(phi), np.sin(phi)], axis=1)
    az_w = np.full(n_az, 2 * math.pi / n_az)
    nodes = az_nodes
    wts = az_w
    # Build up from S^1, prepending one polar angle at a time:
    # new_x = (u, sqrt(1-u^2) * old_x).
    for u, w in reversed(polar):
        s = np.sqrt(1.0 - u * u)
        new_nodes = np.concatenate(
            [np.repeat(u, len(nodes))[:, None].reshape(len(u), len(nodes), 1),
             s[:, None, None] * nodes[None, :, :]], axis=2)
        nodes = new_nodes.reshape(-1, new_nodes.shape[2])
        wts = (w[:, None] * wts[None, :]).ravel()
    return nodes, wts


def _radial_shell(dim: int, lo: float, hi: float, resolution: int,
                  radial_weight):
    """Quadrature for integral over {lo <= |eta| <= hi} in R^dim of
    radial_weight(|eta|) d eta."""
    u, w = roots_jacobi(resolution, 0.0, 0.0)
    r = 0.5 * (hi - lo) * (u + 1.0) + lo
    wr = 0.5 * (hi - lo) * w
    if dim == 1:
        pts = np.concatenate([-r, r])[:, None]
        wts = np.concatenate([wr, wr]) * radial_weight(np.concatenate([r, r]))
        if lo == 0.0:
            # the two half-lines [-hi, -lo] and [lo, hi] already cover it
            pass
        return pts, wts
    dirs, dw = _sphere_directions(dim, max(resolution, 4))
    pts = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dim)
    wts = (wr * radial_weight(r) * r ** (dim - 1))[:, None] * dw[None, :]
    return pts, wts.ravel()


def quadrature(spec: SurfaceSpec, resolution: int) -> SurfaceQuadrature:
    """Build nodes/weights approximating (S, sigma) at the given resolution."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    d = spec.dimension
    if spec.kind == "atoms":
        return SurfaceQuadrature(spec.points.copy(), spec.weights.copy(),
                                 "atoms")
    if spec.kind == "sphere":
        if d > SPHERE_DIM_CAP:
            raise ValueError(f"sphere quadrature capped at dimension "
                             f"{SPHERE_DIM_CAP} (cost guard)")
        nodes, wts = _sphere_directions(d, resolution)
        return SurfaceQuadrature(nodes, wts, f"sphere(d={d},res={resolution})")
    if spec.kind == "paraboloid":
        eta, w = _radial_shell(d - 1, 0.0, spec.radius, resolution,
                               lambda r: np.ones_like(r))
        height = 0.5 * np.sum(eta * eta, axis=1)
        nodes = np.concatenate([eta, height[:, None]], axis=1)
        return SurfaceQuadrature(nodes, w,
                                 f"paraboloid(d={d},R={spec.radius},res={resolution})")
    # cone: d sigma = d eta / |xi| with |xi| = sqrt(2) |eta| on the graph
    eta, w = _radial_shell(d - 1, spec.inner_radius, spec.outer_radius,
                           resolution,
                           lambda r: 1.0 / (math.sqrt(2.0) * r))
    height = np.linalg.norm(eta, axis=1)
    nodes = np.concatenate([eta, height[:, None]], axis=1)
    return SurfaceQuadrature(nodes, w,
                             f"cone(d={d},r0={spec.inner_radius},"
                             f"r1={spec.outer_radius},res={resolution})")


def lq_norm(values, q: float, quad: SurfaceQuadrature) -> float:
    """(sum_i w_i |v_i|^q)^{1/q} for q in (1, infinity)."""
    if not 1.0 < q < math.inf:
        raise ValueError("q must lie in (1, infinity)")
    values = np.asarray(values)
    if values.shape[0] != quad.weights.shape[0]:
        raise ValueError(f"got {values.shape[0]} values for "
                         f"{quad.weights.shape[0]} nodes")
    return float(np.sum(quad.weights * np.abs(values) ** q) ** (1.0 / q))


def quadrature_to_csv(quad: SurfaceQuadrature) -> str:
    """CSV with one row per node: d coordinate columns, then the weight."""
    d = quad.dimension
    buf = io.StringIO()
    buf.write(",".join([f"x{i}" for i in range(d)] + ["weight"]) + "\n")
    for node, w in zip(quad.nodes, quad.weights):
        buf.write(",".join(f"{v:.17g}" for v in node) + f",{w:.17g}\n")
    return buf.getvalue()


def quadrature_from_csv(text: str) -> SurfaceQuadrature:
    rows = [line for line in text.strip().splitlines() if line and not line.startswith("#")]
    data = np.array([[float(v) for v in line.split(",")] for line in rows[1:]])
    return SurfaceQuadrature(data[:, :-1], data[:, -1], "csv")
