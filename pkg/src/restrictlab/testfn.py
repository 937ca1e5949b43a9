"""Structured test inputs: Gaussian packets with exact Fourier transforms.

The input family is deliberately closed under the Fourier transform:
every member is a finite superposition of (possibly anisotropic,
translated, modulated) Gaussians, so transforms, L^p norms of single
packets, and Gaussian-measure averages all have closed forms and
quadrature never confounds a verification.  Knapp examples are realized
as anisotropic packets from this family.

Fourier convention: f_hat(y) = integral f(x) e^{-2 pi i x.y} dx.  A packet

    f(x) = amplitude * e^{2 pi i x.modulation} * exp(-pi (x-c)^T W^{-2} (x-c))

with W symmetric positive definite has

    f_hat(y) = amplitude * det W * e^{-2 pi i c.(y-m)} * exp(-pi (y-m)^T W^2 (y-m)),

m = modulation, so width w (W = w I) gives the scaling law f_hat(y) =
w^d e^{-pi w^2 |y|^2} and the self-dual Gaussian at w = 1.

Averages (f_hat * mu_t)(xi) are evaluated through the identity
f_hat * mu_t = (f . mu_check(t .))^ as the transform of
x -> f(x) mu_hat(t x) (our measures are symmetric, mu_check = mu_hat):
closed form when the measure is Gaussian or a point mass, tensor
Gauss-Hermite aligned to the packet otherwise, doubling the order until
the requested tolerance is met.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import QuadratureError
from .measures import AveragingMeasure, mu_hat_radial

MAX_PACKETS = 64
# Magnitudes below this are compared absolutely rather than relatively.
ABS_FLOOR = 1e-12

_MAX_ORDER = {1: 4096, 2: 512, 3: 128}


@dataclass(frozen=True)
class GaussianPacket:
    dimension: int
    center: np.ndarray = None
    width: np.ndarray = None
    modulation: np.ndarray = None
    amplitude: complex = 1.0 + 0.0j

    def __post_init__(self):
        d = self.dimension
        if d < 1:
            raise ValueError("dimension must be >= 1")
        c = np.zeros(d) if self.center is None else np.asarray(self.center, float).reshape(d)
        m = np.zeros(d) if self.modulation is None else np.asarray(self.modulation, float).reshape(d)
        if self.width is None:
            w = np.eye(d)
        else:
            w = np.asarray(self.width, float)
            if w.ndim == 0:
                w = float(w) * np.eye(d)
            w = w.reshape(d, d)
        if not np.allclose(w, w.T, atol=1e-12):
            raise ValueError("width matrix must be symmetric")
        try:
            np.linalg.cholesky(w)
        except np.linalg.LinAlgError:
            raise ValueError("width matrix must be positive definite") from None
        object.__setattr__(self, "center", c)
        object.__setattr__(self, "width", w)
        object.__setattr__(self, "modulation", m)
        object.__setattr__(self, "amplitude", complex(self.amplitude))


@dataclass(frozen=True)
class TestFunction:
    packets: tuple = field(default_factory=tuple)

    def __post_init__(self):
        pk = tuple(self.packets)
        if not pk:
            raise ValueError("superposition must be nonempty")
        if len(pk) > MAX_PACKETS:
            raise ValueError(f"superposition limited to {MAX_PACKETS} packets")
        if len({p.dimension for p in pk}) != 1:
            raise ValueError("all packets must share one dimension")
        object.__setattr__(self, "packets", pk)

    @property
    def dimension(self) -> int:
        return self.packets[0].dimension


@dataclass(frozen=True)
class ScaledMeasureAverage:
    """The dilate mu_t of an averaging measure, mu_hat_t(x) = mu_hat(t x)."""

    measure: AveragingMeasure
    t: float

    def __post_init__(self):
        if not self.t > 0:
            raise ValueError("scale t must be positive")


def _as_packets(f) -> tuple:
    if isinstance(f, GaussianPacket):
        return (f,)
    if isinstance(f, TestFunction):
        return f.packets
    raise TypeError(f"expected GaussianPacket or TestFunction, got {type(f)!r}")


def dimension_of(f) -> int:
    return _as_packets(f)[0].dimension


def evaluate(f, x) -> np.ndarray:
    """Pointwise values f(x); x is a point or an (n, d) batch."""
    pks = _as_packets(f)
    d = pks[0].dimension
    x = np.asarray(x, float)
    single = x.ndim == 1
    pts = x.reshape(-1, d)
    out = np.zeros(len(pts), complex)
    for p in pks:
        dx = pts - p.center
        winv = np.linalg.inv(p.width)
        q = np.einsum("ij,ij->i", dx @ (winv @ winv), dx)
        out += p.amplitude * np.exp(-math.pi * q + 2j * math.pi * (pts @ p.modulation))
    return out[0] if single else out


def ft_exact(f, y) -> np.ndarray:
    """Closed-form Fourier transform at y (a point or an (n, d) batch)."""
    pks = _as_packets(f)
    d = pks[0].dimension
    y = np.asarray(y, float)
    single = y.ndim <= 1
    pts = y.reshape(-1, d)
    out = np.zeros(len(pts), complex)
    for p in pks:
        dy = pts - p.modulation
        w2 = p.width @ p.width
        q = np.einsum("ij,ij->i", dy @ w2, dy)
        det = np.linalg.det(p.width)
        out += p.amplitude * det * np.exp(-math.pi * q - 2j * math.pi * (dy @ p.center))
    return out[0] if single else out


def dilate(f, lam: float):
    """The function x -> f(lam x), staying inside the packet family."""
    if not lam > 0:
        raise ValueError("dilation factor must be positive")
    pks = [GaussianPacket(p.dimension, p.center / lam, p.width / lam,
                          lam * p.modulation, p.amplitude) for p in _as_packets(f)]
    return TestFunction(tuple(pks))


def autocorrelation_packet(p: GaussianPacket) -> GaussianPacket:
    """h = f * (conjugated reflection of f), so that h_hat = |f_hat|^2."""
    if not isinstance(p, GaussianPacket):
        raise ValueError("autocorrelation requires a single Gaussian packet")
    d = p.dimension
    det = np.linalg.det(p.width)
    amp = abs(p.amplitude) ** 2 * det / 2 ** (d / 2)
    return GaussianPacket(d, np.zeros(d), math.sqrt(2.0) * p.width,
                          p.modulation, amp)


@lru_cache(maxsize=None)
def _gh_nodes(order: int):
    x, w = np.polynomial.hermite.hermgauss(order)
    return x, w


def _tensor_gh(d: int, order: int):
    x, w = _gh_nodes(order)
    if d == 1:
        return x[:, None], w
    grids = np.meshgrid(*([x] * d), indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=1)
    wt = np.ones(order ** d)
    for axis in range(d):
        wt *= np.meshgrid(*([w] * d), indexing="ij")[axis].ravel()
    return nodes, wt


def _packet_transform_quadrature(p: GaussianPacket, xi: np.ndarray, extra,
                                 tol: float, max_order=None):
    """integral f_p(x) extra(x) e^{-2 pi i x.xi} dx by aligned Gauss-Hermite.

    Substituting x = c + W v / sqrt(pi) absorbs the packet's own Gaussian
    into the Hermite weight; `extra` must be vectorized over (n, d) points.
    """
    d = p.dimension
    cap = max_order or _MAX_ORDER.get(d)
    if cap is None:
        raise QuadratureError(f"no quadrature path for dimension {d}")
    jac = np.linalg.det(p.width) / math.pi ** (d / 2)
    freq = p.modulation - xi
    prev = None
    order = 8
    while order <= cap:
        v, wt = _tensor_gh(d, order)
        x = p.center + v @ (p.width.T / math.sqrt(math.pi))
        vals = np.exp(2j * math.pi * (x @ freq)) * extra(x)
        cur = p.amplitude * jac * np.sum(wt * vals)
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * max(abs(cur), ABS_FLOOR):
                return cur, err
        prev = cur
        order *= 2
    raise QuadratureError(
        f"packet quadrature did not converge below {tol:g} at order {cap}",
        achieved=abs(cur - prev) if prev is not None else None)


def lp_norm(f, p: float, tol: float = 1e-8) -> float:
    """L^p norm for p in [1, 2]; closed form for one packet.

    Superpositions integrate |f|^p against a Gaussian envelope wide enough
    to dominate every packet, with Gauss-Hermite order doubling.
    """
    if not 1.0 <= p <= 2.0:
        raise ValueError("p must lie in [1, 2]")
    pks = _as_packets(f)
    d = pks[0].dimension
    if len(pks) == 1:
        pk = pks[0]
        det = np.linalg.det(pk.width)
        return abs(pk.amplitude) * det ** (1 / p) * p ** (-d / (2 * p))
    centers = np.stack([pk.center for pk in pks])
    xbar = centers.mean(axis=0)
    widest = max(float(np.linalg.eigvalsh(pk.width)[-1]) for pk in pks)
    spread = float(np.max(np.linalg.norm(centers - xbar, axis=1)))
    sigma = 1.5 * widest + spread
    cap = _MAX_ORDER.get(d)
    if cap is None:
        raise QuadratureError(f"no quadrature path for dimension {d}")
    jac = sigma ** d / math.pi ** (d / 2)
    prev = None
    order = 16
    while order <= cap:
        v, wt = _tensor_gh(d, order)
        x = xbar + sigma * v / math.sqrt(math.pi)
        mag = np.abs(evaluate(f, x))
        vsq = np.sum(v * v, axis=1) if d > 1 else v[:, 0] ** 2
        with np.errstate(divide="ignore"):
            h = np.exp(p * np.log(mag) + vsq)
        cur = jac * float(np.sum(wt * h))
        if prev is not None:
            err = abs(cur - prev)
            if err <= tol * max(abs(cur), ABS_FLOOR):
                return cur ** (1 / p)
        prev = cur
        order *= 2
    raise QuadratureError(
        f"lp_norm quadrature did not converge below {tol:g}",
        achieved=abs(cur - prev) / max(abs(cur), ABS_FLOOR))


def _average_gaussian_closed(p: GaussianPacket, t: float, xi: np.ndarray) -> complex:
    """Closed form of (f_hat * mu_t)(xi) for the Gaussian density measure.

    Completing the (complex) square in
    integral a e^{2 pi i x.m} G_W(x-c) e^{-pi t^2 |x|^2} e^{-2 pi i x.xi} dx
    gives a det(M)^{-1/2} exp(-pi (gamma - beta^T M^{-1} beta)) with
    M = W^{-2} + t^2 I, beta = W^{-2} c + i (m - xi), gamma = c^T W^{-2} c.
    """
    d = p.dimension
    winv = np.linalg.inv(p.width)
    w2inv = winv @ winv
    m_mat = w2inv + t * t * np.eye(d)
    beta = w2inv @ p.center + 1j * (p.modulation - xi)
    gamma = float(p.center @ w2inv @ p.center)
    sol = np.linalg.solve(m_mat, beta)
    quad = gamma - complex(beta @ sol)
    det = np.linalg.det(m_mat)
    return p.amplitude * det ** (-0.5) * np.exp(-math.pi * quad)


def average(f, avg: ScaledMeasureAverage, xi, tol: float = 1e-6,
            method: str = "auto"):
    """(f_hat * mu_t)(xi), via the transform of x -> f(x) mu_hat(t x)."""
    pks = _as_packets(f)
    d = pks[0].dimension
    if d != avg.measure.dimension:
        raise ValueError("function and measure dimensions differ")
    xi = np.asarray(xi, float).reshape(d)
    mu, t = avg.measure, avg.t
    if method not in ("auto", "closed", "quadrature"):
        raise ValueError(f"unknown method {method!r}")
    if mu.kind == "zero" and method != "quadrature":
        return complex(ft_exact(f, xi))
    if mu.kind == "gaussian" and method in ("auto", "closed"):
        return complex(sum(_average_gaussian_closed(p, t, xi) for p in pks))
    if method == "closed":
        raise ValueError(f"no closed form for measure kind {mu.kind!r}")

    def extra(x):
        return mu_hat_radial(mu, t * np.linalg.norm(x, axis=1))

    total = 0.0 + 0.0j
    for p in pks:
        if p.amplitude == 0:
            continue
        val, _ = _packet_transform_quadrature(p, xi, extra, tol)
        total += val
    return complex(total)
