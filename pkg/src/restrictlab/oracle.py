"""Fully discrete restriction model with an exactly computable constant.

A finite point set with counting measure plays the role of R^d and a
finite atomic measure plays (S, sigma).  For p = 1 the trivial bound

    ||g_hat||_{L^q(sigma)} <= (sum_i w_i)^{1/q} ||g_hat||_inf
                           <= (sum_i w_i)^{1/q} ||g||_1

certifies the a priori restriction constant exactly, which turns the
bisection-lemma inequalities into ground-truth checks: on this model a
violated bound can only mean an implementation bug.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .surfaces import SurfaceSpec, finite_atomic

MAX_BLOCKS = 16
MAX_LATTICE = 4096


@dataclass(frozen=True)
class DiscreteRestrictionModel:
    lattice: np.ndarray        # (n, d) spatial points, counting measure
    atoms: SurfaceSpec         # finite atomic (S, sigma)
    p: float = 1.0
    q: float = 2.0

    def __post_init__(self):
        lat = np.asarray(self.lattice, float)
        if lat.ndim != 2 or lat.shape[0] == 0:
            raise ValueError("lattice must be a nonempty (n, d) array")
        if self.atoms.kind != "atoms":
            raise ValueError("model surface must be a finite atomic measure")
        if lat.shape[1] != self.atoms.dimension:
            raise ValueError("lattice and atoms must share a dimension")
        if not (1.0 <= self.p <= 2.0 and self.q > self.p):
            raise ValueError("need p in [1,2] and q > p")
        object.__setattr__(self, "lattice", lat)

    @property
    def phases(self) -> np.ndarray:
        """(n_atoms, n_points) matrix e^{-2 pi i x_j . xi_i}."""
        return np.exp(-2j * np.pi * (self.atoms.points @ self.lattice.T))


def dft_restriction(g, model: DiscreteRestrictionModel) -> np.ndarray:
    """g_hat(xi_i) = sum_j g(x_j) e^{-2 pi i x_j . xi_i}, one value per atom."""
    g = np.asarray(g, complex)
    if g.shape != (model.lattice.shape[0],):
        raise ValueError(f"value list of length {g.shape} does not match "
                         f"lattice of size {model.lattice.shape[0]}")
    return model.phases @ g


def exact_c_restr(model: DiscreteRestrictionModel) -> float:
    """The certified constant (sum w_i)^{1/q}; only valid at p = 1."""
    if model.p != 1.0:
        raise ValueError("exact constant is only certified for p = 1 "
                         "(other exponents run in empirical mode)")
    return float(np.sum(model.atoms.weights) ** (1.0 / model.q))


@dataclass(frozen=True)
class DiscreteInstance:
    """One seeded verification instance: model, input values, block structure."""

    model: DiscreteRestrictionModel
    f: np.ndarray
    blocks: tuple   # tuple of index arrays partitioning the lattice
    seed: int

    def to_json(self) -> str:
        return json.dumps({
            "seed": self.seed,
            "p": self.model.p,
            "q": self.model.q,
            "lattice": self.model.lattice.tolist(),
            "atom_points": self.model.atoms.points.tolist(),
            "atom_weights": self.model.atoms.weights.tolist(),
            "f_re": self.f.real.tolist(),
            "f_im": self.f.imag.tolist(),
            "blocks": [np.asarray(b).tolist() for b in self.blocks],
        })

    @staticmethod
    def from_json(text: str) -> "DiscreteInstance":
        d = json.loads(text)
        model = DiscreteRestrictionModel(
            np.array(d["lattice"]),
            finite_atomic(np.array(d["atom_points"]), np.array(d["atom_weights"])),
            d["p"], d["q"])
        f = np.array(d["f_re"]) + 1j * np.array(d["f_im"])
        blocks = tuple(np.array(b, dtype=int) for b in d["blocks"])
        return DiscreteInstance(model, f, blocks, d["seed"])


def random_instance(seed: int, *, dimension: int = 2, n_points: int = 512,
                    n_blocks: int = 8, n_atoms: int = 16, q: float = 2.0,
                    freq_radius: float = 4.0) -> DiscreteInstance:
    """Deterministic instance: blocks partition the lattice, |f| <= 1."""
    if n_blocks > MAX_BLOCKS:
        raise ValueError(f"block count capped at {MAX_BLOCKS}")
    if n_points > MAX_LATTICE:
        raise ValueError(f"lattice size capped at {MAX_LATTICE}")
    if n_blocks > n_points:
        raise ValueError("cannot have more blocks than lattice points")
    rng = np.random.default_rng(seed)
    lattice = rng.uniform(-1.0, 1.0, size=(n_points, dimension))
    atoms = finite_atomic(rng.uniform(-freq_radius, freq_radius,
                                      size=(n_atoms, dimension)),
                          rng.uniform(0.25, 2.0, size=n_atoms))
    mag = np.sqrt(rng.uniform(0.0, 1.0, n_points))
    phase = rng.uniform(0.0, 2.0 * np.pi, n_points)
    f = mag * np.exp(1j * phase)
    # Random cut points give nonempty contiguous blocks over a shuffled order.
    perm = rng.permutation(n_points)
    cuts = np.sort(rng.choice(np.arange(1, n_points), size=n_blocks - 1,
                              replace=False)) if n_blocks > 1 else np.array([], int)
    blocks = tuple(np.sort(part) for part in np.split(perm, cuts))
    model = DiscreteRestrictionModel(lattice, atoms, 1.0, q)
    return DiscreteInstance(model, f, blocks, seed)
