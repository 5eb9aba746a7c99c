"""Random test objects (states, channels, distributions) for checks and tests."""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from .quantum_core import DensityOperator


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    """Ginibre-distributed state of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return DensityOperator(rho / np.real(np.trace(rho)))


def random_pure(d: int, rng: np.random.Generator) -> DensityOperator:
    return random_density(d, rng, rank=1)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    return unitary_group.rvs(d, random_state=rng)


def random_probability(k: int, rng: np.random.Generator, floor: float = 0.0) -> np.ndarray:
    p = rng.dirichlet(np.ones(k))
    if floor:
        p = (1 - k * floor) * p + floor
    return p


def random_psd(d: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    rank = int(rng.integers(1, d + 1))
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    return scale * (g @ g.conj().T) / d


def random_contraction(d: int, rng: np.random.Generator) -> np.ndarray:
    """Random operator a with 0 <= a <= 1."""
    u = random_unitary(d, rng)
    vals = rng.uniform(0.0, 1.0, size=d)
    # exercise the boundary of the operator interval now and then
    vals[rng.random(d) < 0.25] = 1.0
    vals[rng.random(d) < 0.25] = 0.0
    return (u * vals) @ u.conj().T


def random_channel(n_inputs: int, d: int, rng: np.random.Generator, rank: int | None = None, id: str = "w"):
    from .channels import CqChannel

    states = [random_density(d, rng, rank) for _ in range(n_inputs)]
    return CqChannel(states, alphabet=tuple(str(i) for i in range(n_inputs)), id=id)


def random_compound(members: int, n_inputs: int, d: int, rng: np.random.Generator, rank: int | None = None):
    from .channels import CompoundSet

    return CompoundSet(
        [random_channel(n_inputs, d, rng, rank, id=f"t{i}") for i in range(members)]
    )
