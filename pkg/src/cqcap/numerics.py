"""Numerical tolerances and budgets.

Every module reads its thresholds from :data:`TOL`. Values can be overridden
for a whole process with :func:`configure` (the CLI feeds the optional
``"numerics"`` section of its config file through here).
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass


@dataclass
class Tolerances:
    hermitian: float = 1e-12
    psd: float = 1e-10
    trace: float = 1e-10
    probability: float = 1e-12
    completeness: float = 1e-9
    idempotency: float = 1e-9
    eig_cutoff: float = 1e-12
    support: float = 1e-10
    # largest d**n allowed for dense n-letter operators
    max_dense_dim: int = 4096
    # largest outcome count for exact enumeration
    max_enumeration: int = 1_000_000


TOL = Tolerances()


def configure(**overrides) -> Tolerances:
    """Update :data:`TOL` in place; unknown keys raise ``KeyError``."""
    names = {f.name for f in dataclasses.fields(Tolerances)}
    for key, value in overrides.items():
        if key not in names:
            raise KeyError(f"unknown numerics setting {key!r}")
        setattr(TOL, key, type(getattr(TOL, key))(value))
    return TOL


def reset() -> Tolerances:
    for f in dataclasses.fields(Tolerances):
        setattr(TOL, f.name, f.default)
    return TOL
