"""Dense Hermitian kernels and entropy functionals.

All logarithms are base 2. Support violations in relative entropies are
returned as ``math.inf``.
"""

from __future__ import annotations

import math
from functools import cached_property, reduce
from typing import Sequence, Union

import numpy as np

from .errors import DimensionMismatchError, InvalidStateError
from .numerics import TOL

LOG2E = 1.0 / math.log(2.0)


def check_hermitian(a, tol: float | None = None) -> np.ndarray:
    """Return ``a`` as a complex square array, symmetrized, after checking Hermiticity."""
    tol = TOL.hermitian if tol is None else tol
    arr = np.asarray(a, dtype=complex)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise InvalidStateError(f"expected a square matrix, got shape {arr.shape}")
    dev = np.max(np.abs(arr - arr.conj().T)) if arr.size else 0.0
    # scale-aware: entries of size 1 dominate at d <= 64
    if dev > tol * max(1.0, float(np.max(np.abs(arr)))):
        raise InvalidStateError(f"matrix is not Hermitian (deviation {dev:.3e})")
    return (arr + arr.conj().T) / 2


def _clamped_eigh(a: np.ndarray, name: str = "operator"):
    vals, vecs = np.linalg.eigh(a)
    if vals.size and vals[0] < -TOL.psd:
        raise InvalidStateError(f"{name} has negative eigenvalue {vals[0]:.3e}")
    vals = np.where(vals <= TOL.eig_cutoff, 0.0, vals)
    return vals, vecs


class DensityOperator:
    """PSD, unit-trace Hermitian matrix with a lazily cached eigendecomposition."""

    def __init__(self, matrix, *, validate: bool = True):
        arr = check_hermitian(matrix) if validate else np.asarray(matrix, dtype=complex)
        arr.setflags(write=False)
        self.matrix = arr
        if validate:
            tr = float(np.real(np.trace(arr)))
            if abs(tr - 1.0) > TOL.trace:
                raise InvalidStateError(f"trace is {tr!r}, expected 1")
            _ = self.spectrum  # PSD check

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @cached_property
    def _eig(self):
        return _clamped_eigh(self.matrix, "density operator")

    @property
    def spectrum(self) -> np.ndarray:
        return self._eig[0]

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._eig[1]

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.matrix, dtype=dtype)

    def __repr__(self):
        return f"DensityOperator(dim={self.dim})"

    @classmethod
    def maximally_mixed(cls, dim: int) -> "DensityOperator":
        return cls(np.eye(dim) / dim)

    @classmethod
    def pure(cls, vector) -> "DensityOperator":
        v = np.asarray(vector, dtype=complex)
        v = v / np.linalg.norm(v)
        return cls(np.outer(v, v.conj()))

    @classmethod
    def diagonal(cls, probs) -> "DensityOperator":
        return cls(np.diag(np.asarray(probs, dtype=float)))


StateLike = Union[DensityOperator, np.ndarray]


def as_density(rho: StateLike) -> DensityOperator:
    if isinstance(rho, DensityOperator):
        return rho
    return DensityOperator(rho)


def _matrix(x) -> np.ndarray:
    return x.matrix if isinstance(x, DensityOperator) else np.asarray(x, dtype=complex)


def _eig(x, name="operator"):
    if isinstance(x, DensityOperator):
        return x._eig
    return _clamped_eigh(check_hermitian(x), name)


def check_probability(p, tol: float | None = None) -> np.ndarray:
    tol = TOL.probability if tol is None else tol
    arr = np.asarray(p, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise InvalidStateError("probability vector must be a non-empty 1-d array")
    if np.any(arr < -tol):
        raise InvalidStateError("probability vector has negative entries")
    if abs(arr.sum() - 1.0) > max(tol, 1e-12 * arr.size):
        raise InvalidStateError(f"probability vector sums to {arr.sum()!r}")
    return np.clip(arr, 0.0, None)


def _xlogx(vals: np.ndarray) -> float:
    pos = vals[vals > 0]
    return float(np.sum(pos * np.log2(pos)))


def von_neumann_entropy(rho: StateLike) -> float:
    vals = as_density(rho).spectrum
    return max(0.0, -_xlogx(vals))


def shannon_entropy(p) -> float:
    return max(0.0, -_xlogx(check_probability(p)))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def kl_divergence(p, q) -> float:
    """D(p||q) in bits; ``inf`` unless p is absolutely continuous w.r.t. q."""
    p = check_probability(p)
    q = check_probability(q)
    if p.shape != q.shape:
        raise DimensionMismatchError(f"label sets differ: {p.size} vs {q.size}")
    on = p > 0
    if np.any(q[on] <= 0):
        return math.inf
    return max(0.0, float(np.sum(p[on] * (np.log2(p[on]) - np.log2(q[on])))))


def quantum_relative_entropy(rho: StateLike, sigma: StateLike) -> float:
    """S(rho||sigma) = tr rho (log rho - log sigma), or ``inf`` off-support."""
    rho = as_density(rho)
    sigma = as_density(sigma)
    if rho.dim != sigma.dim:
        raise DimensionMismatchError(f"dimensions differ: {rho.dim} vs {sigma.dim}")
    lam, u = rho._eig
    mu, v = sigma._eig
    overlap = np.abs(u.conj().T @ v) ** 2  # overlap[i, j] = |<u_i|v_j>|^2
    ker = mu <= 0
    if np.any(ker) and float(lam @ overlap[:, ker].sum(axis=1)) > TOL.support:
        return math.inf
    logmu = np.zeros_like(mu)
    logmu[~ker] = np.log2(mu[~ker])
    cross = float(lam @ (overlap @ logmu))
    return max(0.0, _xlogx(lam) - cross)


def trace_distance(rho: StateLike, sigma: StateLike) -> float:
    """Trace norm ||rho - sigma||_1 (in [0, 2] for states)."""
    a, b = _matrix(rho), _matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatchError(f"dimensions differ: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.sum(np.abs(np.linalg.eigvalsh((diff + diff.conj().T) / 2))))


def support_projection(rho, cutoff: float | None = None) -> np.ndarray:
    cutoff = TOL.eig_cutoff if cutoff is None else cutoff
    vals, vecs = _eig(rho)
    keep = vecs[:, vals > cutoff]
    return keep @ keep.conj().T


def generalized_inverse_sqrt(a, cutoff: float | None = None) -> np.ndarray:
    """Inverse square root on the support of a PSD operator, zero on its kernel."""
    cutoff = TOL.eig_cutoff if cutoff is None else cutoff
    vals, vecs = np.linalg.eigh(check_hermitian(a))
    if vals.size and vals[0] < -max(cutoff, TOL.psd):
        raise InvalidStateError(f"operator has negative eigenvalue {vals[0]:.3e}")
    inv = np.zeros_like(vals)
    on = vals > cutoff
    inv[on] = 1.0 / np.sqrt(vals[on])
    return (vecs * inv) @ vecs.conj().T


def min_eigenvalue(a) -> float:
    if isinstance(a, DensityOperator):
        return float(np.linalg.eigvalsh(a.matrix)[0])
    return float(np.linalg.eigvalsh(check_hermitian(a))[0])


def kron_all(factors: Sequence) -> np.ndarray:
    return reduce(np.kron, [_matrix(f) for f in factors])


class Pvm:
    """Finite family of PSD operators summing to the identity.

    Elements are stored as an array of shape ``(m, dim, dim)``. Despite the
    name, non-projective (POVM) families are accepted; :attr:`is_projective`
    reports whether every element is idempotent.
    """

    def __init__(self, elements, *, validate: bool = True):
        arr = np.asarray(elements, dtype=complex)
        if arr.ndim != 3 or arr.shape[1] != arr.shape[2]:
            raise InvalidStateError(f"PVM elements must have shape (m, d, d), got {arr.shape}")
        if validate:
            arr = np.stack([check_hermitian(e, tol=1e-10) for e in arr])
            for e in arr:
                if np.linalg.eigvalsh(e)[0] < -TOL.psd:
                    raise InvalidStateError("PVM element is not PSD")
            dev = np.max(np.abs(arr.sum(axis=0) - np.eye(arr.shape[1])))
            if dev > TOL.completeness:
                raise InvalidStateError(f"PVM elements do not sum to identity (deviation {dev:.3e})")
        self.elements = arr

    @property
    def dim(self) -> int:
        return self.elements.shape[1]

    def __len__(self):
        return self.elements.shape[0]

    @property
    def is_projective(self) -> bool:
        return all(
            np.max(np.abs(e @ e - e)) <= TOL.idempotency for e in self.elements
        )

    def probabilities(self, rho: StateLike) -> np.ndarray:
        m = _matrix(rho)
        if m.shape[0] != self.dim:
            raise DimensionMismatchError(f"state dim {m.shape[0]} vs PVM dim {self.dim}")
        probs = np.real(np.einsum("kij,ji->k", self.elements, m))
        probs = np.where(probs <= TOL.eig_cutoff, 0.0, probs)
        return probs / probs.sum()

    @classmethod
    def from_projector(cls, projector) -> "Pvm":
        p = np.asarray(projector, dtype=complex)
        return cls(np.stack([p, np.eye(p.shape[0]) - p]))

    @classmethod
    def from_basis(cls, unitary) -> "Pvm":
        u = np.asarray(unitary, dtype=complex)
        return cls(np.einsum("ik,jk->kij", u, u.conj()))


def measured_relative_entropy(rho: StateLike, sigma: StateLike, m: Pvm) -> float:
    """KL divergence between the outcome statistics of ``m`` on rho and sigma."""
    return kl_divergence(m.probabilities(rho), m.probabilities(sigma))
