"""Method of types, universal tests and information-density threshold sets.

Everything here is exact: probabilities of test sets are summed over type
classes (or over the full outcome table when the outcome space is small),
never sampled, except in :func:`hoeffding_tail_check` when the law is too
large to enumerate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import binomtest

from .capacity import classical_mutual_information
from .channels import CqChannel, product_output
from .errors import BudgetExceededError, ContractViolation, DimensionMismatchError, InvalidStateError
from .numerics import TOL
from .quantum_core import (
    Pvm,
    as_density,
    binary_entropy,
    check_hermitian,
    check_probability,
    kl_divergence,
    kron_all,
    quantum_relative_entropy,
)

# exponent constant of the type-class test: Pinsker gives D >= ||p - q||_1^2 / (2 ln 2) bits
UNIVERSAL_C = 1.0 / (2.0 * math.log(2.0))


# --------------------------------------------------------------------------- types


@dataclass(frozen=True)
class TypeClass:
    alphabet: tuple
    length: int
    counts: tuple

    @property
    def type(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=float) / self.length


def type_of(word: Sequence, alphabet: Sequence | None = None) -> TypeClass:
    """Type of ``word``; the alphabet defaults to its sorted distinct symbols."""
    alphabet = tuple(sorted(set(word))) if alphabet is None else tuple(alphabet)
    if len(word) == 0:
        raise InvalidStateError("empty word has no type")
    index = {a: i for i, a in enumerate(alphabet)}
    counts = [0] * len(alphabet)
    for s in word:
        if s not in index:
            raise InvalidStateError(f"unknown symbol {s!r}")
        counts[index[s]] += 1
    return TypeClass(alphabet, len(word), tuple(counts))


def enumerate_types(n_symbols: int, k: int):
    """All count vectors of length ``n_symbols`` summing to ``k`` (stars and bars)."""
    for bars in itertools.combinations(range(k + n_symbols - 1), n_symbols - 1):
        prev, counts = -1, []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(k + n_symbols - 2 - prev)
        yield tuple(counts)


def log2_type_class_size(counts) -> float:
    k = sum(counts)
    return (math.lgamma(k + 1) - sum(math.lgamma(c + 1) for c in counts)) / math.log(2)


def type_class_probability(counts, q) -> float:
    """q^{(x) k} of the type class with the given counts."""
    log2p = log2_type_class_size(counts)
    for c, qi in zip(counts, q):
        if c:
            if qi <= 0:
                return 0.0
            log2p += c * math.log2(qi)
    return 2.0**log2p


# --------------------------------------------------------------- universal test set


@dataclass
class UniversalTestSet:
    """Type-level description of X_{k,delta} = {x^k : min_q ||type(x^k) - q||_1 <= delta}."""

    k: int
    delta: float
    n_symbols: int
    accepted: frozenset
    omega_masses: np.ndarray
    r_mass: float
    first_kind_bound: float
    second_kind_bound: float
    eta: float
    divergence: float

    def contains_type(self, counts) -> bool:
        return tuple(counts) in self.accepted

    def contains(self, indices: Sequence[int]) -> bool:
        counts = [0] * self.n_symbols
        for i in indices:
            counts[i] += 1
        return tuple(counts) in self.accepted

    def check(self, slack: float = 1e-12):
        if np.any(self.omega_masses < self.first_kind_bound - slack):
            raise ContractViolation(
                "universal_test_set",
                f"first-kind mass {self.omega_masses.min():.6g} < {self.first_kind_bound:.6g}",
            )
        if self.r_mass > self.second_kind_bound + slack:
            raise ContractViolation(
                "universal_test_set",
                f"reference mass {self.r_mass:.6g} > {self.second_kind_bound:.6g}",
            )


def eta(delta: float, r_min: float, n_symbols: int) -> float:
    return -delta * math.log2(delta / n_symbols) - delta * math.log2(r_min)


def universal_test_set(omega, r, k: int, delta: float, c: float = UNIVERSAL_C, check: bool = True):
    r = check_probability(r)
    if np.any(r <= 0):
        raise InvalidStateError("reference distribution must be strictly positive")
    if delta <= 0:
        raise InvalidStateError("delta must be positive")
    omega = np.stack([check_probability(q) for q in omega])
    if omega.shape[1] != r.size:
        raise DimensionMismatchError("omega and r live on different alphabets")
    n_symbols = r.size
    if math.comb(k + n_symbols - 1, n_symbols - 1) > TOL.max_enumeration:
        raise BudgetExceededError("too many type classes to enumerate")

    accepted = []
    omega_masses = np.zeros(len(omega))
    r_mass = 0.0
    for counts in enumerate_types(n_symbols, k):
        t = np.asarray(counts, dtype=float) / k
        if np.min(np.abs(omega - t).sum(axis=1)) <= delta + 1e-12:
            accepted.append(counts)
            omega_masses += [type_class_probability(counts, q) for q in omega]
            r_mass += type_class_probability(counts, r)

    log2_count = n_symbols * math.log2(k + 1)
    divergence = min(kl_divergence(q, r) for q in omega)
    eta_val = eta(delta, float(r.min()), n_symbols)
    first = 1.0 - _pow2(log2_count - k * c * delta**2)
    second = _pow2(log2_count - k * (divergence - eta_val))
    out = UniversalTestSet(
        k, delta, n_symbols, frozenset(accepted), np.minimum(omega_masses, 1.0),
        min(r_mass, 1.0), first, second, eta_val, divergence,
    )
    if check:
        out.check()
    return out


def _pow2(x: float) -> float:
    return math.inf if x > 1000 else 2.0**x


# -------------------------------------------------------------------- schedule


@dataclass(frozen=True)
class UniversalSchedule:
    l: int
    m: int
    k: int
    y: int
    delta: float
    tau1: float
    tau2: float
    zeta: float
    eta: float
    c: float
    d: int
    sigma_min_eig: float


def schedule(l: int, sigma_min_eig: float, d: int, c: float = UNIVERSAL_C) -> UniversalSchedule:
    """Block lengths and error terms of the universal measurement at length ``l``."""
    if l < 2:
        raise InvalidStateError("l must be at least 2")
    if sigma_min_eig <= 0:
        raise InvalidStateError("reference state must be invertible")
    if d < 2:
        raise InvalidStateError("dimension must be at least 2")
    # ceil(log_d l^(1/8)), guarded against rounding up exact integers
    m = max(1, math.ceil(math.log(l) / (8 * math.log(d)) - 1e-12))
    y = l % m
    k = (l - y) // m
    delta = l ** (-0.25)
    eta_val = -delta * math.log2(delta / d) - delta * math.log2(sigma_min_eig)
    tau1 = _pow2(d**m * math.log2(k + 1) - k * c * delta**2)
    tau2 = (
        d * math.log2(m + 1) / m
        + (d ** (2 * m) + d**m) * math.log2(k + 1) / (k * m)
        + eta_val
    )
    # the first-kind guarantee 1 - tau1 is vacuous once tau1 >= 1; clamping keeps zeta a valid bound
    t1 = min(tau1, 1.0)
    zeta = (1 - t1) * tau2 - t1 * math.log2(sigma_min_eig) + 1.0 / l
    return UniversalSchedule(l, m, k, y, delta, tau1, tau2, zeta, eta_val, c, d, sigma_min_eig)


# ---------------------------------------------------------------- universal PVM


def _ordered_eigenbasis(sigma: np.ndarray):
    vals, vecs = np.linalg.eigh(sigma)
    # fix phases: first entry of largest modulus made real positive
    for j in range(vecs.shape[1]):
        i = int(np.argmax(np.abs(vecs[:, j]) > 1e-9))
        vecs[:, j] *= np.exp(-1j * np.angle(vecs[i, j]))
    keys = [
        (-round(float(v), 9), tuple(np.round(vecs[:, j].real, 9)), tuple(np.round(vecs[:, j].imag, 9)))
        for j, v in enumerate(vals)
    ]
    order = sorted(range(len(vals)), key=lambda j: keys[j])
    return vals[order], vecs[:, order]


def _digits(index: int, base: int, width: int) -> list:
    out = []
    for _ in range(width):
        index, r = divmod(index, base)
        out.append(r)
    return out[::-1]


@dataclass
class UniversalPvm:
    """Two-outcome measurement {P_l, 1 - P_l} on H^{(x) l}, diagonal in basis^{(x) l}."""

    l: int
    schedule: UniversalSchedule
    basis: np.ndarray
    eigenvalues: np.ndarray
    test_set: UniversalTestSet
    omega_masses: np.ndarray
    sigma_mass: float
    relative_entropy: float
    per_member_relative_entropy: np.ndarray

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def first_kind_bound(self) -> float:
        return 1.0 - self.schedule.tau1

    @property
    def second_kind_bound(self) -> float:
        return _pow2(-self.l * (self.relative_entropy - self.schedule.tau2))

    def accepts(self, digits: Sequence[int]) -> bool:
        """Whether the product eigenvector with these single-letter indices lies in P_l."""
        m, k, d = self.schedule.m, self.schedule.k, self.dim
        blocks = []
        for b in range(k):
            sym = 0
            for i in digits[b * m : (b + 1) * m]:
                sym = sym * d + i
            blocks.append(sym)
        return self.test_set.contains(blocks)

    def indicator(self) -> np.ndarray:
        d, l = self.dim, self.l
        if d**l > TOL.max_enumeration:
            raise BudgetExceededError("indicator too large")
        return np.array([self.accepts(_digits(i, d, l)) for i in range(d**l)])

    def projector(self) -> np.ndarray:
        d, l = self.dim, self.l
        if d**l > TOL.max_dense_dim:
            raise BudgetExceededError(f"d**l = {d**l} exceeds the dense budget")
        u = kron_all([self.basis] * l)
        return (u * self.indicator()) @ u.conj().T

    def pvm(self) -> Pvm:
        return Pvm.from_projector(self.projector())

    def check(self, slack: float = 1e-12):
        if np.any(self.omega_masses < self.first_kind_bound - slack):
            raise ContractViolation("universal_pvm", "first-kind mass below 1 - tau1")
        if self.sigma_mass > self.second_kind_bound + slack:
            raise ContractViolation("universal_pvm", "second-kind mass above 2^{-l(S - tau2)}")


def universal_pvm(omega, sigma, l: int, basis=None, c: float = UNIVERSAL_C, check: bool = True) -> UniversalPvm:
    """Universal test of the i.i.d. family omega^{(x) l} against sigma^{(x) l}.

    The test is built in a product eigenbasis of sigma: inner blocks of
    length m are pinched in that basis, and length-k sequences of block
    outcomes are accepted when their type lies within l1-distance delta of
    some member's pinched distribution. ``basis`` may be supplied to fix the
    eigenbasis (its columns must diagonalize sigma).
    """
    sigma = as_density(sigma)
    omega = [as_density(w) for w in omega]
    if not omega:
        raise InvalidStateError("omega must be non-empty")
    d = sigma.dim
    if any(w.dim != d for w in omega):
        raise DimensionMismatchError("omega members and sigma differ in dimension")
    lam_min = float(np.linalg.eigvalsh(sigma.matrix)[0])
    if lam_min <= TOL.eig_cutoff:
        raise InvalidStateError("reference state must be invertible")
    if basis is None:
        vals, u = _ordered_eigenbasis(sigma.matrix.copy())
    else:
        u = np.asarray(basis, dtype=complex)
        diag = u.conj().T @ sigma.matrix @ u
        if np.max(np.abs(diag - np.diag(np.diag(diag)))) > 1e-9:
            raise InvalidStateError("supplied basis does not diagonalize sigma")
        vals = np.real(np.diag(diag))
    sched = schedule(l, lam_min, d, c)
    m, k = sched.m, sched.k
    if d**m > 64:
        raise BudgetExceededError("inner block alphabet too large")

    def pinched(rho):
        q1 = np.clip(np.real(np.einsum("ij,jk,ki->i", u.conj().T, rho.matrix, u)), 0, None)
        q1 = q1 / q1.sum()
        return kron_all([q1[:, None]] * m).ravel() if m > 1 else q1

    r1 = np.clip(vals, 0, None) / np.sum(vals)
    r = kron_all([r1[:, None]] * m).ravel() if m > 1 else r1
    omega_q = [pinched(w) for w in omega]
    test = universal_test_set(omega_q, r, k, sched.delta, c, check=check)
    rel = np.array([quantum_relative_entropy(w, sigma) for w in omega])
    out = UniversalPvm(
        l, sched, u, vals, test, test.omega_masses, test.r_mass, float(rel.min()), rel
    )
    if check:
        out.check()
    return out


# -------------------------------------------------------------- Nagaoka chain


@dataclass
class NagaokaChain:
    s_m: float
    lower: float
    mass_rho: float
    mass_sigma: float
    l: int
    s_target: float

    @property
    def slack(self) -> float:
        return self.s_m / self.l - self.lower


def nagaoka_chain_bound(rho, sigma, test, l: int, s_target: float) -> NagaokaChain:
    """Measured relative entropy of a two-outcome test on rho^{(x)l}, sigma^{(x)l}
    and the chain lower bound -h(a)/l + a * min(s_target, -log(b)/l).

    ``test`` is a :class:`UniversalPvm`, a two-outcome :class:`Pvm` on the
    l-fold space, or a projector matrix.
    """
    if isinstance(test, UniversalPvm):
        idx = None
        rho, sigma = as_density(rho), as_density(sigma)
        # masses of the supplied states, not of the omega the test was built for
        q = np.clip(np.real(np.einsum("ij,jk,ki->i", test.basis.conj().T, rho.matrix, test.basis)), 0, None)
        s = np.clip(np.real(np.einsum("ij,jk,ki->i", test.basis.conj().T, sigma.matrix, test.basis)), 0, None)
        ind = test.indicator()
        a = float(np.real(kron_all([q[:, None]] * l).ravel()) @ ind)
        b = float(np.real(kron_all([s[:, None]] * l).ravel()) @ ind)
        del idx
    else:
        proj = test.elements[0] if isinstance(test, Pvm) else check_hermitian(test)
        rl = kron_all([rho] * l)
        sl = kron_all([sigma] * l)
        a = float(np.real(np.trace(rl @ proj)))
        b = float(np.real(np.trace(sl @ proj)))
    a, b = min(max(a, 0.0), 1.0), min(max(b, 0.0), 1.0)
    s_m = kl_divergence([a, 1 - a], [b, 1 - b])
    exponent = math.inf if b <= 0 else -math.log2(b) / l
    lower = -binary_entropy(a) / l + a * min(s_target, exponent)
    out = NagaokaChain(s_m, lower, a, b, l, s_target)
    if s_m / l < lower - 1e-9:
        raise ContractViolation("nagaoka_chain_bound", f"S_M/l = {s_m / l:.6g} < {lower:.6g}")
    return out


# --------------------------------------------------------- rank-one refinement


def regroup_cq(op: np.ndarray, n_classical: int, d: int, l: int) -> np.ndarray:
    """Reorder (C^A (x) H)^{(x) l} to C^{A^l} (x) H^{(x) l}."""
    shape = [n_classical, d] * l
    t = np.asarray(op).reshape(shape + shape)
    perm = list(range(0, 2 * l, 2)) + list(range(1, 2 * l, 2))
    perm = perm + [p + 2 * l for p in perm]
    dim = (n_classical * d) ** l
    return t.transpose(perm).reshape(dim, dim)


@dataclass
class RankOneRefinement:
    """Rank-one PVM {|x><x| (x) |e_{x,j}><e_{x,j}|}; ``bases[x]`` has columns e_{x,j}.

    ``accepted[x, j]`` marks the vectors spanning the first outcome of the
    coarse PVM.
    """

    bases: np.ndarray
    accepted: np.ndarray

    @property
    def n_words(self) -> int:
        return self.bases.shape[0]

    @property
    def block_dim(self) -> int:
        return self.bases.shape[1]

    def __len__(self):
        return self.n_words * self.block_dim

    def elements(self) -> np.ndarray:
        n, D = self.n_words, self.block_dim
        out = np.zeros((n * D, n * D, n * D), dtype=complex)
        for x in range(n):
            for j in range(D):
                v = self.bases[x][:, j]
                out[x * D + j, x * D : (x + 1) * D, x * D : (x + 1) * D] = np.outer(v, v.conj())
        return out

    def pvm(self) -> Pvm:
        return Pvm(self.elements())

    def coarse_grain(self) -> np.ndarray:
        """Recombine the accepted rank-one elements into the first-outcome projector."""
        n, D = self.n_words, self.block_dim
        out = np.zeros((n * D, n * D), dtype=complex)
        for x in range(n):
            u = self.bases[x][:, self.accepted[x]]
            out[x * D : (x + 1) * D, x * D : (x + 1) * D] = u @ u.conj().T
        return out


def refine_to_rank_one(projector, n_words: int, block_dim: int, preferred_basis=None) -> RankOneRefinement:
    """Split a block-diagonal projector sum_x |x><x| (x) r_x into rank-one pieces.

    With ``preferred_basis`` (a unitary diagonalizing every block r_x) that
    basis and its labeling are used for every word; otherwise each block is
    diagonalized separately, range of r_x first.
    """
    p = check_hermitian(projector, tol=1e-9)
    D = block_dim
    if p.shape[0] != n_words * D:
        raise DimensionMismatchError("projector size does not match words x block dimension")
    mask = np.kron(np.eye(n_words), np.ones((D, D)))
    if np.max(np.abs(p * (1 - mask))) > 1e-10:
        raise InvalidStateError("projector is not block-diagonal over the classical register")
    bases = np.zeros((n_words, D, D), dtype=complex)
    accepted = np.zeros((n_words, D), dtype=bool)
    for x in range(n_words):
        block = p[x * D : (x + 1) * D, x * D : (x + 1) * D]
        if preferred_basis is not None:
            u = np.asarray(preferred_basis, dtype=complex)
            diag = u.conj().T @ block @ u
            if np.max(np.abs(diag - np.diag(np.diag(diag)))) > 1e-9:
                raise InvalidStateError("preferred basis does not diagonalize a block")
            bases[x] = u
            accepted[x] = np.real(np.diag(diag)) > 0.5
        else:
            vals, vecs = np.linalg.eigh(block)
            order = np.argsort(-vals, kind="stable")
            bases[x] = vecs[:, order]
            accepted[x] = vals[order] > 0.5
    return RankOneRefinement(bases, accepted)


def induced_classical_channel(w: CqChannel, refinement: RankOneRefinement, l: int, floor: float | None = None) -> np.ndarray:
    """V(j | x^l) = <e_{x^l,j}| D_{x^l} |e_{x^l,j}> as an (|A|^l, d^l) matrix."""
    n_a, d = w.n_inputs, w.dim
    if refinement.n_words != n_a**l or refinement.block_dim != d**l:
        raise DimensionMismatchError("refinement does not match the channel's l-letter structure")
    mats = w.matrices
    v = np.zeros((n_a**l, d**l))
    for x in range(n_a**l):
        dx = product_output(mats, _digits(x, n_a, l))
        u = refinement.bases[x]
        v[x] = np.real(np.einsum("ij,jk,ki->i", u.conj().T, dx, u))
    if np.max(np.abs(v.sum(axis=1) - 1)) > 1e-10:
        raise ContractViolation("induced_classical_channel", "rows do not sum to one")
    if floor is not None and v.min() < floor - 1e-12:
        raise ContractViolation("induced_classical_channel", f"entry {v.min():.3e} below floor {floor:.3e}")
    return np.clip(v, 0.0, None)


# --------------------------------------------------------- information density


def _as_family(family) -> list:
    if isinstance(family, np.ndarray) and family.ndim == 2:
        return [family]
    return [np.asarray(v, dtype=float) for v in family]


@dataclass
class DensityTables:
    """Exact joint laws and information densities on X^a x J^a (flattened, x-major)."""

    a: int
    r_a: np.ndarray          # r^{(x) a}(x^a)
    v_members: np.ndarray    # V_t^a(j^a|x^a), shape (T, |X|^a, |J|^a)
    q_members: np.ndarray    # q_t^{(x) a}(j^a), shape (T, |J|^a)

    @property
    def v_avg(self):
        return self.v_members.mean(axis=0)

    @property
    def q_avg(self):
        return self.q_members.mean(axis=0)

    @property
    def joint_avg(self):
        return self.r_a[:, None] * self.v_avg

    def joint_member(self, t):
        return self.r_a[:, None] * self.v_members[t]

    @property
    def density_avg(self):
        return _log_ratio(self.v_avg, self.q_avg[None, :]) / self.a

    def density_member(self, t):
        return _log_ratio(self.v_members[t], self.q_members[t][None, :]) / self.a


def _log_ratio(num, den):
    num = np.broadcast_to(num, np.broadcast_shapes(np.shape(num), np.shape(den)))
    den = np.broadcast_to(den, num.shape)
    out = np.full(num.shape, -math.inf)
    pos = num > 0
    with np.errstate(divide="ignore"):
        out[pos] = np.log2(num[pos]) - np.log2(den[pos])
    return out


def density_tables(family, p, a: int) -> DensityTables:
    family = _as_family(family)
    p = check_probability(p)
    nx, nj = family[0].shape
    if p.size != nx or any(v.shape != (nx, nj) for v in family):
        raise DimensionMismatchError("family members and input distribution disagree")
    if (nx * nj) ** a > TOL.max_enumeration:
        raise BudgetExceededError(f"|X|^a |J|^a = {(nx * nj) ** a} exceeds the enumeration budget")
    r_a = kron_all([p[:, None]] * a).ravel()
    v_members = np.stack([kron_all([v] * a) for v in family])
    q_members = np.stack([kron_all([(p @ v)[:, None]] * a).ravel() for v in family])
    return DensityTables(a, np.real(r_a), np.real(v_members), np.real(q_members))


def information_density(p, family, a: int, pair, member: int | None = None) -> float:
    """i^a(x^a, j^a) for the uniform average of ``family`` (or i_t^a for one member).

    ``pair`` is ``(x_indices, j_indices)``, each a length-``a`` sequence.
    """
    family = _as_family(family)
    p = check_probability(p)
    xs, js = pair
    if len(xs) != a or len(js) != a:
        raise InvalidStateError("pair components must have length a")
    members = family if member is None else [family[member]]
    qs = [p @ v for v in members]
    num = np.mean([np.prod([v[x, j] for x, j in zip(xs, js)]) for v in members])
    den = np.mean([np.prod([q[j] for j in js]) for q in qs])
    if num <= 0:
        return -math.inf
    if den <= 0:
        return math.inf
    return (math.log2(num) - math.log2(den)) / a


def bbt_inequality_check(family, p, a: int, alpha, beta, tables: DensityTables | None = None):
    """P(i^a <= alpha) <= mean_t P_t(i_t^a <= alpha + beta) + |T| 2^{-a beta}.

    ``alpha`` and ``beta`` may be arrays (broadcast together); returns
    ``(lhs, rhs)`` with matching shapes.
    """
    tab = density_tables(family, p, a) if tables is None else tables
    n_t = tab.v_members.shape[0]
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    alpha, beta = np.broadcast_arrays(alpha, beta)

    def cdf(values, weights, thresholds):
        order = np.argsort(values, kind="stable")
        v, cw = values[order], np.cumsum(weights[order])
        idx = np.searchsorted(v, thresholds, side="right")
        return np.where(idx > 0, cw[np.maximum(idx - 1, 0)], 0.0)

    lhs = cdf(tab.density_avg.ravel(), tab.joint_avg.ravel(), alpha)
    rhs = np.zeros_like(alpha)
    for t in range(n_t):
        rhs += cdf(tab.density_member(t).ravel(), tab.joint_member(t).ravel(), alpha + beta)
    rhs = rhs / n_t + n_t * np.exp2(-a * beta)
    if np.any(lhs > rhs + 1e-12):
        raise ContractViolation("bbt_inequality_check", "BBT inequality violated")
    if lhs.ndim == 0:
        return float(lhs), float(rhs)
    return lhs, rhs


# ------------------------------------------------------------------- Hoeffding


@dataclass
class HoeffdingResult:
    tail: float
    bound: float
    exact: bool
    ci: tuple | None = None


def hoeffding_bound(bounds, tau: float) -> float:
    bounds = np.asarray(bounds, dtype=float)
    a = len(bounds)
    widths = bounds[:, 1] - bounds[:, 0]
    if np.any(widths <= 0):
        raise InvalidStateError("each range must satisfy o_i > u_i")
    return math.exp(-2 * a * a * tau * tau / float(np.sum(widths**2)))


def hoeffding_tail_check(bounds, tau: float, law=None, samples=None, lower: bool = False) -> HoeffdingResult:
    """P(sum_i (X_i - E X_i) >= a tau) against exp(-2 a^2 tau^2 / sum (o_i - u_i)^2).

    ``law`` is a list of ``(values, probs)`` per variable, enumerated exactly;
    otherwise ``samples`` is an (N, a) array and the tail is estimated with a
    Wilson interval whose upper end is compared with the bound.
    """
    bound = hoeffding_bound(bounds, tau)
    a = len(bounds)
    sign = -1.0 if lower else 1.0
    if law is not None:
        if len(law) != a:
            raise DimensionMismatchError("one law per variable is required")
        size = math.prod(len(v) for v, _ in law)
        if size > TOL.max_enumeration:
            raise BudgetExceededError("law too large to enumerate")
        dist = {0.0: 1.0}
        for values, probs in law:
            values = np.asarray(values, dtype=float)
            probs = check_probability(probs)
            centered = sign * (values - values @ probs)
            nxt = {}
            for s, ps in dist.items():
                for v, pv in zip(centered, probs):
                    key = round(s + v, 12)
                    nxt[key] = nxt.get(key, 0.0) + ps * pv
            dist = nxt
        tail = sum(pv for s, pv in dist.items() if s >= a * tau - 1e-12)
        result = HoeffdingResult(tail, bound, True)
        worst = tail
    else:
        samples = np.asarray(samples, dtype=float)
        centered = sign * (samples - samples.mean(axis=0))
        hits = int(np.sum(centered.sum(axis=1) >= a * tau))
        ci = binomtest(hits, len(samples)).proportion_ci(method="wilson")
        result = HoeffdingResult(hits / len(samples), bound, False, (ci.low, ci.high))
        worst = ci.low
    if worst > bound + 1e-12:
        raise ContractViolation("hoeffding_tail_check", f"tail {worst:.6g} exceeds bound {bound:.6g}")
    return result


# ------------------------------------------------------- threshold test sets


@dataclass
class ThresholdTestSet:
    """X_{a,theta} = {(x^a, j^a) : i^a > I_n - 2 l theta} with its exact masses."""

    a: int
    l: int
    theta: float
    info: float                 # I_n = min_t I(p^{(x) l}, V_t)
    threshold: float
    member: np.ndarray          # boolean table over (x^a, j^a), x-major
    mass_true: float
    mass_ref: float
    true_bound: float
    ref_bound: float
    hoeffding_term: float
    bbt_term: float
    per_member_info: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def predicate(self, x_index: int, j_index: int) -> bool:
        return bool(self.member[x_index, j_index])

    def check(self, slack: float = 1e-12):
        if self.mass_true < self.true_bound - slack:
            raise ContractViolation("threshold_test_projection", "true mass below the BBT+Hoeffding bound")
        if self.mass_ref > self.ref_bound + slack:
            raise ContractViolation("threshold_test_projection", "reference mass above 2^{-a(I_n - 2 l theta)}")


def threshold_test_set(family, r, l: int, a: int, theta: float, log_range: float | None = None, check: bool = True):
    """Threshold set for block channels V_t : X -> J with block input law ``r``.

    ``log_range`` bounds |log V_t(j|x)/q_t(j)| per block (used for the
    Hoeffding term); by default it is read off the family.
    """
    family = _as_family(family)
    r = check_probability(r)
    if theta <= 0:
        raise InvalidStateError("theta must be positive")
    tab = density_tables(family, r, a)
    infos = np.array([classical_mutual_information(r, v) for v in family])
    info = float(infos.min())
    thr = info - 2 * l * theta
    dens = tab.density_avg
    member = dens > thr
    mass_true = float(np.sum(tab.joint_avg[member]))
    mass_ref = float(np.sum((tab.r_a[:, None] * tab.q_avg[None, :])[member]))
    if log_range is None:
        ratios = [
            _log_ratio(v, (r @ v)[None, :])[(r[:, None] * v) > 0] for v in family
        ]
        log_range = float(max(np.max(np.abs(x)) for x in ratios))
    n_t = len(family)
    hoeff = math.exp(-a * (l * theta) ** 2 / (2 * log_range**2)) if log_range > 0 else 0.0
    bbt = n_t * 2.0 ** (-a * l * theta)
    out = ThresholdTestSet(
        a, l, theta, info, thr, member, min(mass_true, 1.0), mass_ref,
        1.0 - hoeff - bbt, _pow2(-a * thr), hoeff, bbt, infos,
    )
    if check:
        out.check()
    return out


def threshold_test_projection(family, p, l: int, a: int, theta: float, refinement: RankOneRefinement | None = None,
                              log_range: float | None = None, check: bool = True):
    """Threshold set for single-letter input law ``p`` (blocks of length ``l``) and,
    when a refinement is given and the space is small enough, the projector
    P_{la,theta} on (C^A)^{(x) la} (x) H^{(x) la} (word-major ordering)."""
    p = check_probability(p)
    r = kron_all([p[:, None]] * l).ravel()
    tset = threshold_test_set(family, np.real(r), l, a, theta, log_range, check)
    if refinement is None:
        return tset, None
    return tset, Pvm.from_projector(block_projector(tset, refinement, a))


def word_projection(tset: ThresholdTestSet, refinement: RankOneRefinement, x_blocks: Sequence[int]) -> np.ndarray:
    """Quantum part of P_{la,theta} for the word made of the given l-blocks."""
    a = tset.a
    nj = refinement.block_dim
    x_index = 0
    for xb in x_blocks:
        x_index = x_index * refinement.n_words + xb
    row = tset.member[x_index]
    u = kron_all([refinement.bases[xb] for xb in x_blocks])
    if u.shape[0] != nj**a:
        raise DimensionMismatchError("word length does not match a")
    return (u * row) @ u.conj().T


def block_projector(tset: ThresholdTestSet, refinement: RankOneRefinement, a: int) -> np.ndarray:
    nx, nj = refinement.n_words, refinement.block_dim
    total = (nx * nj) ** a
    if total > TOL.max_dense_dim:
        raise BudgetExceededError(f"P_(la,theta) has dimension {total}")
    D = nj**a
    out = np.zeros((total, total), dtype=complex)
    for xi in range(nx**a):
        blocks = _digits(xi, nx, a)
        out[xi * D : (xi + 1) * D, xi * D : (xi + 1) * D] = word_projection(tset, refinement, blocks)
    return out
