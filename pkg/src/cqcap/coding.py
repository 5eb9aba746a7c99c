"""Random coding with square-root-measurement decoders and the compound pipeline.

One-shot codes live on an abstract letter set K = {0, ..., |K|-1}: a
:class:`LetterChannel` gives the output state of each letter and a
:class:`LetterTest` the per-letter projections P_k of a block-diagonal test
sum_k |k><k| (x) P_k.
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .capacity import CapacityResult, compound_capacity, joint_state
from .channels import (
    AveragedChannelSpec,
    CompoundSet,
    CqChannel,
    build_t_n,
    channel_distance,
    product_output,
)
from .errors import BudgetExceededError, ContractViolation, DimensionMismatchError, InvalidStateError
from .hypothesis_testing import (
    ThresholdTestSet,
    _digits,
    induced_classical_channel,
    refine_to_rank_one,
    regroup_cq,
    threshold_test_set,
    universal_pvm,
    word_projection,
)
from .numerics import TOL
from .quantum_core import check_hermitian, check_probability, generalized_inverse_sqrt, kl_divergence, kron_all


# ------------------------------------------------------------------- codes


@dataclass
class Codebook:
    """Codewords (tuples of symbols) with decoding operators on the d^n output space."""

    n: int
    codewords: list
    decoders: np.ndarray
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.codewords = [tuple(str(s) for s in w) for w in self.codewords]
        self.decoders = np.asarray(self.decoders, dtype=complex)
        if self.decoders.ndim != 3 or len(self.codewords) != self.decoders.shape[0]:
            raise DimensionMismatchError("one decoder per codeword is required")
        if any(len(w) != self.n for w in self.codewords):
            raise DimensionMismatchError("codewords must have length n")
        if self.validate:
            check_decoders(self.decoders)

    @property
    def size(self) -> int:
        return len(self.codewords)

    @property
    def dim(self) -> int:
        return self.decoders.shape[1]

    def subcode(self, indices) -> "Codebook":
        indices = list(indices)
        return Codebook(self.n, [self.codewords[i] for i in indices], self.decoders[indices], validate=False)


def check_decoders(decoders: np.ndarray):
    total = np.zeros(decoders.shape[1:], dtype=complex)
    for b in decoders:
        if np.max(np.abs(b - b.conj().T)) > 1e-10 or np.linalg.eigvalsh((b + b.conj().T) / 2)[0] < -1e-10:
            raise ContractViolation("codebook", "decoder is not PSD")
        total += b
    top = np.linalg.eigvalsh((total + total.conj().T) / 2)[-1] if len(decoders) else 0.0
    if top - 1 > 1e-9:
        raise ContractViolation("codebook", f"decoders sum above identity (max eigenvalue {top:.12g})")


@dataclass
class CodeErrorReport:
    per_channel_max: dict
    per_channel_avg: dict
    sup_max: float
    sup_avg: float
    weighted_avg: float | None = None

    def to_dict(self) -> dict:
        out = {
            "per_channel_max": self.per_channel_max,
            "per_channel_avg": self.per_channel_avg,
            "sup_max": self.sup_max,
            "sup_avg": self.sup_avg,
        }
        if self.weighted_avg is not None:
            out["weighted_avg"] = self.weighted_avg
        return out


def individual_errors(code: Codebook, state: Callable[[tuple], np.ndarray]) -> np.ndarray:
    """1 - tr(D_{x(i)} b_i) for every codeword, clipped to [0, 1]."""
    errs = np.empty(code.size)
    for i, (w, b) in enumerate(zip(code.codewords, code.decoders)):
        d = state(w)
        if d.shape != b.shape:
            raise DimensionMismatchError(f"output dim {d.shape[0]} vs decoder dim {b.shape[0]}")
        errs[i] = 1.0 - float(np.real(np.sum(d * b.T)))
    return np.clip(errs, 0.0, 1.0)


def _word_state(w: CqChannel) -> Callable:
    mats = w.matrices

    def state(word):
        return product_output(mats, w.encode(list(word)))

    return state


def error_report(code: Codebook, channels) -> CodeErrorReport:
    weights = None
    if isinstance(channels, AveragedChannelSpec):
        weights = channels.weights
        channels = channels.compound
    elif isinstance(channels, CqChannel):
        channels = CompoundSet([channels])
    emax, eavg = {}, {}
    for w in channels:
        errs = individual_errors(code, _word_state(w))
        emax[w.id] = float(errs.max())
        eavg[w.id] = float(errs.mean())
    weighted = None if weights is None else float(sum(wt * eavg[w.id] for w, wt in zip(channels, weights)))
    return CodeErrorReport(emax, eavg, max(emax.values()), max(eavg.values()), weighted)


# ------------------------------------------------------- operator inequality


def hn_operator_inequality_residual(a, b, c: float = 1.0) -> float:
    """Minimum eigenvalue of (1+c)(1-a) + (2+c+1/c) b - (1 - (a+b)^{-1/2} a (a+b)^{-1/2}).

    With the default c = 1 this is 2(1-a) + 4b minus the left-hand side.
    """
    a = check_hermitian(a, tol=1e-10)
    b = check_hermitian(b, tol=1e-10)
    if a.shape != b.shape:
        raise DimensionMismatchError("operators differ in dimension")
    va = np.linalg.eigvalsh(a)
    if va[0] < -1e-10 or va[-1] > 1 + 1e-10:
        raise InvalidStateError("a must satisfy 0 <= a <= 1")
    if np.linalg.eigvalsh(b)[0] < -1e-10:
        raise InvalidStateError("b must be PSD")
    if c <= 0:
        raise InvalidStateError("c must be positive")
    eye = np.eye(a.shape[0])
    s = generalized_inverse_sqrt(a + b)
    lhs = eye - s @ a @ s
    rhs = (1 + c) * (eye - a) + (2 + c + 1 / c) * b
    diff = rhs - lhs
    return float(np.linalg.eigvalsh((diff + diff.conj().T) / 2)[0])


def sqrt_measurement_decoders(projections: Sequence) -> np.ndarray:
    """b_i = S^{-1/2} P_i S^{-1/2} with S = sum_j P_j (generalized inverse on supp S)."""
    ps = np.asarray([check_hermitian(p, tol=1e-10) for p in projections])
    if ps.ndim != 3:
        raise DimensionMismatchError("projections must share one dimension")
    s = generalized_inverse_sqrt(ps.sum(axis=0))
    return s @ ps @ s


# ------------------------------------------------------------ one-shot codes


@dataclass
class LetterChannel:
    """Letter set K = range(n_letters) with output states ``state(k)`` of size ``dim``."""

    n_letters: int
    dim: int
    state: Callable[[int], np.ndarray]
    symbols: Callable[[int], tuple] | None = None

    def symbols_of(self, k: int) -> tuple:
        return (str(k),) if self.symbols is None else self.symbols(k)

    @classmethod
    def from_channel(cls, w: CqChannel) -> "LetterChannel":
        mats = w.matrices
        return cls(w.n_inputs, w.dim, lambda k: mats[k], lambda k: (w.alphabet[k],))


@dataclass
class LetterTest:
    n_letters: int
    dim: int
    projection: Callable[[int], np.ndarray]

    @classmethod
    def from_operator(cls, test, n_letters: int, dim: int) -> "LetterTest":
        """Per-letter blocks of the first outcome of a block-diagonal test on C^K (x) H."""
        from .quantum_core import Pvm

        p = test.elements[0] if isinstance(test, Pvm) else np.asarray(test, dtype=complex)
        if p.ndim == 3:
            blocks = p
        else:
            if p.shape != (n_letters * dim, n_letters * dim):
                raise DimensionMismatchError("test does not match K x H")
            mask = np.kron(np.eye(n_letters), np.ones((dim, dim)))
            if np.max(np.abs(p * (1 - mask))) > 1e-10:
                raise InvalidStateError("test is not block-diagonal over the letters")
            blocks = np.stack([p[k * dim : (k + 1) * dim, k * dim : (k + 1) * dim] for k in range(n_letters)])
        if blocks.shape != (n_letters, dim, dim):
            raise DimensionMismatchError("one projection per letter is required")
        return cls(n_letters, dim, lambda k: blocks[k])


def _as_letter_channel(w) -> LetterChannel:
    return LetterChannel.from_channel(w) if isinstance(w, CqChannel) else w


def _as_letter_test(test, w: LetterChannel) -> LetterTest:
    if isinstance(test, LetterTest):
        return test
    if callable(test):
        return LetterTest(w.n_letters, w.dim, test)
    return LetterTest.from_operator(test, w.n_letters, w.dim)


@dataclass(frozen=True)
class OneShotParams:
    mu: float
    gamma: float
    lambda_first_kind: float
    trials: int = 32
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.gamma < self.mu:
            raise InvalidStateError(f"need 0 < gamma < mu, got gamma={self.gamma}, mu={self.mu}")
        if self.trials < 1:
            raise InvalidStateError("trials must be at least 1")

    @property
    def size(self) -> int:
        m = 2.0 ** (self.mu - self.gamma)
        if math.isinf(m):
            raise BudgetExceededError("code size 2^(mu - gamma) overflows")
        return int(math.floor(m))

    @property
    def bound(self) -> float:
        return 2 * self.lambda_first_kind + 4 * 2.0 ** (-self.gamma)


def test_masses(w: LetterChannel, w_dist, test: LetterTest):
    """(tr rho P, tr (w x sigma) P) for rho = sum_k w(k)|k><k| (x) D_k."""
    w_dist = check_probability(w_dist)
    sigma = sum(wk * w.state(k) for k, wk in enumerate(w_dist) if wk > 0)
    true = ref = 0.0
    for k, wk in enumerate(w_dist):
        if wk > 0:
            p = test.projection(k)
            true += wk * float(np.real(np.sum(w.state(k) * p.T)))
            ref += wk * float(np.real(np.sum(sigma * p.T)))
    return true, ref


def _check_preconditions(params: OneShotParams, masses):
    true, ref = masses
    if true < 1 - params.lambda_first_kind - 1e-10:
        raise ContractViolation("one_shot_code", f"tr(rho P) = {true:.12g} < 1 - lambda")
    if ref > 2.0 ** (-params.mu) * (1 + 1e-9) + 1e-300:
        raise ContractViolation("one_shot_code", f"tr((w x sigma) P) = {ref:.12g} > 2^-mu")


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream for one trial, independent of scheduling."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(trial)])))


def _code_error(w: LetterChannel, test: LetterTest, letters) -> tuple[np.ndarray, np.ndarray]:
    decoders = sqrt_measurement_decoders([test.projection(k) for k in letters])
    errs = np.array([1 - float(np.real(np.sum(w.state(k) * b.T))) for k, b in zip(letters, decoders)])
    return decoders, np.clip(errs, 0.0, 1.0)


@dataclass
class OneShotResult:
    code: Codebook
    letters: list
    avg_error: float
    bound: float
    middle_bound: float
    size: int
    trial_errors: list
    best_trial: int
    mass_true: float
    mass_ref: float


def one_shot_code(w, w_dist, test, params: OneShotParams, masses=None, threads: int = 1) -> OneShotResult:
    """Best of ``params.trials`` random codes of size floor(2^(mu - gamma)) drawn from ``w_dist``."""
    w = _as_letter_channel(w)
    test = _as_letter_test(test, w)
    w_dist = check_probability(w_dist)
    if w_dist.size != w.n_letters:
        raise DimensionMismatchError("w_dist must have one entry per letter")
    masses = test_masses(w, w_dist, test) if masses is None else masses
    _check_preconditions(params, masses)
    m = params.size
    if m < 1:
        raise InvalidStateError("floor(2^(mu - gamma)) = 0")

    def run(trial):
        rng = trial_rng(params.seed, trial)
        letters = [int(k) for k in rng.choice(w.n_letters, size=m, p=w_dist)]
        decoders, errs = _code_error(w, test, letters)
        return letters, decoders, float(errs.mean())

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(run, range(params.trials)))
    else:
        results = [run(t) for t in range(params.trials)]
    errors = [r[2] for r in results]
    best = int(np.argmin(errors))  # first minimum: ties go to the lowest trial index
    letters, decoders, err = results[best]
    middle = 2 * (1 - masses[0]) + 4 * m * masses[1]
    if err > params.bound + 1e-9:
        raise ContractViolation(
            "one_shot_code", f"best average error {err:.12g} exceeds 2 lambda + 4 * 2^-gamma = {params.bound:.12g}"
        )
    words = [w.symbols_of(k) for k in letters]
    code = Codebook(len(words[0]), words, decoders)
    return OneShotResult(code, letters, err, params.bound, middle, m, errors, best, masses[0], masses[1])


@dataclass
class ExpectedError:
    value: float
    exact: bool
    bound: float
    middle_bound: float
    ci: tuple | None = None


def random_code_expected_error(w, w_dist, test, params: OneShotParams, exact: bool | None = None,
                               samples: int = 2000, masses=None) -> ExpectedError:
    """E over i.i.d. codebooks of the average error of the square-root decoder.

    Exact enumeration runs over multisets of codewords (the average error is
    symmetric in the codeword order) whenever |K|^M fits the budget.
    """
    w = _as_letter_channel(w)
    test = _as_letter_test(test, w)
    w_dist = check_probability(w_dist)
    masses = test_masses(w, w_dist, test) if masses is None else masses
    _check_preconditions(params, masses)
    m = params.size
    if m < 1:
        raise InvalidStateError("floor(2^(mu - gamma)) = 0")
    middle = 2 * (1 - masses[0]) + 4 * m * masses[1]
    enumerable = m * math.log(max(w.n_letters, 1)) <= math.log(TOL.max_enumeration)
    if exact is None:
        exact = enumerable
    if exact and not enumerable:
        raise BudgetExceededError(f"|K|^M = {w.n_letters}^{m} exceeds the enumeration budget")
    support = [k for k in range(w.n_letters) if w_dist[k] > 0]
    if exact:
        value = 0.0
        log_mfact = math.lgamma(m + 1)
        for combo in itertools.combinations_with_replacement(support, m):
            counts = np.bincount(combo, minlength=w.n_letters)
            logp = log_mfact + sum(c * math.log(w_dist[k]) - math.lgamma(c + 1) for k, c in enumerate(counts) if c)
            value += math.exp(logp) * float(_code_error(w, test, combo)[1].mean())
        out = ExpectedError(value, True, params.bound, middle)
        lowest = value
    else:
        rng = trial_rng(params.seed, 2**32 - 1)
        vals = np.array([
            _code_error(w, test, [int(k) for k in rng.choice(w.n_letters, size=m, p=w_dist)])[1].mean()
            for _ in range(samples)
        ])
        half = 1.96 * vals.std(ddof=1) / math.sqrt(samples) if samples > 1 else math.inf
        value = float(vals.mean())
        out = ExpectedError(value, False, params.bound, middle, (value - half, value + half))
        lowest = value - half
    if lowest > middle + 1e-9:
        raise ContractViolation("random_code_expected_error", f"E[error] = {value:.12g} > {middle:.12g}")
    return out


def expurgate_to_max_error(code: Codebook, channel) -> Codebook:
    """Keep the ceil(M/2) codewords with the smallest individual error (ties by index)."""
    if code.size == 0:
        raise InvalidStateError("cannot expurgate an empty code")
    state = _word_state(channel) if isinstance(channel, CqChannel) else channel
    errs = individual_errors(code, state)
    keep = sorted(sorted(range(code.size), key=lambda i: (errs[i], i))[: math.ceil(code.size / 2)])
    out = code.subcode(keep)
    if errs[keep].max() > 2 * errs.mean() + 1e-12:
        raise ContractViolation("expurgate_to_max_error", "max error after expurgation exceeds twice the average")
    return out


# --------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class BlockSchedule:
    n: int
    l: int
    a: int
    b: int
    theta: float

    @classmethod
    def for_length(cls, n: int, theta: float) -> "BlockSchedule":
        if n < 4:
            raise InvalidStateError("block length must be at least 4")
        if theta <= 0:
            raise InvalidStateError("theta must be positive")
        l = math.isqrt(n)
        return cls(n, l, n // l, n % l, theta)


@dataclass
class PipelineResult:
    code: Codebook
    report: CodeErrorReport
    rate: float
    report_net: CodeErrorReport | None
    schedule: BlockSchedule
    capacity: CapacityResult
    support: tuple
    input: np.ndarray
    stages: dict

    def __iter__(self):
        return iter((self.code, self.report, self.rate))

    def to_dict(self) -> dict:
        return {
            "n": self.schedule.n,
            "theta": self.schedule.theta,
            "rate": self.rate,
            "size": self.code.size,
            "codewords": ["".join(w) if all(len(s) == 1 for s in w) else list(w) for w in self.code.codewords],
            "sup_max_error": self.report.sup_max,
            "sup_avg_error": self.report.sup_avg,
            "errors": self.report.to_dict(),
            "errors_net": None if self.report_net is None else self.report_net.to_dict(),
            "capacity": self.capacity.to_dict(),
            "support": list(self.support),
            "input": [float(x) for x in self.input],
            "schedule": {"l": self.schedule.l, "a": self.schedule.a, "b": self.schedule.b},
            "stages": self.stages,
        }


def _restrict(w: CqChannel, keep: list) -> CqChannel:
    return CqChannel([w.states[i] for i in keep], [w.alphabet[i] for i in keep], w.id)


def _trivial_code(n: int, symbol: str, dim: int) -> Codebook:
    if dim**n > TOL.max_dense_dim:
        raise BudgetExceededError(f"d**n = {dim**n} exceeds the dense budget")
    return Codebook(n, [(symbol,) * n], np.eye(dim**n)[None])


def compound_direct_pipeline(channels: CompoundSet, n: int, theta: float, seed: int = 0, trials: int = 32,
                             threads: int = 1, capacity_tol: float = 1e-8) -> PipelineResult:
    """Direct-part construction at block length ``n``: net, universal test,
    information-density threshold, one-shot random code and expurgation.

    Unpacks as ``(code, report, rate)``; ``stages`` holds every intermediate.
    """
    if isinstance(channels, CqChannel):
        channels = CompoundSet([channels])
    sched = BlockSchedule.for_length(n, theta)
    d = channels.dim
    if d**n > TOL.max_dense_dim:
        raise BudgetExceededError(f"d**n = {d**n} exceeds the dense budget")
    stages: dict = {}
    cap = compound_capacity(channels, tol=capacity_tol)
    p_star = cap.argmax_input
    stages["capacity"] = cap.to_dict()
    best_symbol = channels.alphabet[int(np.argmax(p_star))]
    keep = [i for i, px in enumerate(p_star) if px > 1e-9]
    support = tuple(channels.alphabet[i] for i in keep)

    def finish(code, net_report, note):
        stages["outcome"] = note
        report = error_report(code, channels)
        rate = math.log2(code.size) / n
        return PipelineResult(code, report, rate, net_report, sched, cap, support, p_star, stages)

    if cap.value <= max(1e-9, cap.certified_gap):
        return finish(_trivial_code(n, best_symbol, d), None, "capacity is zero: single-codeword code")

    p = p_star[keep] / p_star[keep].sum()
    restricted = CompoundSet([_restrict(w, keep) for w in channels])
    n_a = len(keep)
    l, a, b = sched.l, sched.a, sched.b

    # finite net of mixed representatives
    net = build_t_n(restricted, n)
    t_n = net.representatives
    stages["net"] = {
        "kappa": net.kappa,
        "size": len(t_n),
        "c_net": net.c_net,
        "assignment": dict(net.assignment),
    }

    # universal test against each reference p (x) sigma'_s, in a block eigenbasis
    joints = [joint_state(p, w) for w in t_n]
    candidates = []
    for s, js in zip(t_n, joints):
        vals, f = np.linalg.eigh(js.marginal.matrix)
        basis = np.kron(np.eye(n_a), f)
        upvm = universal_pvm([j.joint for j in joints], js.product, l, basis=basis)
        proj = regroup_cq(upvm.projector(), n_a, d, l)
        refinement = refine_to_rank_one(proj, n_a**l, d**l, preferred_basis=kron_all([f] * l))
        r = np.real(kron_all([p[:, None]] * l).ravel())
        vs = [induced_classical_channel(w, refinement, l, floor=(n * n * d) ** (-l) * (1 - 1e-9)) for w in t_n]
        q_s = r @ vs[t_n.ids.index(s.id)]
        # measured divergence of each member against r (x) q_s in this basis
        score = min(kl_divergence((r[:, None] * v).ravel(), (r[:, None] * q_s[None, :]).ravel()) for v in vs)
        candidates.append((score, s.id, upvm, refinement, vs))
    score, s_star, upvm, refinement, vs = min(candidates, key=lambda c: c[0])
    stages["universal_test"] = {
        "reference": s_star,
        "measured_divergence": score,
        "first_kind_masses": [float(x) for x in upvm.omega_masses],
        "second_kind_mass": upvm.sigma_mass,
        "schedule": {"m": upvm.schedule.m, "k": upvm.schedule.k, "delta": upvm.schedule.delta,
                     "tau1": upvm.schedule.tau1, "tau2": upvm.schedule.tau2, "zeta": upvm.schedule.zeta},
    }

    # information-density threshold set on a blocks of length l
    log_range = l * math.log2(n * n * d)
    r = np.real(kron_all([p[:, None]] * l).ravel())
    tset: ThresholdTestSet = threshold_test_set(vs, r, l, a, theta, log_range=log_range)
    stages["threshold"] = {
        "I_n": tset.info,
        "per_member_I": [float(x) for x in tset.per_member_info],
        "threshold": tset.threshold,
        "mass_true": tset.mass_true,
        "mass_ref": tset.mass_ref,
        "true_bound": tset.true_bound,
        "ref_bound": tset.ref_bound,
    }

    lam = max(0.0, 1.0 - tset.mass_true)
    mu = math.inf if tset.mass_ref <= 0 else -math.log2(tset.mass_ref)
    gamma = n * theta
    stages["one_shot"] = {"lambda": lam, "mu": mu, "gamma": gamma}
    if not gamma < mu or math.isinf(mu):
        return finish(_trivial_code(n, best_symbol, d), None, "gamma >= mu: single-codeword code")

    # letters are n-words over the restricted alphabet; outputs averaged over T_n
    n_letters = n_a**n
    if n_letters > TOL.max_enumeration:
        raise BudgetExceededError("too many input words")
    stacks = [w.matrices for w in t_n]
    w_dist = np.real(kron_all([p[:, None]] * n).ravel())
    eye_b = np.eye(d**b)

    def state(k):
        digits = _digits(k, n_a, n)
        return sum(product_output(m, digits) for m in stacks) / len(stacks)

    def projection(k):
        digits = _digits(k, n_a, n)
        blocks = [_word_index(digits[i * l : (i + 1) * l], range(n_a)) for i in range(a)]
        return np.kron(word_projection(tset, refinement, blocks), eye_b)

    def symbols(k):
        return tuple(support[i] for i in _digits(k, n_a, n))

    letter_channel = LetterChannel(n_letters, d**n, state, symbols)
    letter_test = LetterTest(n_letters, d**n, projection)
    params = OneShotParams(mu, gamma, lam, trials, seed)
    if params.size > n_letters:
        params_size = n_letters
        mu_eff = gamma + math.log2(params_size)
        params = OneShotParams(mu_eff, gamma, lam, trials, seed)
        stages["one_shot"]["size_capped_at"] = params_size
    stages["one_shot"]["size"] = params.size
    res = one_shot_code(letter_channel, w_dist, letter_test, params,
                        masses=(tset.mass_true, tset.mass_ref), threads=threads)
    stages["one_shot"].update({
        "avg_error": res.avg_error, "bound": res.bound, "middle_bound": res.middle_bound,
        "best_trial": res.best_trial, "trial_errors": res.trial_errors,
    })

    code = expurgate_to_max_error(res.code, lambda word: state(_word_index(word, support)))
    net_report = error_report(code, t_n)
    avg_max = float(individual_errors(code, lambda word: state(_word_index(word, support))).max())
    if net_report.sup_avg > len(t_n) * res.avg_error + 1e-12:
        raise ContractViolation("compound_direct_pipeline", "affine error transfer violated")
    stages["expurgation"] = {"size": code.size, "max_error_average_channel": avg_max}

    # substitution transfer to the original channels: error moves by at most half the n-letter trace distance
    report = error_report(code, channels)
    worst = 0.0
    for w in restricted:
        rep = t_n.by_id(net.assignment[w.id])
        worst = max(worst, report.per_channel_max[w.id] - net_report.per_channel_max[rep.id]
                    - 0.5 * n * channel_distance(w, rep))
    if worst > 1e-9:
        raise ContractViolation("compound_direct_pipeline", "channel-substitution error transfer violated")
    stages["outcome"] = "random code"
    return PipelineResult(code, report, math.log2(code.size) / n, net_report, sched, cap, support, p_star, stages)


def _word_index(word, support) -> int:
    idx = {s: i for i, s in enumerate(support)}
    k = 0
    for s in word:
        k = k * len(support) + idx[s]
    return k
