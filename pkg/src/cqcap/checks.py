"""Randomized inequality suites.

Each suite draws its instances from ``numpy`` generators seeded by
``(seed, trial)`` and returns a :class:`SuiteResult` counting violations.
Suites never raise on a violated inequality; they report it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import donald_decomposition, omega_inf_check
from .channels import CompoundSet, product_output
from .coding import LetterChannel, LetterTest, OneShotParams, compound_direct_pipeline, one_shot_code, test_masses
from .converse import fano_holevo_bound
from .errors import ContractViolation
from .hypothesis_testing import bbt_inequality_check, density_tables, enumerate_types, universal_test_set
from .quantum_core import (
    Pvm,
    kron_all,
    measured_relative_entropy,
    quantum_relative_entropy,
    trace_distance,
    von_neumann_entropy,
)
from .sampling import (
    random_channel,
    random_compound,
    random_contraction,
    random_density,
    random_probability,
    random_psd,
    random_unitary,
)

SUITES = ("donald", "hn", "fannes", "povm", "types", "bbt", "fano")


@dataclass
class SuiteResult:
    name: str
    trials: int
    violations: int
    worst: float
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def to_dict(self) -> dict:
        return {"suite": self.name, "trials": self.trials, "violations": self.violations,
                "worst": self.worst, "passed": self.passed, **self.details}


def rng_for(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([int(seed), int(trial)])


# ----------------------------------------------------------------- instances


def random_state_pair(rng, d: int):
    rank = None if rng.random() < 0.7 else int(rng.integers(1, d + 1))
    return random_density(d, rng, rank), random_density(d, rng)


def one_shot_instance(rng, max_letters: int = 4, max_size: int = 6):
    """Random single-letter channel, support-type test and admissible (mu, gamma).

    Returns (LetterChannel, w_dist, LetterTest, OneShotParams, masses).
    """
    n_letters = int(rng.integers(2, max_letters + 1))
    d = int(rng.integers(2, 4))
    rank = int(rng.integers(1, d + 1))
    w = random_channel(n_letters, d, rng, rank)
    lc = LetterChannel.from_channel(w)
    # P_k: spectral projection of D_k above a random fraction of its top eigenvalue
    projs = []
    for s in w.states:
        vals, vecs = np.linalg.eigh(s.matrix)
        keep = vecs[:, vals >= rng.uniform(0.05, 0.9) * vals[-1]]
        projs.append(keep @ keep.conj().T)
    test = LetterTest(n_letters, d, lambda k, projs=projs: projs[k])
    w_dist = random_probability(n_letters, rng, floor=0.05)
    masses = test_masses(lc, w_dist, test)
    mu = -math.log2(masses[1])
    size = int(rng.integers(1, max_size + 1))
    gamma = mu - math.log2(size + rng.uniform(0.0, 0.99))
    if gamma <= 0:
        gamma, size = mu / 2, int(2.0 ** (mu / 2))
    params = OneShotParams(mu, gamma, 1.0 - masses[0], trials=32, seed=int(rng.integers(2**31)))
    return lc, w_dist, test, params, masses


# -------------------------------------------------------------------- suites


def donald_suite(trials: int = 500, seed: int = 0) -> SuiteResult:
    worst, bad = 0.0, 0
    for t in range(trials):
        rng = rng_for(seed, t)
        d, a = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        p = random_probability(a, rng)
        w1, w2 = random_channel(a, d, rng), random_channel(a, d, rng)
        try:
            lhs, rhs, gap = donald_decomposition(p, w1, w2)
            worst = max(worst, abs(lhs - rhs - gap))
        except ContractViolation:
            bad += 1
    sets = max(1, trials // 5)
    worst_set = 0.0
    for t in range(sets):
        rng = rng_for(seed, 10**6 + t)
        d, a = int(rng.integers(2, 4)), int(rng.integers(2, 4))
        try:
            lhs, rhs = omega_inf_check(random_probability(a, rng), random_compound(5, a, d, rng))
            worst_set = max(worst_set, abs(lhs - rhs))
        except ContractViolation:
            bad += 1
    return SuiteResult("donald", trials + sets, bad, max(worst, worst_set),
                       {"max_identity_error": worst, "max_inf_equality_error": worst_set})


def hn_suite(trials: int = 1000, seed: int = 0) -> SuiteResult:
    from .coding import hn_operator_inequality_residual

    low, bad = math.inf, 0
    for t in range(trials):
        rng = rng_for(seed, t)
        d = (2, 3, 4)[t % 3]
        a = random_contraction(d, rng)
        b = random_psd(d, rng, scale=float(rng.choice([0.0, 0.01, 1.0, 10.0])))
        r = hn_operator_inequality_residual(a, b)
        low = min(low, r)
        bad += r < -1e-8
    return SuiteResult("hn", trials, int(bad), low, {"min_residual": low})


def povm_suite(trials: int = 500, seed: int = 0) -> SuiteResult:
    """Measured <= quantum relative entropy and monotonicity under coarse-graining."""
    worst_meas = worst_ref = -math.inf
    bad = 0
    for t in range(trials):
        rng = rng_for(seed, t)
        d = int(rng.integers(2, 5))
        rho, sigma = random_state_pair(rng, d)
        if rng.random() < 0.3:
            rho, sigma = sigma, rho  # exercise the infinite case
        fine = Pvm.from_basis(random_unitary(d, rng))
        labels = rng.integers(0, int(rng.integers(1, d + 1)), size=d)
        coarse = Pvm(np.stack([fine.elements[labels == g].sum(axis=0) for g in np.unique(labels)]))
        s = quantum_relative_entropy(rho, sigma)
        sf = measured_relative_entropy(rho, sigma, fine)
        sc = measured_relative_entropy(rho, sigma, coarse)
        if not math.isinf(s):
            if math.isinf(sf):
                bad += 1
            else:
                worst_meas = max(worst_meas, sf - s)
                bad += sf > s + 1e-9
        if not math.isinf(sc):
            if not math.isinf(sf):
                worst_ref = max(worst_ref, sc - sf)
                bad += sc > sf + 1e-9
        elif not math.isinf(sf):
            bad += 1
    return SuiteResult("povm", trials, int(bad), max(worst_meas, worst_ref),
                       {"max_measured_minus_quantum": worst_meas, "max_coarse_minus_fine": worst_ref})


def fannes_suite(trials: int = 500, seed: int = 0) -> SuiteResult:
    """Fannes continuity bound and subadditivity of trace distance under tensor products."""
    worst_f = worst_t = -math.inf
    bad = fannes_count = 0
    for t in range(trials):
        rng = rng_for(seed, t)
        n = int(rng.integers(2, 4))
        dd = 2 if n == 3 else int(rng.integers(2, 4))
        rs = [random_density(dd, rng) for _ in range(n)]
        ss = [random_density(dd, rng) for _ in range(n)]
        lhs = trace_distance(kron_all(rs), kron_all(ss))
        rhs = sum(trace_distance(r, s) for r, s in zip(rs, ss))
        worst_t = max(worst_t, lhs - rhs)
        bad += lhs > rhs + 1e-9

        d = int(rng.integers(2, 5))
        rho = random_density(d, rng, None if rng.random() < 0.7 else 1)
        mix = rng.uniform(0.0, 0.18)
        sigma = (1 - mix) * rho.matrix + mix * random_density(d, rng).matrix
        delta = trace_distance(rho, sigma)
        if delta > 1 / math.e:
            continue  # outside the range where the bound is stated
        fannes_count += 1
        bound = delta * math.log2(d) - (delta * math.log2(delta) if delta > 0 else 0.0)
        gap = abs(von_neumann_entropy(rho) - von_neumann_entropy(sigma)) - bound
        worst_f = max(worst_f, gap)
        bad += gap > 1e-9
    return SuiteResult("fannes", trials, int(bad), max(worst_f, worst_t),
                       {"max_fannes_excess": worst_f, "max_subadditivity_excess": worst_t,
                        "fannes_instances": fannes_count, "subadditivity_instances": trials})


def types_suite(trials: int = 20, seed: int = 0, ks=(6, 8, 10, 12), deltas=(0.1, 0.2, 0.3)) -> SuiteResult:
    """Both universal-test bounds for random omega sets; ``trials`` omega sets per (k, delta)."""
    bad, configs, worst = 0, 0, -math.inf
    for t in range(trials):
        rng = rng_for(seed, t)
        size = int(rng.integers(1, 5))
        omega = [random_probability(2, rng) for _ in range(size)]
        r = random_probability(2, rng, floor=0.05)
        for k in ks:
            for delta in deltas:
                configs += 1
                ts = universal_test_set(omega, r, k, delta, check=False)
                excess = max(float(ts.first_kind_bound - ts.omega_masses.min()), ts.r_mass - ts.second_kind_bound)
                worst = max(worst, excess)
                bad += excess > 1e-12
    for k in ks:
        for nx in (2, 3, 4):
            count = sum(1 for _ in enumerate_types(nx, k))
            bad += count != math.comb(k + nx - 1, nx - 1) or count > (k + 1) ** nx
    return SuiteResult("types", configs, int(bad), worst, {"configurations": configs})


def random_binary_family(rng, members: int = 2):
    fam = []
    for _ in range(members):
        v = rng.uniform(0.02, 0.98, size=(2, 2))
        v[:, 1] = 1 - v[:, 0]
        fam.append(v)
    return fam


def bbt_suite(trials: int = 10, seed: int = 0, a: int = 3, grid: int = 20) -> SuiteResult:
    bad, worst = 0, -math.inf
    for t in range(trials):
        rng = rng_for(seed, t)
        fam = random_binary_family(rng)
        p = random_probability(2, rng, floor=0.05)
        tab = density_tables(fam, p, a)
        dens = tab.density_avg[np.isfinite(tab.density_avg)]
        alphas = np.linspace(dens.min() - 0.5, dens.max() + 0.5, grid)
        betas = np.linspace(0.0, 2.0, grid)
        al, be = np.meshgrid(alphas, betas, indexing="ij")
        try:
            lhs, rhs = bbt_inequality_check(fam, p, a, al, be, tables=tab)
            worst = max(worst, float(np.max(lhs - rhs)))
        except ContractViolation:
            bad += 1
    return SuiteResult("bbt", trials, bad, worst, {"grid_points": trials * grid * grid})


def random_code(rng, n_max: int = 3, pipeline_every: int = 0, trial: int = 0):
    """A code emitted by the coding module together with its channel."""
    if pipeline_every and trial % pipeline_every == 0:
        w = random_channel(2, 2, rng, id="w")
        code = compound_direct_pipeline(CompoundSet([w]), 4, float(rng.uniform(0.01, 0.05)),
                                        seed=int(rng.integers(2**31)), trials=4).code
        return code, w
    d = int(rng.integers(2, 4))
    n_a = int(rng.integers(2, 4))
    n = int(rng.integers(1, n_max + 1))
    while d**n > 27:
        n -= 1
    w = random_channel(n_a, d, rng, rank=int(rng.integers(1, d + 1)), id="w")
    mats = w.matrices
    n_letters = n_a**n

    def digits(k):
        out = []
        for _ in range(n):
            k, r = divmod(k, n_a)
            out.append(r)
        return out[::-1]

    def state(k):
        return product_output(mats, digits(k))

    def projection(k):
        vals, vecs = np.linalg.eigh(state(k))
        keep = vecs[:, vals > 0.3 * vals[-1]]
        return keep @ keep.conj().T

    lc = LetterChannel(n_letters, d**n, state, lambda k: tuple(w.alphabet[i] for i in digits(k)))
    test = LetterTest(n_letters, d**n, projection)
    w_dist = np.full(n_letters, 1.0 / n_letters)
    masses = test_masses(lc, w_dist, test)
    mu = -math.log2(masses[1])
    size = int(rng.integers(1, min(8, n_letters) + 1))
    gamma = max(mu - math.log2(size + 0.5), mu / 4)
    params = OneShotParams(mu, gamma, 1 - masses[0], trials=8, seed=int(rng.integers(2**31)))
    return one_shot_code(lc, w_dist, test, params, masses=masses).code, w


def fano_suite(trials: int = 200, seed: int = 0) -> SuiteResult:
    bad, low = 0, math.inf
    for t in range(trials):
        rng = rng_for(seed, t)
        code, w = random_code(rng, pipeline_every=20, trial=t)
        try:
            rep = fano_holevo_bound(code, w, allow_duplicates=True)
            low = min(low, rep.slack)
        except ContractViolation:
            bad += 1
    return SuiteResult("fano", trials, bad, low, {"min_slack": low})


def run_suite(name: str, trials: int | None = None, seed: int = 0) -> SuiteResult:
    table = {
        "donald": donald_suite,
        "hn": hn_suite,
        "fannes": fannes_suite,
        "povm": povm_suite,
        "types": types_suite,
        "bbt": bbt_suite,
        "fano": fano_suite,
    }
    if name not in table:
        raise KeyError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    fn = table[name]
    return fn(seed=seed) if trials is None else fn(trials=trials, seed=seed)
