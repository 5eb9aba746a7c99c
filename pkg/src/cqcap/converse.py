"""Converse-side bounds evaluated on concrete codes.

Every inequality here is checked on the code at hand; the asymptotic
statements they feed into are never asserted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .capacity import averaged_capacity, classical_mutual_information, holevo_information
from .channels import AveragedChannelSpec, CompoundSet, CqChannel
from .coding import Codebook, _word_state, individual_errors
from .errors import BudgetExceededError, ContractViolation, InvalidStateError
from .hypothesis_testing import type_of
from .numerics import TOL
from .quantum_core import DensityOperator, von_neumann_entropy


@dataclass
class ConverseReport:
    bound_bits: float
    code_rate: float
    slack: float
    lhs: float = 0.0
    epsilon: float = 0.0
    per_type_sizes: dict = field(default_factory=dict)
    good_set_mass: float = 1.0
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "bound_bits": self.bound_bits,
            "code_rate": self.code_rate,
            "lhs_bits": self.lhs,
            "slack": self.slack,
            "epsilon": self.epsilon,
            "per_type_sizes": {",".join(map(str, k.counts)): v for k, v in self.per_type_sizes.items()},
            "good_set_mass": self.good_set_mass,
            **self.details,
        }


def _check_distinct(code: Codebook, allow_duplicates: bool):
    if not allow_duplicates and len(set(code.codewords)) != code.size:
        raise InvalidStateError("codewords must be distinct")


def induced_code_channel(code: Codebook, w: CqChannel) -> np.ndarray:
    """K(j|i) = tr(D_{x(i)} b_j), with a final column for the deficit 1 - sum_j b_j."""
    state = _word_state(w)
    k = np.zeros((code.size, code.size + 1))
    for i, word in enumerate(code.codewords):
        d = state(word)
        k[i, :-1] = np.real(np.einsum("ij,mji->m", d, code.decoders))
    k = np.clip(k, 0.0, None)
    k[:, -1] = np.clip(1.0 - k[:, :-1].sum(axis=1), 0.0, None)
    return k / k.sum(axis=1, keepdims=True)


def mean_type(code: Codebook, alphabet) -> np.ndarray:
    return np.mean([type_of(w, alphabet).type for w in code.codewords], axis=0)


def fano_holevo_bound(code: Codebook, w: CqChannel, allow_duplicates: bool = False) -> ConverseReport:
    """(1 - eps) log M <= n chi(p*, W) + 1 with eps the average error and p* the mean codeword type.

    Repeated codewords are rejected unless ``allow_duplicates``; the bound
    still holds for them by data processing, with the words counted with
    multiplicity.
    """
    _check_distinct(code, allow_duplicates)
    errs = individual_errors(code, _word_state(w))
    eps = float(errs.mean())
    p_star = mean_type(code, w.alphabet)
    bound = code.n * holevo_information(p_star, w) + 1
    lhs = (1 - eps) * math.log2(code.size)
    if lhs > bound + 1e-9:
        raise ContractViolation("fano_holevo_bound", f"(1-eps) log M = {lhs:.12g} > {bound:.12g}")
    return ConverseReport(
        bound_bits=bound,
        code_rate=math.log2(code.size) / code.n,
        slack=bound - lhs,
        lhs=lhs,
        epsilon=eps,
        details={"p_star": [float(x) for x in p_star], "channel": w.id},
    )


def holevo_data_processing_check(code: Codebook, w: CqChannel, tol: float = 1e-8):
    """I(uniform, K) <= chi(uniform over codewords, W^n); returns both sides."""
    if w.dim**code.n > TOL.max_dense_dim:
        raise BudgetExceededError("n-letter outputs exceed the dense budget")
    state = _word_state(w)
    outs = [state(x) for x in code.codewords]
    nu = np.full(code.size, 1.0 / code.size)
    avg = sum(outs) / code.size
    chi = von_neumann_entropy(DensityOperator(avg, validate=False)) - float(
        np.mean([von_neumann_entropy(DensityOperator(o, validate=False)) for o in outs])
    )
    info = classical_mutual_information(nu, induced_code_channel(code, w))
    if info > chi + tol:
        raise ContractViolation("holevo_data_processing_check", f"I = {info:.12g} > chi = {chi:.12g}")
    return info, chi


def type_partition(code: Codebook, alphabet=None) -> dict:
    """Sub-codes of codewords sharing one type."""
    if alphabet is None:
        alphabet = sorted({s for w in code.codewords for s in w})
    groups: dict = {}
    for i, word in enumerate(code.codewords):
        groups.setdefault(type_of(word, alphabet), []).append(i)
    return {t: code.subcode(idx) for t, idx in groups.items()}


def strong_converse_rate_bound(n: int, code: Codebook, channels: CompoundSet, k_prime: float) -> ConverseReport:
    """log M <= |A| log(n+1) + max_j n (min_t chi(p_j, W_t) + k_prime / sqrt(n)) over type groups j."""
    if k_prime <= 0:
        raise InvalidStateError("k_prime must be positive")
    if isinstance(channels, CqChannel):
        channels = CompoundSet([channels])
    if code.n != n:
        raise InvalidStateError(f"code has block length {code.n}, not {n}")
    alphabet = channels.alphabet
    groups = type_partition(code, alphabet)
    if len(groups) > (n + 1) ** len(alphabet):
        raise ContractViolation("type_partition", "more types than (n+1)^|A|")
    per_group = {}
    for t, sub in groups.items():
        per_group[t] = n * (min(holevo_information(t.type, w) for w in channels) + k_prime / math.sqrt(n))
    bound = len(alphabet) * math.log2(n + 1) + max(per_group.values())
    lhs = math.log2(code.size)
    if lhs > bound + 1e-9:
        raise ContractViolation("strong_converse_rate_bound", f"log M = {lhs:.12g} > {bound:.12g}")
    return ConverseReport(
        bound_bits=bound,
        code_rate=lhs / n,
        slack=bound - lhs,
        lhs=lhs,
        per_type_sizes={t: sub.size for t, sub in groups.items()},
        details={"k_prime": k_prime, "per_type_bound_bits": {",".join(map(str, t.counts)): v for t, v in per_group.items()}},
    )


def markov_good_set(code: Codebook, spec: AveragedChannelSpec):
    """Members with average error at most sqrt(eps), eps the prior-weighted average error.

    Zero-weight members are classified too; they do not contribute to the mass.
    """
    errs = {w.id: float(individual_errors(code, _word_state(w)).mean()) for w in spec.compound}
    eps = float(sum(wt * errs[cid] for cid, wt in zip(spec.ids, spec.weights)))
    root = math.sqrt(max(eps, 0.0))
    good = [cid for cid in spec.ids if errs[cid] <= root + 1e-15]
    mass = float(sum(spec.weight_of(cid) for cid in good))
    if mass < 1 - root - 1e-12:
        raise ContractViolation("markov_good_set", f"mass {mass:.12g} < 1 - sqrt(eps) = {1 - root:.12g}")
    return good, mass


@dataclass
class WeakConverseReport:
    entries: list
    capacity: float
    all_below_capacity: bool

    def to_dict(self) -> dict:
        return {"capacity": self.capacity, "all_below_capacity": self.all_below_capacity, "entries": self.entries}


def averaged_weak_converse_check(codes, spec: AveragedChannelSpec) -> WeakConverseReport:
    """Per-n inequality rate <= (min_{t in G_n} chi(p*, W_t) + 1/n) / (1 - sqrt(eps_n)).

    Codes with sqrt(eps_n) >= 1/2 are reported but not checked.
    """
    cap = averaged_capacity(spec).value
    entries, below = [], True
    for code in codes:
        good, mass = markov_good_set(code, spec)
        errs = {w.id: float(individual_errors(code, _word_state(w)).mean()) for w in spec.compound}
        eps = float(sum(wt * errs[cid] for cid, wt in zip(spec.ids, spec.weights)))
        root = math.sqrt(eps)
        rate = math.log2(code.size) / code.n
        entry = {"n": code.n, "size": code.size, "rate": rate, "epsilon": eps, "good_ids": good, "good_mass": mass}
        if root < 0.5:
            p_star = mean_type(code, spec.compound.alphabet)
            inf_chi = min(holevo_information(p_star, spec.compound.by_id(cid)) for cid in good)
            rhs = (inf_chi + 1 / code.n) / (1 - root)
            if rate > rhs + 1e-9:
                raise ContractViolation("averaged_weak_converse_check", f"rate {rate:.12g} > {rhs:.12g} at n={code.n}")
            entry.update({"bound": rhs, "checked": True})
        else:
            entry["checked"] = False
        below = below and rate <= cap + 1e-9
        entries.append(entry)
    return WeakConverseReport(entries, cap, below)
