"""Holevo information and the max-min capacity of compound channel sets.

The compound capacity is max_p min_t chi(p, W_t), a concave maximization
over the input simplex. :func:`compound_capacity` runs projected
supergradient ascent to get near the optimum and then a cutting-plane phase
whose linear program yields a certified upper bound; the returned
``certified_gap`` is that upper bound minus the best value found.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import block_diag
from scipy.optimize import linprog

from .channels import AveragedChannelSpec, CompoundSet, CqChannel
from .errors import ContractViolation, DimensionMismatchError, InvalidStateError
from .numerics import TOL
from .quantum_core import (
    LOG2E,
    DensityOperator,
    check_probability,
    kl_divergence,
    quantum_relative_entropy,
    von_neumann_entropy,
)


def _check_input(p, w: CqChannel) -> np.ndarray:
    p = check_probability(p)
    if p.size != w.n_inputs:
        raise DimensionMismatchError(
            f"input distribution has {p.size} entries, channel alphabet has {w.n_inputs}"
        )
    return p


def holevo_information(p, w: CqChannel) -> float:
    """chi(p, W) = S(sum_x p(x) D_x) - sum_x p(x) S(D_x), in bits."""
    p = _check_input(p, w)
    sigma = np.einsum("x,xij->ij", p, w.matrices)
    avg = DensityOperator(sigma, validate=False)
    out = von_neumann_entropy(avg) - sum(
        px * von_neumann_entropy(s) for px, s in zip(p, w.states) if px > 0
    )
    return max(0.0, out)


@dataclass
class JointState:
    """Classical-quantum state sum_x p(x)|x><x| (x) D_x and its marginals."""

    input: np.ndarray
    channel: CqChannel
    joint: DensityOperator
    marginal: DensityOperator

    @property
    def product(self) -> DensityOperator:
        """p (x) sigma, the product of the two marginals."""
        return DensityOperator(np.kron(np.diag(self.input), self.marginal.matrix), validate=False)


def joint_state(p, w: CqChannel) -> JointState:
    p = _check_input(p, w)
    mats = w.matrices
    joint = block_diag(*[px * m for px, m in zip(p, mats)])
    sigma = np.einsum("x,xij->ij", p, mats)
    return JointState(p, w, DensityOperator(joint), DensityOperator(sigma))


def holevo_supergradient(p, w: CqChannel) -> np.ndarray:
    """Gradient of chi(., W) in the ambient coordinates: S(D_x||sigma_p) - log2 e.

    Components for letters outside the support of ``p`` are one-sided
    derivatives and may be ``inf``.
    """
    p = _check_input(p, w)
    sigma = DensityOperator(np.einsum("x,xij->ij", p, w.matrices), validate=False)
    return np.array([quantum_relative_entropy(s, sigma) for s in w.states]) - LOG2E


class _HolevoBatch:
    """Vectorized chi_t(p) and gradients for a stack of channels (T, A, d, d)."""

    def __init__(self, members: list[CqChannel]):
        self.mats = np.stack([m.matrices for m in members])
        self.out_entropy = np.array(
            [[von_neumann_entropy(s) for s in m.states] for m in members]
        )

    def sigmas(self, p):
        return np.einsum("x,txij->tij", p, self.mats)

    def values(self, p) -> np.ndarray:
        vals = np.linalg.eigvalsh(self.sigmas(p))
        vals = np.where(vals > TOL.eig_cutoff, vals, 1.0)
        s = -np.sum(vals * np.log2(vals), axis=-1)
        return np.maximum(s - self.out_entropy @ p, 0.0)

    def values_and_grads(self, p):
        vals, vecs = np.linalg.eigh(self.sigmas(p))
        on = vals > TOL.eig_cutoff
        logs = np.where(on, np.log2(np.where(on, vals, 1.0)), 0.0)
        s = -np.sum(np.where(on, vals, 0.0) * logs, axis=-1)
        chi = np.maximum(s - self.out_entropy @ p, 0.0)
        # tr(D_x log sigma_t) in sigma_t's eigenbasis
        diag = np.real(np.einsum("tki,txkl,tli->txi", vecs.conj(), self.mats, vecs))
        cross = np.einsum("txi,ti->tx", diag, logs)
        grads = -self.out_entropy - cross - LOG2E
        return chi, grads


def _project_simplex(v: np.ndarray) -> np.ndarray:
    n = v.size
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.nonzero(u - css / np.arange(1, n + 1) > 0)[0][-1]
    return np.maximum(v - css[k] / (k + 1), 0.0)


@dataclass
class CapacityResult:
    value: float
    argmax_input: np.ndarray
    active_channel_ids: list
    iterations: int
    certified_gap: float
    upper_bound: float
    per_channel: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "argmax_input": [float(x) for x in self.argmax_input],
            "active_channel_ids": list(self.active_channel_ids),
            "certified_gap": self.certified_gap,
            "iterations": self.iterations,
            "upper_bound": self.upper_bound,
        }


def _maximize_min_holevo(batch: _HolevoBatch, tol: float, ascent_iters: int, max_iter: int):
    n_inputs = batch.mats.shape[1]
    if n_inputs == 1:
        p = np.ones(1)
        v = float(batch.values(p).min())
        return p, v, v, 0
    uniform = np.full(n_inputs, 1.0 / n_inputs)
    interior = 1e-9

    best_p, best_v = uniform, float(batch.values(uniform).min())
    cuts_a, cuts_b = [], []

    def add_cuts(q):
        chi, grads = batch.values_and_grads(q)
        # z - g.p <= chi - g.q
        for c, g in zip(chi, grads):
            cuts_a.append(np.append(-g, 1.0))
            cuts_b.append(c - g @ q)
        return chi

    # projected supergradient ascent, step 1/sqrt(k), lowest-index active channel
    p = uniform.copy()
    iters = 0
    for k in range(1, ascent_iters + 1):
        iters += 1
        q = (1 - interior) * p + interior * uniform
        chi, grads = batch.values_and_grads(q)
        t = int(np.argmin(chi))
        if chi[t] > best_v:
            best_p, best_v = q, float(chi[t])
        g = grads[t] - grads[t].mean()
        norm = np.linalg.norm(g)
        if norm < 1e-14:
            break
        p = _project_simplex(p + g / (norm * math.sqrt(k)))

    for vertex in np.eye(n_inputs):
        add_cuts((1 - 1e-6) * vertex + 1e-6 * uniform)
    add_cuts(uniform)
    add_cuts((1 - interior) * best_p + interior * uniform)

    bounds = [(0, None)] * n_inputs + [(None, None)]
    a_eq = np.append(np.ones(n_inputs), 0.0)[None]
    obj = np.append(np.zeros(n_inputs), -1.0)
    upper = math.inf
    history = []
    for _ in range(max_iter):
        iters += 1
        res = linprog(obj, A_ub=np.array(cuts_a), b_ub=np.array(cuts_b),
                      A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs")
        if res.status != 0:
            break
        upper = min(upper, -res.fun)
        cand = _project_simplex(res.x[:n_inputs])
        v = float(batch.values(cand).min())
        if v > best_v:
            best_p, best_v = cand, v
        if upper - best_v <= tol:
            break
        # the LP solver's own feasibility tolerance limits how far the gap can shrink
        history.append(upper - best_v)
        if len(history) > 50 and history[-51] - history[-1] <= 1e-3 * history[-1]:
            break
        add_cuts((1 - interior) * cand + interior * uniform)
    return best_p, best_v + 0.0, max(upper, best_v) + 0.0, iters


def compound_capacity(
    channels: CompoundSet,
    tol: float = 1e-6,
    *,
    ascent_iters: int = 200,
    max_iter: int = 20000,
    active_tol: float = 1e-9,
) -> CapacityResult:
    """max_p min_t chi(p, W_t) over a finite compound set."""
    if tol <= 0:
        raise InvalidStateError("tol must be positive")
    if isinstance(channels, CqChannel):
        channels = CompoundSet([channels])
    batch = _HolevoBatch(list(channels))
    p, value, upper, iters = _maximize_min_holevo(batch, tol, ascent_iters, max_iter)
    chis = batch.values(p)
    gap = max(0.0, upper - value)
    cutoff = chis.min() + max(active_tol, gap)
    active = sorted(cid for cid, c in zip(channels.ids, chis) if c <= cutoff)
    return CapacityResult(
        value=value,
        argmax_input=p,
        active_channel_ids=active,
        iterations=iters,
        certified_gap=gap,
        upper_bound=upper,
        per_channel={cid: float(c) for cid, c in zip(channels.ids, chis)},
    )


def holevo_capacity(w: CqChannel, tol: float = 1e-6) -> CapacityResult:
    return compound_capacity(CompoundSet([w]), tol)


def averaged_capacity(spec: AveragedChannelSpec, tol: float = 1e-6) -> CapacityResult:
    """sup_p ess-inf_t chi(p, W_t); for a finite prior the infimum runs over positive weights."""
    return compound_capacity(spec.support(), tol)


def donald_decomposition(p, w_t: CqChannel, w_tp: CqChannel, tol: float = 1e-8):
    """Return (lhs, rhs, gap) with lhs = S(rho_t'||p x sigma_t), rhs = chi(p, W_t'),
    gap = S(sigma_t'||sigma_t); checks lhs = rhs + gap when finite."""
    if w_t.alphabet != w_tp.alphabet or w_t.dim != w_tp.dim:
        raise DimensionMismatchError("channels do not share alphabet and dimension")
    js_t, js_tp = joint_state(p, w_t), joint_state(p, w_tp)
    lhs = quantum_relative_entropy(js_tp.joint, js_t.product)
    rhs = quantum_relative_entropy(js_tp.joint, js_tp.product)
    gap = quantum_relative_entropy(js_tp.marginal, js_t.marginal)
    if math.isinf(lhs) != math.isinf(gap):
        raise ContractViolation("donald_decomposition", f"support mismatch: lhs={lhs}, gap={gap}")
    if not math.isinf(lhs) and abs(lhs - rhs - gap) > tol:
        raise ContractViolation(
            "donald_decomposition", f"|lhs - rhs - gap| = {abs(lhs - rhs - gap):.3e}"
        )
    return lhs, rhs, gap


def omega_inf_check(p, channels: CompoundSet, tol: float = 1e-8):
    """Both sides of inf_t' inf_r S(rho_r||p x sigma_t') = inf_t' S(rho_t'||p x sigma_t')."""
    states = [joint_state(p, w) for w in channels]
    lhs = min(
        quantum_relative_entropy(r.joint, s.product) for s in states for r in states
    )
    rhs = min(quantum_relative_entropy(s.joint, s.product) for s in states)
    if abs(lhs - rhs) > tol:
        raise ContractViolation("omega_inf_check", f"|lhs - rhs| = {abs(lhs - rhs):.3e}")
    return lhs, rhs


def classical_mutual_information(p, v) -> float:
    """I(p, V) = sum_x p(x) D(V(.|x) || pV) for a row-stochastic matrix V."""
    p = check_probability(p)
    v = np.asarray(v, dtype=float)
    if v.ndim != 2 or v.shape[0] != p.size:
        raise DimensionMismatchError(f"channel matrix shape {v.shape} does not match {p.size} inputs")
    if np.any(np.abs(v.sum(axis=1) - 1) > 1e-10) or np.any(v < -1e-15):
        raise InvalidStateError("rows of the channel matrix must be probability vectors")
    v = np.clip(v, 0.0, None)
    v = v / v.sum(axis=1, keepdims=True)
    out = p @ v
    return float(sum(px * kl_divergence(row, out) for px, row in zip(p, v) if px > 0))
