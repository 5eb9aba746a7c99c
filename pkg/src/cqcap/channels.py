"""Classical-quantum channels, their memoryless extensions and finite nets.

A cq-channel maps each input symbol to a density operator. Words are given
either as strings of single-character symbols or as sequences of symbols;
internally they are tuples of alphabet indices.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetExceededError, DimensionMismatchError, InvalidStateError
from .numerics import TOL
from .quantum_core import DensityOperator, as_density, check_probability, kron_all


class CqChannel:
    def __init__(self, states: Sequence, alphabet: Sequence | None = None, id: str = "w"):
        states = tuple(as_density(s) for s in states)
        if not states:
            raise InvalidStateError("a channel needs at least one input symbol")
        dims = {s.dim for s in states}
        if len(dims) != 1:
            raise DimensionMismatchError(f"output dimensions differ: {sorted(dims)}")
        if alphabet is None:
            alphabet = tuple(str(i) for i in range(len(states)))
        alphabet = tuple(str(a) for a in alphabet)
        if len(alphabet) != len(states) or len(set(alphabet)) != len(alphabet):
            raise InvalidStateError("alphabet must list one distinct symbol per output state")
        self.states = states
        self.alphabet = alphabet
        self.id = str(id)
        self._index = {a: i for i, a in enumerate(alphabet)}

    @property
    def dim(self) -> int:
        return self.states[0].dim

    @property
    def n_inputs(self) -> int:
        return len(self.states)

    @property
    def matrices(self) -> np.ndarray:
        return np.stack([s.matrix for s in self.states])

    def encode(self, word) -> tuple:
        """Map a word (string or symbol sequence) to alphabet indices."""
        if isinstance(word, str) and word not in self._index:
            word = list(word)
        elif isinstance(word, str):
            word = [word]
        try:
            return tuple(self._index[str(s)] for s in word)
        except KeyError as exc:
            raise InvalidStateError(f"unknown symbol {exc.args[0]!r}") from None

    def with_states(self, states, id: str | None = None) -> "CqChannel":
        return CqChannel(states, self.alphabet, self.id if id is None else id)

    def __repr__(self):
        return f"CqChannel(id={self.id!r}, |A|={self.n_inputs}, d={self.dim})"


def _check_budget(d: int, n: int):
    if d**n > TOL.max_dense_dim:
        raise BudgetExceededError(
            f"d**n = {d}**{n} exceeds the dense budget {TOL.max_dense_dim}"
        )


def product_output(matrices: np.ndarray, indices: Sequence[int]) -> np.ndarray:
    """Kronecker product of per-letter outputs, no validation."""
    return kron_all([matrices[i] for i in indices]) if len(indices) else np.ones((1, 1))


def output_state(w: CqChannel, word) -> DensityOperator:
    idx = w.encode(word)
    if not idx:
        raise InvalidStateError("empty word")
    _check_budget(w.dim, len(idx))
    return DensityOperator(product_output(w.matrices, idx), validate=False)


class CompoundSet:
    def __init__(self, members: Iterable[CqChannel]):
        members = list(members)
        if not members:
            raise InvalidStateError("a compound set needs at least one channel")
        first = members[0]
        for m in members[1:]:
            if m.alphabet != first.alphabet or m.dim != first.dim:
                raise DimensionMismatchError(
                    f"channel {m.id!r} does not share alphabet/dim with {first.id!r}"
                )
        ids = [m.id for m in members]
        if len(set(ids)) != len(ids):
            raise InvalidStateError(f"duplicate channel ids: {ids}")
        self.members = members

    @property
    def ids(self) -> list[str]:
        return [m.id for m in self.members]

    @property
    def alphabet(self):
        return self.members[0].alphabet

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self):
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __getitem__(self, i):
        return self.members[i]

    def by_id(self, cid: str) -> CqChannel:
        for m in self.members:
            if m.id == cid:
                return m
        raise KeyError(cid)

    def __repr__(self):
        return f"CompoundSet(ids={self.ids})"


@dataclass
class AveragedChannelSpec:
    """Finitely supported prior over the members of a compound set."""

    compound: CompoundSet
    weights: np.ndarray

    def __post_init__(self):
        self.weights = check_probability(self.weights)
        if self.weights.size != len(self.compound):
            raise DimensionMismatchError("one weight per member channel is required")

    @property
    def ids(self):
        return self.compound.ids

    def weight_of(self, cid: str) -> float:
        return float(self.weights[self.compound.ids.index(cid)])

    def support(self) -> CompoundSet:
        """Members with positive weight; the essential infimum runs over these."""
        return CompoundSet([m for m, wt in zip(self.compound, self.weights) if wt > 0])


def averaged_output_state(spec: AveragedChannelSpec, word) -> DensityOperator:
    out = None
    for w, wt in zip(spec.compound, spec.weights):
        if wt == 0:
            continue
        term = wt * output_state(w, word).matrix
        out = term if out is None else out + term
    return DensityOperator(out)


def mix_with_useless(w: CqChannel, tau: float) -> CqChannel:
    """Replace each output D by (1 - tau) D + tau/d * 1."""
    if not 0 < tau <= 1:
        raise InvalidStateError(f"tau must lie in (0, 1], got {tau}")
    d = w.dim
    eye = np.eye(d) / d
    return w.with_states([(1 - tau) * s.matrix + tau * eye for s in w.states])


def _pairwise_letter_distances(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """a: (N, A, d, d), b: (R, A, d, d) -> (N, R) max-over-letters trace distance."""
    diff = a[:, None] - b[None, :]
    diff = (diff + np.conj(np.swapaxes(diff, -1, -2))) / 2
    tn = np.abs(np.linalg.eigvalsh(diff)).sum(axis=-1)
    return tn.max(axis=-1)


def channel_distance(w1: CqChannel, w2: CqChannel) -> float:
    if w1.alphabet != w2.alphabet or w1.dim != w2.dim:
        raise DimensionMismatchError("channels do not share alphabet and dimension")
    return float(_pairwise_letter_distances(w1.matrices[None], w2.matrices[None])[0, 0])


def _quantized_key(matrices: np.ndarray, step: float) -> tuple:
    """Integer grid coordinates of the d^2 real parameters of every output."""
    d = matrices.shape[-1]
    iu = np.triu_indices(d, 1)
    params = []
    for m in matrices:
        params.append(np.real(np.diag(m)))
        params.append(np.real(m[iu]))
        params.append(np.imag(m[iu]))
    return tuple(int(v) for v in np.rint(np.concatenate(params) / step))


@dataclass
class TauNet:
    """Finite representative set covering a channel family.

    ``assignment`` maps each input channel id to the id of a representative
    within ``kappa``; ``c_net`` is the achieved count times kappa^(|A| d^2).
    """

    representatives: CompoundSet
    assignment: dict
    kappa: float
    c_net: float
    distances: dict = field(default_factory=dict)


def tau_net(channels, kappa: float) -> TauNet:
    """Greedy kappa-net whose representatives are members of the input family.

    Members are visited in lexicographic order of their outputs quantized on
    a grid of step kappa / (2 d^2); a member becomes a representative unless
    an earlier representative is within ``kappa`` of it.
    """
    members = list(channels)
    if not members:
        raise InvalidStateError("cannot build a net of an empty family")
    if kappa <= 0:
        raise InvalidStateError("kappa must be positive")
    CompoundSet(members)  # validates shared alphabet/dim
    d, n_inputs = members[0].dim, members[0].n_inputs
    step = kappa / (2 * d * d)
    stacks = np.stack([m.matrices for m in members])
    order = sorted(range(len(members)), key=lambda i: (_quantized_key(stacks[i], step), i))

    reps: list[int] = []
    assignment, dists = {}, {}
    for i in order:
        if reps:
            dist = _pairwise_letter_distances(stacks[i : i + 1], stacks[reps])[0]
            j = int(np.argmin(dist))
            if dist[j] <= kappa:
                assignment[members[i].id] = members[reps[j]].id
                dists[members[i].id] = float(dist[j])
                continue
        reps.append(i)
        assignment[members[i].id] = members[i].id
        dists[members[i].id] = 0.0
    rep_set = CompoundSet([members[i] for i in reps])
    c_net = len(reps) * kappa ** (n_inputs * d * d)
    return TauNet(rep_set, assignment, kappa, c_net, dists)


def build_t_n(channels, n: int) -> TauNet:
    """Net at kappa = 1/n^2 with every representative mixed at tau = 1/n^2."""
    if n < 2:
        raise InvalidStateError("block length must be at least 2")
    kappa = 1.0 / n**2
    net = tau_net(channels, kappa)
    mixed = CompoundSet([mix_with_useless(w, kappa) for w in net.representatives])
    return TauNet(mixed, net.assignment, kappa, net.c_net, net.distances)


def conclusion_example(K: int = 3) -> AveragedChannelSpec:
    """K binary-input qubit channels: one constant, K-1 rotated noiseless ones.

    Member ``w1`` sends both symbols to the maximally mixed state. Member
    ``wj`` (j >= 2) sends b to U_j|b><b|U_j^* with U_j a y-rotation by
    pi (j - 2) / (K - 1). Weights are 0 on ``w1`` and uniform elsewhere.
    """
    if K < 2:
        raise InvalidStateError("the example needs K >= 2")
    members = [CqChannel([np.eye(2) / 2, np.eye(2) / 2], ("0", "1"), id="w1")]
    for j in range(2, K + 1):
        theta = np.pi * (j - 2) / (K - 1)
        c, s = np.cos(theta / 2), np.sin(theta / 2)
        u = np.array([[c, -s], [s, c]])
        states = [np.outer(u[:, b], u[:, b].conj()) for b in (0, 1)]
        members.append(CqChannel(states, ("0", "1"), id=f"w{j}"))
    weights = np.array([0.0] + [1.0 / (K - 1)] * (K - 1))
    return AveragedChannelSpec(CompoundSet(members), weights)
