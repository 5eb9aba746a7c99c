import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import binom

from cqcap.capacity import classical_mutual_information, joint_state
from cqcap.channels import CqChannel, mix_with_useless
from cqcap.errors import ContractViolation, InvalidStateError
from cqcap.hypothesis_testing import (
    UNIVERSAL_C,
    bbt_inequality_check,
    density_tables,
    enumerate_types,
    hoeffding_tail_check,
    induced_classical_channel,
    information_density,
    nagaoka_chain_bound,
    refine_to_rank_one,
    regroup_cq,
    schedule,
    threshold_test_projection,
    type_of,
    universal_pvm,
    universal_test_set,
)
from cqcap.quantum_core import (
    Pvm,
    kl_divergence,
    kron_all,
    measured_relative_entropy,
)
from cqcap.sampling import random_channel, random_density, random_unitary

seeds = st.integers(0, 2**32 - 1)


def brute_force_masses(omega, r, k, delta):
    """Masses of the l1-ball test set by enumerating every word in X^k."""
    nx = len(r)
    masses = np.zeros(len(omega))
    r_mass = 0.0
    for word in itertools.product(range(nx), repeat=k):
        t = np.bincount(word, minlength=nx) / k
        if min(np.abs(t - np.asarray(q)).sum() for q in omega) <= delta + 1e-12:
            masses += [np.prod([q[i] for i in word]) for q in omega]
            r_mass += np.prod([r[i] for i in word])
    return masses, r_mass


def test_type_of_examples():
    assert type_of("aa", "ab").counts == (2, 0)
    np.testing.assert_allclose(type_of("aa", "ab").type, [1.0, 0.0])
    np.testing.assert_allclose(type_of("ab").type, [0.5, 0.5])
    with pytest.raises(InvalidStateError):
        type_of("", "ab")
    with pytest.raises(InvalidStateError):
        type_of("ac", "ab")
    distinct = {type_of(w, "01").counts for w in itertools.product("01", repeat=3)}
    assert len(distinct) == 4 <= (3 + 1) ** 2


@pytest.mark.parametrize("nx", [2, 3, 4])
@pytest.mark.parametrize("k", [1, 5, 12])
def test_type_enumeration_count(nx, k):
    types = list(enumerate_types(nx, k))
    assert len(types) == len(set(types)) == math.comb(k + nx - 1, nx - 1)
    assert len(types) <= (k + 1) ** nx
    assert all(sum(t) == k for t in types)


def test_universal_test_set_full_ball():
    ts = universal_test_set([[0.9, 0.1]], [0.5, 0.5], 8, 2.0)
    assert ts.omega_masses[0] == pytest.approx(1.0)
    assert ts.r_mass == pytest.approx(1.0)


@pytest.mark.parametrize(
    "omega, r, k, delta",
    [
        ([[0.9, 0.1]], [0.5, 0.5], 10, 0.2),
        ([[0.5, 0.5]], [0.5, 0.5], 10, 0.3),
        ([[0.7, 0.3], [0.2, 0.8]], [0.4, 0.6], 8, 0.1),
        ([[0.6, 0.3, 0.1]], [0.2, 0.3, 0.5], 6, 0.25),
    ],
)
def test_universal_test_set_against_word_enumeration(omega, r, k, delta):
    ts = universal_test_set(omega, r, k, delta)
    masses, r_mass = brute_force_masses(omega, r, k, delta)
    np.testing.assert_allclose(ts.omega_masses, masses, atol=1e-12)
    assert ts.r_mass == pytest.approx(r_mass, abs=1e-12)
    assert np.all(ts.omega_masses >= ts.first_kind_bound)
    assert ts.r_mass <= ts.second_kind_bound


def test_universal_test_set_predicate():
    ts = universal_test_set([[0.9, 0.1]], [0.5, 0.5], 10, 0.2)
    assert ts.contains([0] * 10)
    assert not ts.contains([0, 1] * 5)
    assert ts.contains_type((9, 1))


def test_universal_test_set_rejects_bad_input():
    with pytest.raises(InvalidStateError):
        universal_test_set([[0.5, 0.5]], [1.0, 0.0], 4, 0.1)
    with pytest.raises(InvalidStateError):
        universal_test_set([[0.5, 0.5]], [0.5, 0.5], 4, 0.0)


def test_universal_constant():
    assert UNIVERSAL_C == pytest.approx(0.7213475204444817)


def test_schedule_examples():
    s = schedule(4, 0.3, 2)
    assert (s.m, s.k, s.y) == (1, 4, 0)
    assert s.delta == pytest.approx(4 ** -0.25)
    # d = 2: m = ceil(log2(l) / 8) switches to 2 just above l = 256
    assert schedule(256, 0.3, 2).m == 1
    assert schedule(257, 0.3, 2).m == 2
    assert schedule(257, 0.3, 2).k * 2 + schedule(257, 0.3, 2).y == 257
    assert schedule(10**4, 0.1, 2).zeta < schedule(10**2, 0.1, 2).zeta
    with pytest.raises(InvalidStateError):
        schedule(4, 0.0, 2)
    with pytest.raises(InvalidStateError):
        schedule(1, 0.3, 2)


def test_schedule_formula_terms():
    s = schedule(16, 0.25, 2)
    eta = -s.delta * math.log2(s.delta / 2) - s.delta * math.log2(0.25)
    assert s.eta == pytest.approx(eta)
    assert s.tau1 == pytest.approx((s.k + 1) ** 2 * 2 ** (-s.k * UNIVERSAL_C * s.delta**2))
    assert s.tau2 == pytest.approx(2 * math.log2(2) + 6 * math.log2(s.k + 1) / s.k + eta)


def test_universal_pvm_commuting_reduces_to_classical():
    rho, sigma = np.diag([0.9, 0.1]), np.diag([0.5, 0.5])
    u = universal_pvm([rho], sigma, 8)
    ts = universal_test_set([[0.9, 0.1]], [0.5, 0.5], 8, 8 ** -0.25)
    assert u.omega_masses[0] == pytest.approx(ts.omega_masses[0], abs=1e-12)
    assert u.sigma_mass == pytest.approx(ts.r_mass, abs=1e-12)
    p = u.projector()
    assert np.real(np.trace(kron_all([rho] * 8) @ p)) == pytest.approx(u.omega_masses[0], abs=1e-10)
    assert np.real(np.trace(kron_all([sigma] * 8) @ p)) == pytest.approx(u.sigma_mass, abs=1e-10)


def test_universal_pvm_two_commuting_members():
    omega = [np.diag([0.9, 0.1]), np.diag([0.3, 0.7])]
    u = universal_pvm(omega, np.diag([0.5, 0.5]), 8)
    assert np.all(u.omega_masses >= u.first_kind_bound)
    assert u.pvm().is_projective


def test_universal_pvm_self_test():
    sigma = np.diag([0.6, 0.4])
    u = universal_pvm([sigma], sigma, 4)
    assert u.relative_entropy == pytest.approx(0.0, abs=1e-12)
    chain = nagaoka_chain_bound(sigma, sigma, u, 4, 0.0)
    assert chain.lower <= 0 <= chain.s_m


def test_universal_pvm_requires_invertible_reference():
    with pytest.raises(InvalidStateError):
        universal_pvm([np.diag([0.5, 0.5])], np.diag([1.0, 0.0]), 4)


@settings(max_examples=10, deadline=None)
@given(seeds, st.sampled_from([4, 8]))
def test_universal_pvm_masses_are_traces(seed, l):
    rng = np.random.default_rng(seed)
    omega = [random_density(2, rng) for _ in range(2)]
    sigma = random_density(2, rng)
    u = universal_pvm(omega, sigma, l)
    p = u.projector()
    for rho, mass in zip(omega, u.omega_masses):
        assert np.real(np.trace(kron_all([rho] * l) @ p)) == pytest.approx(mass, abs=1e-10)
    assert np.real(np.trace(kron_all([sigma] * l) @ p)) == pytest.approx(u.sigma_mass, abs=1e-10)


def test_nagaoka_identity_test():
    rho, sigma = np.diag([0.8, 0.2]), np.diag([0.3, 0.7])
    chain = nagaoka_chain_bound(rho, sigma, np.eye(4), 2, 1.0)
    assert chain.s_m == 0.0
    assert chain.lower <= 0.0


def test_nagaoka_chain_classical():
    rho, sigma = np.diag([0.9, 0.1]), np.diag([0.4, 0.6])
    u = universal_pvm([rho], sigma, 8)
    chain = nagaoka_chain_bound(rho, sigma, u, 8, kl_divergence([0.9, 0.1], [0.4, 0.6]))
    a, b = chain.mass_rho, chain.mass_sigma
    assert chain.s_m == pytest.approx(a * math.log2(a / b) + (1 - a) * math.log2((1 - a) / (1 - b)))
    assert chain.slack >= -1e-9


def test_refinement_of_block_projector(rng):
    n_a, d, l = 2, 2, 2
    # arbitrary block projector: random subspace per word
    blocks = []
    for _ in range(n_a**l):
        u = random_unitary(d**l, rng)
        k = int(rng.integers(0, d**l + 1))
        blocks.append(u[:, :k] @ u[:, :k].conj().T)
    from scipy.linalg import block_diag

    p = block_diag(*blocks)
    ref = refine_to_rank_one(p, n_a**l, d**l)
    assert len(ref) == n_a**2 * 4
    np.testing.assert_allclose(ref.coarse_grain(), p, atol=1e-10)
    fine = ref.pvm()
    assert fine.is_projective
    np.testing.assert_allclose(fine.elements.sum(axis=0), np.eye(16), atol=1e-10)
    # measured divergence grows under refinement
    rho, sigma = random_density(16, rng), random_density(16, rng)
    coarse = Pvm.from_projector(p)
    assert measured_relative_entropy(rho, sigma, fine) >= measured_relative_entropy(rho, sigma, coarse) - 1e-9


def test_refinement_rejects_cross_block_terms():
    p = np.full((4, 4), 0.25)
    with pytest.raises(InvalidStateError):
        refine_to_rank_one(p, 2, 2)


def test_refinement_of_rank_one_blocks_is_unchanged():
    p = np.diag([1.0, 0.0, 0.0, 1.0])
    ref = refine_to_rank_one(p, 2, 2)
    np.testing.assert_allclose(ref.coarse_grain(), p)
    assert ref.accepted.tolist() == [[True, False], [True, False]]


def test_induced_channel_examples():
    useless = CqChannel([np.eye(2) / 2] * 2)
    ref = refine_to_rank_one(np.eye(16), 4, 4)
    np.testing.assert_allclose(induced_classical_channel(useless, ref, 2), np.full((4, 4), 0.25))
    classical = CqChannel([np.diag([0.9, 0.1]), np.diag([0.2, 0.8])])
    ref = refine_to_rank_one(np.eye(16), 4, 4, preferred_basis=np.eye(4))
    v = induced_classical_channel(classical, ref, 2)
    np.testing.assert_allclose(v, np.kron([[0.9, 0.1], [0.2, 0.8]], [[0.9, 0.1], [0.2, 0.8]]), atol=1e-12)


def test_induced_channel_floor(rng):
    n = 4
    w = mix_with_useless(random_channel(2, 2, rng, rank=1), 1 / n**2)
    proj = np.zeros((16, 16))
    proj[:4, :4] = np.eye(4)
    ref = refine_to_rank_one(proj, 4, 4)
    v = induced_classical_channel(w, ref, 2, floor=(n * n * 2) ** -2)
    np.testing.assert_allclose(v.sum(axis=1), 1.0, atol=1e-10)


def test_information_density_examples():
    ident = np.eye(3)
    assert information_density(np.full(3, 1 / 3), ident, 1, ([1], [1])) == pytest.approx(math.log2(3))
    assert information_density(np.full(3, 1 / 3), ident, 1, ([1], [2])) == -math.inf
    const = np.full((2, 3), 1 / 3)
    assert information_density([0.4, 0.6], const, 2, ([0, 1], [2, 0])) == pytest.approx(0.0, abs=1e-12)


def test_information_density_two_member_average():
    v1 = np.array([[0.8, 0.2], [0.3, 0.7]])
    v2 = np.array([[0.6, 0.4], [0.1, 0.9]])
    p = np.array([0.35, 0.65])
    xs, js = (0, 1), (1, 1)
    num = 0.5 * (v1[0, 1] * v1[1, 1] + v2[0, 1] * v2[1, 1])
    q1, q2 = p @ v1, p @ v2
    den = 0.5 * (q1[1] * q1[1] + q2[1] * q2[1])
    assert information_density(p, [v1, v2], 2, (xs, js)) == pytest.approx(math.log2(num / den) / 2)
    assert information_density(p, [v1, v2], 2, (xs, js), member=1) == pytest.approx(
        math.log2(v2[0, 1] * v2[1, 1] / (q2[1] * q2[1])) / 2
    )


def test_density_tables_mean_dominance():
    rng = np.random.default_rng(3)
    fam = [rng.dirichlet(np.ones(3), size=2) for _ in range(2)]
    p = np.array([0.3, 0.7])
    tab = density_tables(fam, p, 2)
    infos = [classical_mutual_information(p, v) for v in fam]
    for t, info in enumerate(infos):
        dens = tab.density_member(t)
        joint = tab.joint_member(t)
        on = joint > 0
        assert float(np.sum(joint[on] * dens[on])) == pytest.approx(info, abs=1e-12)
        assert float(np.sum(joint[on] * dens[on])) >= min(infos) - 1e-12


def test_bbt_examples():
    v = np.array([[0.8, 0.2], [0.3, 0.7]])
    lhs, rhs = bbt_inequality_check([v], [0.5, 0.5], 2, 0.1, 50.0)
    assert lhs <= rhs
    lhs, _ = bbt_inequality_check([v], [0.5, 0.5], 2, -10.0, 0.5)
    assert lhs == 0.0


def test_bbt_grid_against_pointwise_oracle():
    rng = np.random.default_rng(11)
    fam = [np.column_stack([c := rng.uniform(0.05, 0.95, 2), 1 - c]) for _ in range(2)]
    p = np.array([0.4, 0.6])
    alphas, betas = np.linspace(-1, 1.5, 20), np.linspace(0, 2, 20)
    al, be = np.meshgrid(alphas, betas, indexing="ij")
    lhs, rhs = bbt_inequality_check(fam, p, 3, al, be)
    assert np.all(lhs <= rhs + 1e-12)
    # brute-force oracle for one grid point
    i, j = 7, 4
    tab = density_tables(fam, p, 3)
    direct_lhs = float(np.sum(tab.joint_avg[tab.density_avg <= alphas[i]]))
    assert lhs[i, j] == pytest.approx(direct_lhs, abs=1e-12)
    direct_rhs = np.mean([
        np.sum(tab.joint_member(t)[tab.density_member(t) <= alphas[i] + betas[j]]) for t in range(2)
    ]) + 2 * 2 ** (-3 * betas[j])
    assert rhs[i, j] == pytest.approx(direct_rhs, abs=1e-12)


def test_hoeffding_fair_coins():
    law = [([-1.0, 1.0], [0.5, 0.5])] * 10
    res = hoeffding_tail_check([(-1, 1)] * 10, 0.5, law=law)
    # sum of ten +-1 coins >= 5 means at least 8 heads
    assert res.tail == pytest.approx(binom.sf(7, 10, 0.5), abs=1e-15)
    assert res.tail == pytest.approx(56 / 1024)
    assert res.bound == pytest.approx(math.exp(-1.25))
    big = hoeffding_tail_check([(-1, 1)] * 10, 2.5, law=law)
    assert big.tail == 0.0


def test_hoeffding_monte_carlo(rng):
    samples = rng.integers(0, 2, size=(4000, 6)) * 2.0 - 1
    res = hoeffding_tail_check([(-1, 1)] * 6, 0.4, samples=samples)
    assert not res.exact
    assert res.ci[0] <= res.tail <= res.ci[1]
    assert res.ci[0] <= res.bound


def test_hoeffding_information_densities():
    v = np.array([[0.8, 0.2], [0.3, 0.7]])
    p = np.array([0.5, 0.5])
    q = p @ v
    vals, probs = [], []
    for x in range(2):
        for j in range(2):
            vals.append(math.log2(v[x, j] / q[j]))
            probs.append(p[x] * v[x, j])
    lo, hi = min(vals), max(vals)
    res = hoeffding_tail_check([(lo, hi)] * 4, 0.3, law=[(vals, probs)] * 4, lower=True)
    assert res.tail <= res.bound


def test_threshold_set_full_when_theta_huge():
    v = np.array([[0.8, 0.2], [0.3, 0.7]])
    ts, _ = threshold_test_projection([v], [0.5, 0.5], 1, 3, 100.0)
    assert ts.mass_true == pytest.approx(1.0)


def test_threshold_set_of_deterministic_channel():
    ts, _ = threshold_test_projection([np.eye(2)], [0.5, 0.5], 1, 3, 0.1)
    assert ts.info == pytest.approx(1.0)
    assert int(ts.member.sum()) == 8  # the graph of the identity on 3-letter words
    assert ts.mass_ref == pytest.approx(2.0 ** (-3 * ts.info))
    assert ts.mass_true == pytest.approx(1.0)


def test_threshold_projection_reproduces_masses(rng):
    """Two-member qubit compound, l = 2, a = 2: masses equal traces of P_(la, theta)."""
    n_a, d, l, a = 2, 2, 2, 2
    members = [mix_with_useless(random_channel(n_a, d, rng), 1 / 16) for _ in range(2)]
    p = np.array([0.5, 0.5])
    sig = joint_state(p, members[0]).marginal.matrix
    basis = np.linalg.eigh(sig)[1]
    ref = refine_to_rank_one(np.eye(16), n_a**l, d**l, preferred_basis=kron_all([basis] * l))
    fam = [induced_classical_channel(w, ref, l) for w in members]
    ts, pvm = threshold_test_projection(fam, p, l, a, 0.1, refinement=ref)
    proj = pvm.elements[0]
    # rho = sum_x r(x)|x><x| (x) avg_t D_{t,x} on the (la)-letter space, word-major
    words = list(itertools.product(range(n_a), repeat=l * a))
    dim = d ** (l * a)
    rho = np.zeros((len(words) * dim,) * 2, dtype=complex)
    ref_state = np.zeros_like(rho)
    avg_sigma = np.zeros((dim, dim), dtype=complex)
    for w in members:
        s1 = joint_state(p, w).marginal.matrix
        avg_sigma += kron_all([s1] * (l * a)) / len(members)
    for i, word in enumerate(words):
        prob = float(np.prod(p[list(word)]))
        out = sum(kron_all([w.matrices[x] for x in word]) for w in members) / len(members)
        rho[i * dim : (i + 1) * dim, i * dim : (i + 1) * dim] = prob * out
        ref_state[i * dim : (i + 1) * dim, i * dim : (i + 1) * dim] = prob * avg_sigma
    assert np.real(np.trace(rho @ proj)) == pytest.approx(ts.mass_true, abs=1e-10)
    assert np.real(np.trace(ref_state @ proj)) == pytest.approx(ts.mass_ref, abs=1e-10)
    assert ts.mass_true >= ts.true_bound
    assert ts.mass_ref <= ts.ref_bound


def test_regroup_cq_matches_explicit_permutation():
    a = np.kron(np.diag([1.0, 2.0]), np.diag([3.0, 5.0]))  # A (x) H for one letter
    two = np.kron(a, a)  # (A H)(A H)
    regrouped = regroup_cq(two, 2, 2, 2)
    expected = np.kron(np.kron(np.diag([1.0, 2.0]), np.diag([1.0, 2.0])), np.kron(np.diag([3.0, 5.0]), np.diag([3.0, 5.0])))
    np.testing.assert_allclose(regrouped, expected)


def test_universal_test_violation_is_reported():
    # an exponent constant far above any valid value must break the first-kind bound
    with pytest.raises(ContractViolation):
        universal_test_set([[0.5, 0.5]], [0.5, 0.5], 12, 0.3, c=50.0)
