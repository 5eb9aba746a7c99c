"""Acceptance criteria, one test each.

Every test prints a PASS/FAIL line and records it for the terminal summary.
"""

import json
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from conftest import ACCEPTANCE_LINES

from cqcap.capacity import compound_capacity
from cqcap.checks import (
    bbt_suite,
    donald_suite,
    fannes_suite,
    fano_suite,
    hn_suite,
    one_shot_instance,
    povm_suite,
    rng_for,
    types_suite,
)
from cqcap.channels import CompoundSet, CqChannel
from cqcap.cli import main
from cqcap.coding import one_shot_code, random_code_expected_error
from cqcap.hypothesis_testing import universal_pvm
from cqcap.quantum_core import kron_all, measured_relative_entropy, quantum_relative_entropy
from cqcap.sampling import random_density, random_unitary
from cqcap.serialization import channels_to_json, dumps

DATA = Path(__file__).resolve().parent.parent / "data"


def report(name, passed, detail):
    ACCEPTANCE_LINES.append((name, bool(passed), detail))
    print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
    assert passed, detail


def test_conclusion_example_via_cli():
    path = str(DATA / "conclusion_k3.json")
    t0 = time.perf_counter()
    runs = {}
    for mode in ("compound", "averaged"):
        res = subprocess.run([sys.executable, "-m", "cqcap", "capacity", "--input", path, "--mode", mode],
                             capture_output=True, text=True, timeout=60)
        assert res.returncode == 0, res.stderr
        runs[mode] = json.loads(res.stdout)["value"]
    elapsed = time.perf_counter() - t0
    ok = abs(runs["compound"]) <= 1e-4 and abs(runs["averaged"] - 1.0) <= 1e-4 and elapsed < 10
    report("conclusion example", ok,
           f"compound {runs['compound']:.3g}, averaged {runs['averaged']:.9f}, {elapsed:.2f} s")


def test_donald_identity_and_inf_equality():
    res = donald_suite(trials=500, seed=1)
    ok = res.passed and res.details["max_identity_error"] <= 1e-8 and res.details["max_inf_equality_error"] <= 1e-8
    report("Donald identity", ok,
           f"500 triples max err {res.details['max_identity_error']:.2e}; "
           f"100 five-member sets max err {res.details['max_inf_equality_error']:.2e}")
    assert res.trials == 600


def test_operator_inequality():
    res = hn_suite(trials=1000, seed=1)
    report("operator inequality", res.passed and res.worst >= -1e-8,
           f"1000 pairs at d in 2,3,4, min slack eigenvalue {res.worst:.3e}")


def test_one_shot_coding_bound():
    worst_expected = worst_best = -math.inf
    bad = 0
    for t in range(50):
        lc, w_dist, test, params, masses = one_shot_instance(rng_for(2, t))
        exp = random_code_expected_error(lc, w_dist, test, params, masses=masses, samples=400)
        best = one_shot_code(lc, w_dist, test, params, masses=masses)
        worst_expected = max(worst_expected, exp.value - params.bound)
        worst_best = max(worst_best, best.avg_error - params.bound)
        bad += exp.value > params.bound + 1e-9 or best.avg_error > params.bound + 1e-9
    report("one-shot coding bound", bad == 0,
           f"50 configurations, max E[err]-bound {worst_expected:.3f}, max best-of-32 minus bound {worst_best:.3f}")


def test_universal_test_bounds():
    res = types_suite(trials=20, seed=1)
    report("universal test bounds", res.passed and res.details["configurations"] == 240,
           f"{res.details['configurations']} configurations, max excess {res.worst:.3e}")


def qubit_families(rng):
    """Commuting and non-commuting qubit sets of size 1 to 3 with an invertible reference."""
    for size in (1, 2, 3):
        diag = [np.diag(v) for v in rng.dirichlet(np.ones(2), size=size)]
        yield "commuting", diag, np.diag(rng.dirichlet(np.ones(2)) * 0.9 + 0.05)
        u = random_unitary(2, rng)
        yield "commuting-rotated", [u @ d @ u.conj().T for d in diag], u @ np.diag([0.3, 0.7]) @ u.conj().T
        yield "non-commuting", [random_density(2, rng).matrix for _ in range(size)], random_density(2, rng).matrix


def test_universal_pvm_finite_length():
    rng = np.random.default_rng(5)
    cases, bad, worst = 0, 0, math.inf
    for _, omega, sigma in qubit_families(rng):
        target = min(quantum_relative_entropy(rho, sigma) for rho in omega)
        for l in (4, 8):
            u = universal_pvm(omega, sigma, l)
            pvm = u.pvm()
            sigma_l = kron_all([sigma] * l)
            for rho in omega:
                s_m = measured_relative_entropy(kron_all([rho] * l), sigma_l, pvm)
                slack = s_m / l - (target - u.schedule.zeta)
                worst = min(worst, slack)
                bad += slack < -1e-9
                cases += 1
    report("universal PVM at finite length", bad == 0, f"{cases} member checks at l in 4,8, min slack {worst:.3f}")


def simplex_grid(n_inputs, step):
    m = round(1 / step)
    if n_inputs == 2:
        a = np.arange(m + 1)
        pts = np.stack([a, m - a], axis=1)
    else:
        i, j = np.triu_indices(m + 1)
        pts = np.stack([i, j - i, m - j], axis=1)
    return pts / m


def qubit_entropy(mats):
    """Entropy of a stack of 2x2 density matrices from the closed-form eigenvalues."""
    a, d = mats[..., 0, 0].real, mats[..., 1, 1].real
    b = np.abs(mats[..., 0, 1])
    half = np.sqrt(((a - d) / 2) ** 2 + b**2)
    out = np.zeros(a.shape)
    for lam in ((a + d) / 2 + half, (a + d) / 2 - half):
        lam = np.clip(lam, 0, 1)
        with np.errstate(divide="ignore", invalid="ignore"):
            out -= np.where(lam > 1e-15, lam * np.log2(lam), 0.0)
    return out


def grid_capacity(members, step=1e-3):
    n_inputs = members[0].shape[0]
    pts = simplex_grid(n_inputs, step)
    worst = np.full(len(pts), np.inf)
    for mats in members:
        out = np.einsum("px,xij->pij", pts, mats)
        chi = qubit_entropy(out) - pts @ qubit_entropy(mats)
        worst = np.minimum(worst, chi)
    return float(worst.max())


def test_minimax_solver_against_grid():
    rng = np.random.default_rng(6)
    solver_time, worst = 0.0, 0.0
    for _ in range(30):
        k = int(rng.integers(2, 5))
        n_inputs = int(rng.integers(2, 4))
        members = [np.stack([random_density(2, rng).matrix for _ in range(n_inputs)]) for _ in range(k)]
        channels = CompoundSet([CqChannel(list(m), id=f"w{i}") for i, m in enumerate(members)])
        t0 = time.perf_counter()
        value = compound_capacity(channels).value
        solver_time += time.perf_counter() - t0
        worst = max(worst, abs(value - grid_capacity(members)))
    report("minimax solver vs grid", worst <= 2e-3 and solver_time < 60,
           f"30 sets, max |solver - grid| {worst:.2e}, solver time {solver_time:.1f} s")


def test_fano_holevo_converse():
    res = fano_suite(trials=200, seed=1)
    report("Fano-Holevo converse", res.passed, f"200 codes, min slack {res.worst:.3f} bits")


def test_bbt_inequality():
    res = bbt_suite(trials=10, seed=1, a=3, grid=20)
    report("BBT inequality", res.passed and res.worst <= 0,
           f"{res.details['grid_points']} grid points, max lhs - rhs {res.worst:.3e}")


def test_kernel_suite():
    povm = povm_suite(trials=500, seed=1)
    fannes = fannes_suite(trials=500, seed=1)
    ok = (
        povm.passed
        and fannes.passed
        and fannes.details["fannes_instances"] >= 500
        and fannes.details["subadditivity_instances"] >= 500
    )
    report("kernel suite", ok,
           f"measured vs quantum and refinement on {povm.trials}, Fannes on {fannes.details['fannes_instances']}, "
           f"subadditivity on {fannes.details['subadditivity_instances']}; worst excess "
           f"{max(povm.worst, fannes.worst):.2e}")


def test_determinism_across_thread_counts(tmp_path):
    chans = str(tmp_path / "chans.json")
    pair = CompoundSet([
        CqChannel([np.diag([1.0, 0.0]), np.diag([0.0, 1.0])], id="a"),
        CqChannel([np.diag([0.9, 0.1]), np.array([[0.2, 0.1j], [-0.1j, 0.8]])], id="b"),
    ])
    Path(chans).write_text(dumps(channels_to_json(pair)))
    runs = [
        ["code", "--input", chans, "--n", "6", "--theta", "0.05", "--seed", "3", "--csv", "{dir}/trials.csv"],
        ["capacity", "--input", str(DATA / "conclusion_k3.json"), "--mode", "averaged"],
        ["hypothesis", "--omega", "0.8,0.2;0.4,0.6", "--r", "0.5,0.5"],
        ["check", "--suite", "fano", "--trials", "20", "--seed", "4"],
    ]
    identical = 0
    for i, argv in enumerate(runs):
        outputs = []
        for threads in ("1", "8"):
            d = tmp_path / f"run{i}_{threads}"
            d.mkdir()
            args = [a.replace("{dir}", str(d)) for a in argv]
            assert main(args + ["--threads", threads, "--output", str(d / "out")]) == 0
            outputs.append(sorted((p.name, p.read_bytes()) for p in d.iterdir()))
        identical += outputs[0] == outputs[1]
    report("determinism", identical == len(runs), f"{identical}/{len(runs)} verbs byte-identical for 1 vs 8 threads")
