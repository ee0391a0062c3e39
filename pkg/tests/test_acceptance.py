"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line with its runtime."""

import itertools
import json
import math
import subprocess
import sys
import time
from contextlib import contextmanager

import numpy as np
import pytest

from costbound.bounds import (
    CostSpec,
    aux_lemma_gap,
    certify_aux_lemma,
    cost_theorem_bound,
    hellinger_alpha,
    large_margin_value,
    margin_threshold,
    small_margin_value,
)
from costbound.cli import run
from costbound.dist import ClassifierTable, DiscreteDistribution, JointLabelDistribution
from costbound.divergence import (
    CHI2,
    HELLINGER2,
    KL,
    TV,
    divergence,
    primitive,
    subadditivity_gap,
    verify_integral_representation,
)
from costbound.hardinstance import (
    adjacent_hellinger_sq,
    bayes_for,
    build_family,
    full_class,
    interval_class,
    joint_for,
    threshold_class,
    vc_dimension,
)
from costbound.jointrange import certify_primitive_hellinger_bound
from costbound.learnsim import bayes_classifier, estimate_minimax_risk, generalization_error, regret


@pytest.fixture
def report(capsys):
    @contextmanager
    def _report(number, title, budget):
        start = time.perf_counter()
        ok = False
        try:
            yield
            ok = True
        finally:
            elapsed = time.perf_counter() - start
            ok = ok and elapsed < budget
            with capsys.disabled():
                status = "PASS" if ok else "FAIL"
                print(f"\n[{status}] criterion {number:2d}: {title} ({elapsed:.2f}s, budget {budget:g}s)")
        assert elapsed < budget, f"runtime {elapsed:.2f}s exceeds {budget}s"

    return _report


def _random_dist(rng, k, full=False):
    p = rng.random(k)
    if not full:
        p[rng.random(k) < 0.2] = 0.0
        if p.sum() == 0:
            p[rng.integers(k)] = 1.0
    return DiscreteDistribution(tuple(f"a{i}" for i in range(k)), tuple((p / p.sum()).tolist()))


def test_primitive_form_equivalence(report):
    rng = np.random.default_rng(101)
    with report(1, "four primitive forms agree within 1e-12 on 10^4 cases", 5):
        worst = 0.0
        for _ in range(10_000):
            k = int(rng.integers(1, 9))
            p, q = _random_dist(rng, k), _random_dist(rng, k)
            c = float(rng.uniform(1e-6, 1 - 1e-6))
            vals = [primitive(c, p, q, form=f) for f in (1, 2, 3, 4)]
            worst = max(worst, max(vals) - min(vals))
        assert worst <= 1e-12


def test_half_cost_reduction(report):
    rng = np.random.default_rng(102)
    with report(2, "primitive at c=1/2 equals TV/4 on 10^3 pairs", 1):
        for _ in range(1000):
            k = int(rng.integers(1, 9))
            p, q = _random_dist(rng, k), _random_dist(rng, k)
            assert abs(primitive(0.5, p, q) - 0.25 * divergence(TV, p, q)) <= 1e-12


def test_integral_representation(report):
    rng = np.random.default_rng(103)
    with report(3, "weighted primitive integral matches KL, chi^2, He^2 to 1e-6 relative", 30):
        worst = 0.0
        for _ in range(100):
            p, q = _random_dist(rng, 2, full=True), _random_dist(rng, 2, full=True)
            for kind in (KL, CHI2, HELLINGER2):
                check = verify_integral_representation(kind, p, q)
                worst = max(worst, check.rel_err)
        assert worst <= 1e-6


def test_joint_range_reproduction(report, tmp_path, capsys):
    with report(4, "joint-range --c 0.7 --grid 201 and certificates for five costs", 10):
        code = run(["joint-range", "--c", "0.7", "--grid", "201", "--out", str(tmp_path)])
        summary = json.loads(capsys.readouterr().out)
        assert code == 0
        for name in ("j2.csv", "hull.csv", "boundary.csv"):
            assert (tmp_path / name).stat().st_size > 0
        assert summary["certificate"]["max_violation"] <= 1e-12
        for c in (0.1, 0.3, 0.5, 0.7, 0.9):
            assert certify_primitive_hellinger_bound(c, 201).max_violation <= 1e-12


def test_subadditivity(report):
    rng = np.random.default_rng(105)
    with report(5, "sub-additivity of TV and He^2 on 10^3 factor lists", 10):
        worst = math.inf
        for _ in range(1000):
            k = int(rng.integers(1, 5))
            sizes = [int(rng.integers(1, 9)) for _ in range(k)]
            while math.prod(sizes) > 10_000:
                sizes[int(np.argmax(sizes))] -= 1
            pairs = [(_random_dist(rng, s), _random_dist(rng, s)) for s in sizes]
            worst = min(worst, subadditivity_gap(TV, pairs), subadditivity_gap(HELLINGER2, pairs))
        assert worst >= -1e-12


def test_aux_lemma(report):
    with report(6, "auxiliary inequality on a 200x200 grid with equality cases", 1):
        assert certify_aux_lemma(200).max_violation <= 1e-12
        for c in np.linspace(0.01, 0.99, 50):
            assert aux_lemma_gap(float(c), 0.0) == pytest.approx(0.0, abs=1e-15)
        assert aux_lemma_gap(0.5, 0.5) == pytest.approx(0.0, abs=1e-15)


def test_hard_instance_fidelity(report):
    with report(7, "hard instance margins, closed-form He^2 and alpha budget for V <= 6", 5):
        for V, c, hfrac, n in itertools.product(range(2, 7), (0.2, 0.5, 0.8), (0.3, 0.9), (50, 500)):
            spec = CostSpec(c, hfrac * min(c, 1 - c))
            fam = build_family(V, n, spec)
            h = fam.effective_h
            alpha = hellinger_alpha(fam.effective_spec, fam.p)
            cubes = fam.bitstrings()
            joints = {b.bits: joint_for(fam, b) for b in cubes}
            for b in cubes:
                j = joints[b.bits]
                assert np.all(np.abs(j.eta_array[:-1] - c) >= h - 1e-15)
                assert j.eta_array[-1] == 0.0 and abs(0.0 - c) >= h
                assert bayes_for(fam, b) == bayes_classifier(j, c)
                for i in range(V - 1):
                    nb = b.flip(i)
                    closed = adjacent_hellinger_sq(fam, b, nb)
                    oracle = divergence(HELLINGER2, _flat(j), _flat(joints[nb.bits]))
                    assert abs(closed - oracle) <= 1e-12
                    assert closed <= alpha + 1e-15


def _flat(j):
    probs = []
    for m, e in zip(j.marginal.probs, j.eta):
        probs += [m * e, m * (1 - e)]
    return DiscreteDistribution(tuple(range(len(probs))), tuple(probs))


def test_regime_continuity(report):
    with report(8, "branch agreement at the margin threshold and the 4.62963e-4 example", 1):
        for c, V, n in itertools.islice(itertools.product((0.1, 0.3, 0.5, 0.8, 0.95), (2, 5), (10, 1000)), 20):
            hs = margin_threshold(c, V, n)
            big, small = large_margin_value(c, V, n, hs), small_margin_value(c, V, n)
            assert abs(big - small) <= 1e-12 * abs(small)
        value = cost_theorem_bound(CostSpec(0.5, 0.1), 2, 100).value
        assert abs(value - 4.62963e-4) <= 1e-9


def test_dominance(report):
    with report(9, "simulated max regret + 3 std_err dominates the bound on the 48-cell grid", 60):
        failures = []
        for c, V, n, scale, learner in itertools.product(
            (0.3, 0.5, 0.7), (2, 3), (50, 200), (0.5, 2.0), ("plugin", "erm")
        ):
            cmin = min(c, 1 - c)
            h = min(scale * margin_threshold(c, V, n), cmin)
            fam = build_family(V, n, CostSpec(c, h))
            rep = estimate_minimax_risk(fam, learner=learner, trials=200, seed=0)
            if not rep.dominates(3):
                failures.append((c, V, n, scale, learner, rep.max_mean_regret, rep.bound))
        assert not failures, failures


def test_bayes_brute_force(report):
    rng = np.random.default_rng(110)
    with report(10, "Bayes rule is optimal by enumeration and the regret identity holds", 5):
        for _ in range(1000):
            V = int(rng.integers(1, 5))
            m = rng.random(V)
            j = JointLabelDistribution(
                DiscreteDistribution(tuple(f"x{i}" for i in range(V)), tuple((m / m.sum()).tolist())),
                tuple(rng.random(V).tolist()),
            )
            c = float(rng.uniform(0.01, 0.99))
            bayes = bayes_classifier(j, c)
            base = generalization_error(bayes, j, c)
            for values in itertools.product((-1, 1), repeat=V):
                f = ClassifierTable(j.atoms, values)
                err = generalization_error(f, j, c)
                assert err >= base - 1e-12
                assert abs(regret(f, j, c) - (err - base)) <= 1e-12


def test_vc_utilities(report):
    with report(11, "VC dimension of thresholds, intervals and full classes", 5):
        for m in range(2, 9):
            assert vc_dimension(threshold_class(m)) == 1
            assert vc_dimension(interval_class(m)) == 2
            assert vc_dimension(full_class(tuple(f"z{i}" for i in range(m)))) == m


def test_determinism(report):
    argv = [sys.executable, "-m", "costbound", "simulate", "--V", "3", "--n", "100",
            "--c", "0.3", "--h", "0.1", "--trials", "50", "--seed", "7"]
    with report(12, "simulate output is byte-identical across runs and thread counts", 10):
        outs = [
            subprocess.run(argv + ["--threads", t], capture_output=True, check=True).stdout
            for t in ("1", "1", "4", "4")
        ]
        assert len(set(outs)) == 1 and outs[0]
