import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import costs, prob_vectors
from costbound.bounds import (
    THEOREM_K,
    CostSpec,
    Coupling,
    FiniteFamily,
    Regime,
    assouad_bound,
    assouad_coupling,
    assouad_practical_bound,
    aux_lemma_gap,
    certify_aux_lemma,
    cost_theorem_bound,
    discrete_rho,
    hamming_rho,
    hellinger_alpha,
    large_margin_value,
    lecam_coupled_bound,
    lecam_pair_bound,
    margin_threshold,
    small_margin_value,
    validate_rho,
)
from costbound.dist import BitString, DiscreteDistribution, hypercube, product
from costbound.divergence import TV, divergence, primitive
from costbound.errors import CapacityError, DomainError

D = DiscreteDistribution.from_probs


def pair_family(p, q, n=1):
    return FiniteFamily((("a", D(p)), ("b", D(q))), n)


def cube_family(d, dists, n=1):
    return FiniteFamily(tuple(zip(hypercube(d), dists)), n)


def test_cost_spec_validation():
    assert CostSpec(0.3, 0.3).cmin == 0.3
    assert CostSpec(0.3).cbar == 0.7
    for c, h in ((0.0, 0.0), (1.0, 0.0), (0.3, 0.31), (0.5, -0.1)):
        with pytest.raises(DomainError):
            CostSpec(c, h)


def test_family_validation_and_json():
    with pytest.raises(DomainError):
        FiniteFamily((("a", D([1, 0])), ("a", D([0, 1]))))
    with pytest.raises(DomainError):
        FiniteFamily((("a", D([1, 0])), ("b", D([0.2, 0.3, 0.5]))))
    fam = cube_family(2, [D([0.5, 0.5])] * 4, n=3)
    again = FiniteFamily.from_dict(json.loads(json.dumps(fam.to_dict())))
    assert again.params == fam.params and again.n == 3


def test_coupling_validation():
    with pytest.raises(DomainError):
        Coupling(((("a", "b"), 0.5),))
    with pytest.raises(DomainError):
        Coupling(((("a", "b"), 1.5), (("b", "a"), -0.5)))


def test_lecam_examples():
    same = pair_family([0.3, 0.7], [0.3, 0.7])
    assert lecam_pair_bound(same, discrete_rho, 0.3).value == pytest.approx(0.3, abs=1e-15)
    disjoint = pair_family([1, 0], [0, 1])
    rep = lecam_pair_bound(disjoint, discrete_rho, 0.3)
    assert rep.value == pytest.approx(0.0, abs=1e-15)
    assert rep.regime is Regime.LE_CAM_PAIR


@given(prob_vectors(size=2), prob_vectors(size=2), st.integers(1, 4))
@settings(max_examples=60, deadline=None)
def test_lecam_half_cost_recovers_tv_form(p, q, n):
    fam = pair_family(p, q, n)
    tv_n = divergence(TV, product([D(p)] * n), product([D(q)] * n))
    assert lecam_pair_bound(fam, discrete_rho, 0.5, mode="exact").value == pytest.approx(0.5 - 0.25 * tv_n, abs=1e-12)


@given(prob_vectors(size=2), prob_vectors(size=2), st.integers(1, 4), costs)
@settings(max_examples=80, deadline=None)
def test_lecam_exact_matches_explicit_products_and_dominates_bounded(p, q, n, c):
    fam = pair_family(p, q, n)
    Pn, Qn = product([D(p)] * n), product([D(q)] * n)
    oracle = max(min(c, 1 - c) - primitive(c, Pn, Qn, form=1), min(c, 1 - c) - primitive(c, Qn, Pn, form=1))
    exact = lecam_pair_bound(fam, discrete_rho, c, mode="exact")
    assert exact.value == pytest.approx(max(oracle, 0.0), abs=1e-12)
    bounded = lecam_pair_bound(fam, discrete_rho, c, mode="bounded")
    assert bounded.value <= exact.value + 1e-12
    assert bounded.value >= 0.0


def test_lecam_capacity_and_auto_mode():
    fam = pair_family([0.5, 0.5], [0.4, 0.6], n=40)
    with pytest.raises(CapacityError):
        lecam_pair_bound(fam, discrete_rho, 0.3, mode="exact")
    assert lecam_pair_bound(fam, discrete_rho, 0.3).inputs["mode"] == "bounded"


def test_rho_validation():
    validate_rho(np.array([[0.0, 1.0], [1.0, 0.0]]))
    with pytest.raises(DomainError):
        validate_rho(np.array([[0.0, 1.0], [2.0, 0.0]]))
    with pytest.raises(DomainError):
        validate_rho(np.array([[0.0, -1.0], [-1.0, 0.0]]))
    with pytest.raises(DomainError):
        validate_rho(np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float))
    fam = pair_family([1, 0], [0, 1])
    with pytest.raises(DomainError):
        lecam_pair_bound(fam, [[0.0, 1.0], [3.0, 0.0]], 0.3)


def test_coupled_bound_examples():
    fam = pair_family([0.2, 0.8], [0.6, 0.4], n=2)
    point = Coupling(((("a", "b"), 0.5), (("b", "a"), 0.5)))
    pair = lecam_pair_bound(fam, discrete_rho, 0.4, mode="exact")
    coupled = lecam_coupled_bound(fam, discrete_rho, point, 0.4, mode="exact")
    assert coupled.value <= pair.value + 1e-15
    same = pair_family([0.5, 0.5], [0.5, 0.5])
    uniform = Coupling(((("a", "b"), 0.5), (("b", "a"), 0.5)))
    assert lecam_coupled_bound(same, discrete_rho, uniform, 0.3).value == pytest.approx(0.3)
    lopsided = Coupling(((("a", "b"), 1.0),))
    with pytest.raises(DomainError):
        lecam_coupled_bound(fam, discrete_rho, lopsided, 0.4)


def test_assouad_examples():
    same = cube_family(5, [D([0.5, 0.5])] * 32)
    assert assouad_bound(same, 0.5).value == pytest.approx(2.5)
    disjoint = cube_family(1, [D([1, 0]), D([0, 1])])
    assert assouad_bound(disjoint, 0.3).value == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(DomainError):
        assouad_bound(FiniteFamily(((BitString((1, 1)), D([1, 0])), (BitString((-1, 1)), D([0, 1])))), 0.3)


@given(st.integers(1, 3), st.integers(1, 3), st.data())
@settings(max_examples=30, deadline=None)
def test_assouad_half_cost_and_coupling_consistency(d, n, data):
    dists = [D(data.draw(prob_vectors(size=2))) for _ in range(2**d)]
    fam = cube_family(d, dists, n)
    rep = assouad_bound(fam, 0.5, mode="exact")
    prods = {str(b): product([dist] * n) for b, dist in zip(fam.params, dists)}
    max_tv = max(divergence(TV, prods[str(b)], prods[str(b.flip(i))]) for b in fam.params for i in range(d))
    assert rep.value == pytest.approx(max(0.5 * d * (1 - 0.5 * max_tv), 0.0), abs=1e-12)
    # averaging along each coordinate never beats the worst neighbour
    total = sum(
        lecam_coupled_bound(fam, hamming_rho, assouad_coupling(fam.params, i), 0.5, mode="exact").value
        for i in range(d)
    )
    assert total >= rep.value - 1e-12


def test_assouad_practical_examples():
    assert assouad_practical_bound(3, 0.3, 0.0, 9).value == pytest.approx(0.9)
    rep = assouad_practical_bound(3, 0.3, 0.01, 9)
    assert rep.value == pytest.approx(0.63, abs=1e-15)
    assert rep.constants["floored"] is False
    floored = assouad_practical_bound(3, 0.3, 0.2, 9)
    assert floored.value == 0.0 and floored.constants["floored"] is True
    assert floored.constants["raw"] < 0


def test_cost_theorem_examples():
    rep = cost_theorem_bound(CostSpec(0.5, 0.1), 2, 100)
    assert rep.regime is Regime.LARGE_MARGIN
    assert rep.value == pytest.approx(0.25 / (54 * 100 * 0.1), abs=1e-15)
    assert rep.value == pytest.approx(4.62963e-4, abs=1e-9)
    assert rep.constants["h_star"] == pytest.approx(math.sqrt(0.5 / 900), rel=1e-15)
    small = cost_theorem_bound(CostSpec(0.5, 0.0), 2, 100)
    assert small.regime is Regime.SMALL_MARGIN
    assert small.value == pytest.approx(0.5**1.5 / 18 * 0.1, rel=1e-14)
    assert rep.constants["K"] == THEOREM_K == 1 / 54
    assert list(json.loads(rep.to_json())) == ["value", "regime", "constants", "inputs"]
    with pytest.raises(DomainError):
        cost_theorem_bound(CostSpec(0.5, 0.1), 3, 2)
    with pytest.raises(DomainError):
        cost_theorem_bound(CostSpec(0.5, 0.1), 1, 100)


def test_cost_theorem_vanishes_with_cost():
    values = [cost_theorem_bound(CostSpec(c, 0.0), 4, 100).value for c in (1e-2, 1e-4, 1e-6)]
    assert values[0] > values[1] > values[2] and values[2] < 1e-9


@pytest.mark.parametrize("c", [0.1, 0.3, 0.5, 0.8])
@pytest.mark.parametrize("V", [2, 5, 20])
def test_branch_continuity(c, V):
    for n in (V, 10 * V, 1000):
        hs = margin_threshold(c, V, n)
        assert large_margin_value(c, V, n, hs) == pytest.approx(small_margin_value(c, V, n), rel=1e-12)


def test_monotone_in_n_and_h():
    for c, V in itertools.product((0.2, 0.5, 0.9), (2, 4)):
        ns = np.unique(np.geomspace(V, 5000, 20).astype(int))
        hs = np.linspace(0.0, min(c, 1 - c), 20)
        grid = np.array([[cost_theorem_bound(CostSpec(c, h), V, int(n)).value for h in hs] for n in ns])
        assert np.all(np.diff(grid, axis=0) <= 1e-15)
        assert np.all(np.diff(grid, axis=1) <= 1e-15)


@given(costs, st.floats(0, 1), st.integers(2, 30), st.integers(0, 1000))
def test_cost_symmetry(c, frac, V, extra):
    n = V + extra
    h = frac * min(c, 1 - c)
    a = cost_theorem_bound(CostSpec(c, h), V, n).value
    b = cost_theorem_bound(CostSpec(1 - c, h), V, n).value
    assert a == pytest.approx(b, rel=1e-12)


def test_aux_lemma_examples_and_grid():
    assert aux_lemma_gap(0.3, 0.0) == 0.0
    assert aux_lemma_gap(0.5, 0.5) == pytest.approx(0.0, abs=1e-15)
    assert aux_lemma_gap(0.3, 0.1) > 0
    with pytest.raises(DomainError):
        aux_lemma_gap(0.3, 0.31)
    assert certify_aux_lemma(200).max_violation <= 1e-12


@given(costs, st.floats(0, 1))
def test_aux_lemma_nonnegative(c, frac):
    assert aux_lemma_gap(c, frac * min(c, 1 - c)) >= -1e-12


def test_hellinger_alpha_examples():
    assert hellinger_alpha(CostSpec(0.5, 0.0), 0.3) == 0.0
    assert hellinger_alpha(CostSpec(0.5, 0.1), 0.3) == pytest.approx(0.024)
    with pytest.raises(DomainError):
        hellinger_alpha(CostSpec(0.5, 0.1), 1.5)
