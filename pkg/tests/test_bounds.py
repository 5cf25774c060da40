import math

import numpy as np
import pytest

from fairmatch import (GFM, IFM, VOM, clairvoyant_oracle, make_example1,
                       make_example1_solution, make_example_worst,
                       make_instance, minimize_sampab_bound,
                       minimize_sampb_bound, minimizer_set, sampab_bound,
                       sampab_bound_closed, sampb_bound)
from fairmatch.bounds import C1, C2, minimizer_set_three_piece

E1 = math.exp(-1)


def test_minimizer_set_small_tau_is_singleton():
    assert minimizer_set(0.5) == (0.5,)


def test_minimizer_set_two_pieces():
    pieces = minimizer_set(0.7)
    assert len(pieces) == 2
    assert pieces[0] == pytest.approx(C1, abs=1e-15)
    assert pieces[1] == pytest.approx(0.7 - C1, abs=1e-15)


def test_minimizer_set_tau_one():
    pieces = minimizer_set(1.0)
    assert len(pieces) == 28
    assert pieces[0] == pytest.approx(C1, abs=1e-15)
    assert pieces[1] == pytest.approx(math.exp(-1) - math.exp(-2), abs=1e-15)
    assert all(b <= a for a, b in zip(pieces, pieces[1:]))
    assert all(p > 0 for p in pieces)


def test_minimizer_set_sums_to_tau():
    rng = np.random.default_rng(0)
    for tau in rng.uniform(0.01, 1.0, 50):
        pieces = minimizer_set(float(tau))
        assert sum(pieces) == pytest.approx(tau, abs=1e-12)
        assert all(p <= C1 + 1e-15 for p in pieces)


def test_three_piece_set():
    assert minimizer_set_three_piece(0.5) == (0.5,)
    two = minimizer_set_three_piece(0.7)
    assert two[0] == pytest.approx(C1, abs=1e-15)
    assert sum(two) == pytest.approx(0.7, abs=1e-12)
    three = minimizer_set_three_piece(0.95)
    assert len(three) == 3
    assert three[0] == pytest.approx(C1, abs=1e-15)
    assert three[1] == pytest.approx(math.exp(-1) - math.exp(-2), abs=1e-15)
    assert sum(three) == pytest.approx(0.95, abs=1e-12)


def test_sampb_bound_headline_value():
    assert sampb_bound(1.0) == pytest.approx(0.725430862868746, abs=1e-12)
    assert abs(sampb_bound(1.0) - 0.725) <= 1e-3


def test_sampb_bound_times_tau_is_increasing():
    taus = np.linspace(0.05, 1.0, 40)
    vals = [sampb_bound(float(t)) * t for t in taus]
    for a, b in zip(vals, vals[1:]):
        assert b > a


def test_minimize_sampb_bound_attained_at_one():
    ev = minimize_sampb_bound()
    assert ev.tau == 1.0
    assert ev.value == pytest.approx(0.725430862868746, abs=1e-12)
    assert ev.kind == "samp-b-min"


def test_sampab_quadrature_agrees_with_closed_form():
    rng = np.random.default_rng(8)
    for _ in range(40):
        x = float(rng.uniform(0.02, 1.0))
        kappa = float(rng.uniform(0.0, 1.0))
        assert sampab_bound(x, kappa) == pytest.approx(
            float(sampab_bound_closed(x, kappa)), abs=1e-9)


def test_sampab_bound_at_the_tight_point():
    assert sampab_bound(C1, 1.0) / C1 == pytest.approx(0.71945943785, abs=1e-9)


def test_sampab_ratio_approaches_one_for_small_mass():
    ratio = sampab_bound(1e-3, 1.0) / 1e-3
    assert ratio == pytest.approx(1.0, abs=2e-3)


def test_minimize_sampab_bound_400_grid():
    ev = minimize_sampab_bound(grid=400)
    assert ev.value == pytest.approx(0.7194599501886101, abs=1e-10)
    assert ev.kappa == pytest.approx(1.0, abs=1e-9)
    assert ev.x_star == pytest.approx(C1, abs=0.01)
    assert ev.kind == "samp-ab-min"


def test_make_example1_structure():
    inst = make_example1(3)
    assert inst.n_offline == 7          # n(n-1) light agents plus the hub
    assert inst.n_online == 3 and inst.horizon == 3
    hub = inst.n_offline - 1
    assert len(inst.neighbors_of_offline[hub]) == 3
    for i in range(hub):
        assert len(inst.neighbors_of_offline[i]) == 1
    assert inst.weights[hub] == 1.0
    for i in range(hub):
        assert inst.weights[i] == pytest.approx((1 / 3) ** 3, abs=1e-15)


def test_make_example1_pinned_solution_value():
    inst = make_example1(10)
    sol = make_example1_solution(inst)
    assert sol.objective_value == pytest.approx(1 + 0.1 ** 2 - 0.1 ** 3,
                                                abs=1e-12)
    assert sol.status == "pinned"
    for v in sol.x.values():
        assert v == pytest.approx(0.1, abs=1e-15)


def test_make_example_worst_structure():
    inst = make_example_worst(4)
    assert inst.n_offline == inst.n_online == inst.horizon == 4
    degrees = [len(inst.neighbors_of_online[j]) for j in range(4)]
    assert degrees == [4, 1, 1, 1]
    assert inst.neighbors_of_offline[0] == (0,)


def test_clairvoyant_oracle_frozen_values(path3, k22):
    assert clairvoyant_oracle(path3, IFM) == pytest.approx(0.75, abs=1e-12)
    assert clairvoyant_oracle(k22, IFM) == pytest.approx(1.0, abs=1e-12)
    assert clairvoyant_oracle(make_example_worst(3), IFM) == pytest.approx(
        13 / 27, abs=1e-12)


def test_clairvoyant_oracle_vom_and_gfm():
    lone = make_instance(1, 1, [(0, 0)], weights=(0.7,))
    assert clairvoyant_oracle(lone, VOM) == pytest.approx(0.7, abs=1e-12)
    grouped = make_instance(2, 2, [(0, 0), (0, 1), (1, 0), (1, 1)],
                            groups=[(0,), (1,)])
    assert clairvoyant_oracle(grouped, GFM) == pytest.approx(1.0, abs=1e-12)
    assert clairvoyant_oracle(grouped, GFM) == pytest.approx(
        clairvoyant_oracle(grouped, IFM), abs=1e-12)


def test_clairvoyant_oracle_rejects_large_instances():
    big = make_instance(2, 12, [(0, 0), (1, 1)], rates=(1.0,) * 12, horizon=12)
    with pytest.raises(ValueError):
        clairvoyant_oracle(big, IFM)
