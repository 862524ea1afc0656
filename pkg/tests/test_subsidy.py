"""Tests for capacity subsidies, scenario prices, and the equilibrium
verification of the subsidized robust plan."""

import dataclasses

import numpy as np
import pytest
from numpy.testing import assert_allclose

from robust_peakload.geometry import box, hull_to_inequalities, simplex
from robust_peakload.market import AffineElastic, Fixed, MarketInstance, Producer
from robust_peakload.robust import lifted_vertices, solve_robust_cp_elastic
from robust_peakload.subsidy import (
    NotEquilibrium,
    build_price_functions,
    compute_subsidies,
    kkt_residuals,
    solve_fixed_capacity_welfare,
    verify_subsidized_equilibrium,
)

VALUE_TOL = 1e-7
KKT_TOL = 1e-7
PROFIT_TOL = 1e-6
N_RANDOM_TRIALS = 12

KKT_KEYS = (
    "stationarity_production",
    "stationarity_capacity",
    "feasibility_nonneg",
    "feasibility_capacity",
    "dual_nonneg_mu",
    "dual_nonneg_phi",
    "complementarity_capacity",
    "complementarity_nonneg",
)


def hull_example():
    U = hull_to_inequalities([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [0.75, 0.75]])
    return MarketInstance(
        producers=[Producer(c_inv=0.2, c_var=0.0, a=4.0),
                   Producer(c_inv=0.2, c_var=0.0, a=4.0)],
        demand=AffineElastic(np.array([5.0]), np.array([1.0])),
        T=1, uncertainty=U)


def random_elastic_instance(rng):
    n = int(rng.integers(2, 4))
    T = int(rng.integers(1, 3))
    U = box(n) if rng.integers(0, 2) == 0 else simplex(n)
    producers = [Producer(c_inv=float(rng.uniform(0.05, 0.4)),
                          c_var=float(rng.uniform(0.0, 0.8)),
                          a=float(rng.uniform(0.0, 1.2)))
                 for _ in range(n)]
    alpha = rng.uniform(1.5, 4.0, size=T)
    beta = rng.uniform(0.5, 2.0, size=T)
    return MarketInstance(producers=producers,
                          demand=AffineElastic(alpha, beta),
                          T=T, uncertainty=U)


class TestFixedCapacityWelfare:
    def test_peak_scenario(self):
        inst = hull_example()
        res = solve_fixed_capacity_welfare(inst, np.array([0.9, 0.9]),
                                           np.array([[0.75], [0.75]]))
        assert_allclose(res.x, [[0.9], [0.9]], atol=VALUE_TOL)
        assert_allclose(res.pi, [3.2], atol=VALUE_TOL)
        assert_allclose(res.value, 1.62, atol=VALUE_TOL)

    def test_zero_scenario(self):
        inst = hull_example()
        res = solve_fixed_capacity_welfare(inst, np.array([0.9, 0.9]),
                                           np.zeros((2, 1)))
        assert_allclose(res.x, [[0.9], [0.9]], atol=VALUE_TOL)
        assert_allclose(res.pi, [3.2], atol=VALUE_TOL)
        assert_allclose(res.value, 7.02, atol=VALUE_TOL)

    def test_asymmetric_vertex(self):
        inst = hull_example()
        res = solve_fixed_capacity_welfare(inst, np.array([0.9, 0.9]),
                                           np.array([[1.0], [0.0]]))
        assert_allclose(res.x, [[0.1], [0.9]], atol=VALUE_TOL)
        assert_allclose(res.pi, [4.0], atol=VALUE_TOL)
        assert_allclose(res.value, 3.74, atol=VALUE_TOL)

    def test_kkt_residuals_each_condition(self):
        inst = hull_example()
        for u in lifted_vertices(inst):
            res = solve_fixed_capacity_welfare(inst, np.array([0.9, 0.9]), u)
            resid = kkt_residuals(inst, np.array([0.9, 0.9]), res)
            assert set(resid) == set(KKT_KEYS)
            for key in KKT_KEYS:
                assert resid[key] <= KKT_TOL, key

    def test_random_instances_satisfy_kkt(self):
        rng = np.random.default_rng(11)
        for trial in range(N_RANDOM_TRIALS):
            inst = random_elastic_instance(rng)
            solution, _, _ = solve_robust_cp_elastic(inst)
            y_star = np.maximum(solution.capacities, 0.0)
            verts = lifted_vertices(inst)
            u = verts[int(rng.integers(0, len(verts)))]
            res = solve_fixed_capacity_welfare(inst, y_star, u)
            resid = kkt_residuals(inst, y_star, res)
            for key in KKT_KEYS:
                assert resid[key] <= KKT_TOL, f"trial {trial}: {key}"

    def test_scenario_outside_set_rejected(self):
        inst = hull_example()
        with pytest.raises(ValueError):
            solve_fixed_capacity_welfare(inst, np.array([0.9, 0.9]),
                                         np.array([[1.0], [1.0]]))

    def test_input_validation(self):
        inst = hull_example()
        with pytest.raises(ValueError):
            solve_fixed_capacity_welfare(inst, np.array([0.9]), np.zeros((2, 1)))
        with pytest.raises(ValueError):
            solve_fixed_capacity_welfare(inst, np.array([-0.5, 0.9]),
                                         np.zeros((2, 1)))
        fixed = MarketInstance(
            producers=inst.producers, demand=Fixed(np.array([1.0])),
            T=1, uncertainty=inst.uncertainty)
        with pytest.raises(ValueError):
            solve_fixed_capacity_welfare(fixed, np.array([0.9, 0.9]),
                                         np.zeros((2, 1)))


class TestComputeSubsidies:
    def test_worked_example(self):
        bundle = compute_subsidies(hull_example(), audit_samples=32)
        assert_allclose(bundle.eta, [0.2, 0.2], atol=VALUE_TOL)
        assert_allclose(bundle.y_star, [0.9, 0.9], atol=1e-6)
        assert bundle.verification["is_equilibrium"]
        assert_allclose(bundle.verification["worst_case_profits"], [0.0, 0.0],
                        atol=PROFIT_TOL)
        assert_allclose(bundle.verification["max_deviation_gain"], [0.0, 0.0],
                        atol=PROFIT_TOL)
        assert not bundle.audit["flagged"]
        values = sorted(res.value for res in bundle.scenario_results)
        assert_allclose(values, [1.62, 3.74, 3.74, 7.02], atol=1e-6)

    def test_no_uncertainty_reduces_to_nominal_zero_profit(self):
        # Interior planner optimum prices at marginal plus investment cost,
        # so the single-scenario subsidy formula collapses to zero.
        inst = MarketInstance(
            producers=[Producer(c_inv=0.5, c_var=1.0, a=0.0),
                       Producer(c_inv=0.5, c_var=2.0, a=0.0)],
            demand=AffineElastic(np.array([4.0]), np.array([1.0])),
            T=1, uncertainty=box(2))
        bundle = compute_subsidies(inst, audit_samples=8)
        assert_allclose(bundle.eta, [0.0, 0.0], atol=PROFIT_TOL)
        assert bundle.verification["is_equilibrium"]
        res = bundle.scenario_results[0]
        assert_allclose(res.pi, [1.5], atol=1e-6)

    def test_idle_producer_gets_zero(self):
        inst = MarketInstance(
            producers=[Producer(c_inv=0.1, c_var=0.5, a=0.0),
                       Producer(c_inv=2.0, c_var=3.5, a=0.0)],
            demand=AffineElastic(np.array([3.0]), np.array([1.0])),
            T=1, uncertainty=box(2))
        bundle = compute_subsidies(inst, audit_samples=0)
        assert bundle.y_star[1] == pytest.approx(0.0, abs=1e-9)
        assert bundle.eta[1] == 0.0
        assert bundle.verification["is_equilibrium"]

    def test_no_capacity_gives_trivial_bundle(self):
        inst = MarketInstance(
            producers=[Producer(c_inv=0.5, c_var=1.0, a=0.0),
                       Producer(c_inv=0.5, c_var=1.0, a=0.0)],
            demand=AffineElastic(np.array([0.5]), np.array([1.0])),
            T=1, uncertainty=box(2))
        bundle = compute_subsidies(inst, audit_samples=0)
        assert_allclose(bundle.y_star, [0.0, 0.0], atol=1e-9)
        assert_allclose(bundle.eta, [0.0, 0.0], atol=1e-12)
        assert bundle.verification["is_equilibrium"]
        assert len(bundle.scenario_results) == len(lifted_vertices(inst))

    def test_tie_periods_contribute_nothing(self):
        # At the (1, 0) vertex producer 1 runs at a price exactly equal to
        # its cost, so dropping or keeping the tie period leaves the subsidy
        # formula's inner value at zero.
        inst = hull_example()
        res = solve_fixed_capacity_welfare(inst, np.array([0.9, 0.9]),
                                           np.array([[1.0], [0.0]]))
        margin = res.pi[0] - (0.0 + 4.0 * 1.0)
        assert margin == pytest.approx(0.0, abs=1e-9)
        with_tie = (4.0 * 1.0 - res.pi[0]) if res.x[0, 0] > 1e-9 else 0.0
        without_tie = 0.0
        assert with_tie == pytest.approx(without_tie, abs=1e-9)

    def test_worst_case_welfare_matches_planner(self):
        inst = hull_example()
        _, C, worst = solve_robust_cp_elastic(inst)
        bundle = compute_subsidies(inst, audit_samples=0)
        res = solve_fixed_capacity_welfare(inst, bundle.y_star, worst)
        assert_allclose(res.value, C, atol=1e-6)

    def test_random_instances_reach_equilibrium(self):
        rng = np.random.default_rng(12)
        for trial in range(N_RANDOM_TRIALS):
            inst = random_elastic_instance(rng)
            bundle = compute_subsidies(inst, audit_samples=8)
            assert bundle.verification["is_equilibrium"], f"trial {trial}"
            record = verify_subsidized_equilibrium(inst, bundle)
            active = bundle.y_star > 1e-9
            assert_allclose(record["worst_case_profits"][active], 0.0,
                            atol=PROFIT_TOL, err_msg=f"trial {trial}")
            _, C, worst = solve_robust_cp_elastic(inst)
            res = solve_fixed_capacity_welfare(inst, bundle.y_star, worst)
            assert_allclose(res.value, C, atol=1e-6, err_msg=f"trial {trial}")

    def test_requires_elastic_demand(self):
        inst = hull_example()
        fixed = MarketInstance(producers=inst.producers,
                               demand=Fixed(np.array([1.0])),
                               T=1, uncertainty=inst.uncertainty)
        with pytest.raises(ValueError):
            compute_subsidies(fixed)


class TestVerification:
    def test_zero_subsidy_fails_zero_profit_check(self):
        inst = hull_example()
        bundle = compute_subsidies(inst, audit_samples=0)
        stripped = dataclasses.replace(bundle, eta=np.zeros(2))
        with pytest.raises(NotEquilibrium) as info:
            verify_subsidized_equilibrium(inst, stripped)
        err = info.value
        assert err.deviation is None
        assert err.producer in (0, 1)
        # Unsubsidized worst-case profit is the lost investment cost.
        record, = [bundle.verification]
        assert_allclose(record["worst_case_profits"], [0.0, 0.0],
                        atol=PROFIT_TOL)

    def test_tampered_production_fails_structure_check(self):
        inst = hull_example()
        bundle = compute_subsidies(inst, audit_samples=0)
        tampered = [dataclasses.replace(res) for res in bundle.scenario_results]
        idle = np.argmin([res.u.sum() for res in tampered])
        tampered[idle] = dataclasses.replace(tampered[idle],
                                             x=np.zeros_like(tampered[idle].x))
        broken = dataclasses.replace(bundle, scenario_results=tampered)
        with pytest.raises(NotEquilibrium) as info:
            verify_subsidized_equilibrium(inst, broken)
        assert info.value.scenario == int(idle)
        assert info.value.deviation is None

    def test_grid_recorded(self):
        inst = hull_example()
        bundle = compute_subsidies(inst, audit_samples=0, grid=11)
        assert bundle.verification["grid"] == 11
        record = verify_subsidized_equilibrium(inst, bundle, grid=51)
        assert record["grid"] == 51

    def test_audit_disabled(self):
        bundle = compute_subsidies(hull_example(), audit_samples=0)
        assert bundle.audit["samples"] == 0
        assert not bundle.audit["flagged"]


class TestPriceFunctions:
    def test_table_covers_all_vertices(self):
        inst = hull_example()
        bundle = compute_subsidies(inst, audit_samples=0)
        table = build_price_functions(bundle)
        assert len(table) == 4
        prices = sorted(float(v[0]) for v in table.values())
        assert_allclose(prices, [3.2, 3.2, 4.0, 4.0], atol=VALUE_TOL)

    def test_zero_scenario_price(self):
        inst = hull_example()
        bundle = compute_subsidies(inst, audit_samples=0)
        table = build_price_functions(bundle)
        assert_allclose(table[(0.0, 0.0)], [3.2], atol=VALUE_TOL)

    def test_single_producer_matches_nominal(self):
        from robust_peakload.market import solve_nominal_elastic
        inst = MarketInstance(
            producers=[Producer(c_inv=0.3, c_var=1.0, a=0.0)],
            demand=AffineElastic(np.array([4.0]), np.array([1.0])),
            T=1, uncertainty=box(1))
        bundle = compute_subsidies(inst, audit_samples=0)
        table = build_price_functions(bundle)
        nominal = solve_nominal_elastic(inst)
        for pi in table.values():
            assert_allclose(pi, nominal.prices, atol=1e-6)
