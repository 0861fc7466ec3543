import numpy as np
import pytest

from conftest import make_degenerate_scenario, make_miniature_scenario
from mgdispatch.dispatch import (DecisionVector, ESSParams, MTUnit, Scenario,
                                 TOUSchedule, build_equivalent_load,
                                 check_constraints, eval_cost, eval_emissions,
                                 eval_satisfaction, evaluate,
                                 min_required_reserve, repair,
                                 reserve_chance_satisfied, soc_trajectory)
from mgdispatch.probmodel import LoadParams, ProbSeq, PVParams, WindParams
from mgdispatch.sequences import expectation


def one_unit_scenario(zeta=1.0, psi=0.1, kappa=2.0, sigma=0.0, horizon=1,
                      ess_reserve_price=0.02):
    unit = MTUnit(name="MT1", p_min=1.0, p_max=30.0, fuel_zeta=zeta,
                  fuel_psi=psi, startstop_cost_kappa=kappa,
                  reserve_price_sigma=sigma,
                  emission_coeffs=(0.619, 184.0, 0.17, 0.000928))
    ess = ESSParams(cap_min=5.0, cap_max=40.0, cap_initial=20.0,
                    p_ch_max=10.0, p_dc_max=10.0, eff_ch=0.9, eff_dc=0.9,
                    reserve_price=ess_reserve_price)
    dead_wind = WindParams(2.0, 0.2, 3.0, 12.0, 25.0, 40.0)
    return Scenario(
        name="one-unit", horizon=horizon, dt=1.0, units=(unit,), ess=ess,
        tou=TOUSchedule(purchase=np.full(horizon, 0.5),
                        sale=np.full(horizon, 0.4)),
        wind=(dead_wind,) * horizon,
        pv=(PVParams(2.0, 2.0, 0.0),) * horizon,
        load=(LoadParams(25.0, 0.0),) * horizon,
        confidence_alpha=0.9, step_q=2.5)


def random_dv(rng, sc):
    M, T = sc.n_units, sc.horizon
    p_max = sc.unit_array("p_max").max()
    return DecisionVector(
        u=(rng.random((M, T)) < 0.5).astype(float),
        p_mt=rng.uniform(-5, p_max + 10, (M, T)),
        r_mt=rng.uniform(-5, 30, (M, T)),
        p_ch=rng.uniform(-5, sc.ess.p_ch_max + 10, T),
        p_dc=rng.uniform(-5, sc.ess.p_dc_max + 10, T),
        p_res=rng.uniform(-5, sc.ess.p_dc_max + 10, T))


class TestCost:
    def test_all_zero_schedule_costs_nothing(self):
        sc = one_unit_scenario()
        assert eval_cost(DecisionVector.zeros(1, 1), sc) == 0.0

    def test_single_unit_hand_arithmetic(self):
        # fresh start: kappa + (zeta + psi * 10) = 2 + 1 + 1 = 4
        sc = one_unit_scenario()
        dv = DecisionVector(u=np.array([[1.0]]), p_mt=np.array([[10.0]]),
                            r_mt=np.zeros((1, 1)), p_ch=np.zeros(1),
                            p_dc=np.zeros(1), p_res=np.zeros(1))
        assert eval_cost(dv, sc) == pytest.approx(4.0, abs=1e-12)

    def test_no_restart_cost_when_initially_on(self):
        unit = MTUnit(name="MT1", p_min=1.0, p_max=30.0, fuel_zeta=1.0,
                      fuel_psi=0.1, startstop_cost_kappa=2.0,
                      reserve_price_sigma=0.0,
                      emission_coeffs=(0.619, 184.0, 0.17, 0.000928),
                      initial_on=True)
        sc = one_unit_scenario()
        sc = Scenario(name="warm", horizon=1, dt=1.0, units=(unit,),
                      ess=sc.ess, tou=sc.tou, wind=sc.wind, pv=sc.pv,
                      load=sc.load, confidence_alpha=0.9, step_q=2.5)
        u = np.array([[1.0]])
        from mgdispatch.dispatch import derive_startups
        dv = DecisionVector(u=u, p_mt=np.array([[10.0]]),
                            r_mt=np.zeros((1, 1)), p_ch=np.zeros(1),
                            p_dc=np.zeros(1), p_res=np.zeros(1),
                            s=derive_startups(u, np.array([1.0])))
        assert eval_cost(dv, sc) == pytest.approx(2.0, abs=1e-12)

    def test_ess_reserve_price(self):
        # 10 kW held for 24 periods at 0.02 $/kW
        sc = one_unit_scenario(horizon=24)
        dv = DecisionVector.zeros(1, 24)
        dv.p_res[:] = 10.0
        assert eval_cost(dv, sc) == pytest.approx(4.8, abs=1e-12)

    def test_exchange_settlement_sign(self):
        # charging buys at purchase price; discharging earns the sale price
        sc = one_unit_scenario()
        dv = DecisionVector.zeros(1, 1)
        dv.p_ch[:] = 10.0
        assert eval_cost(dv, sc) == pytest.approx(5.0)
        dv.p_ch[:] = 0.0
        dv.p_dc[:] = 10.0
        assert eval_cost(dv, sc) == pytest.approx(-4.0)


class TestEmissions:
    def test_zero(self):
        sc = one_unit_scenario()
        assert eval_emissions(DecisionVector.zeros(1, 1), sc) == 0.0

    def test_table_row_hand_sum(self):
        # (0.619 + 184 + 0.17 + 0.000928) g/kWh * 10 kWh = 1.8479 kg
        sc = one_unit_scenario()
        dv = DecisionVector(u=np.array([[1.0]]), p_mt=np.array([[10.0]]),
                            r_mt=np.zeros((1, 1)), p_ch=np.zeros(1),
                            p_dc=np.zeros(1), p_res=np.zeros(1))
        assert eval_emissions(dv, sc) == pytest.approx(1.84789928, abs=1e-9)

    def test_linearity(self):
        sc = make_miniature_scenario()
        rng = np.random.default_rng(0)
        dv = random_dv(rng, sc)
        dv2 = dv.copy()
        dv2.p_mt = 2.0 * dv2.p_mt
        assert eval_emissions(dv2, sc) == pytest.approx(
            2.0 * eval_emissions(dv, sc), rel=1e-12)


class TestSatisfaction:
    def test_exact_service_is_100(self):
        sc = one_unit_scenario()
        dv = DecisionVector(u=np.array([[1.0]]), p_mt=np.array([[25.0]]),
                            r_mt=np.zeros((1, 1)), p_ch=np.zeros(1),
                            p_dc=np.zeros(1), p_res=np.zeros(1))
        assert eval_satisfaction(dv, sc) == pytest.approx(100.0)

    def test_renewables_covering_half(self):
        sc = make_miniature_scenario()
        # forecast load is 60 kWh total and renewables are zero, so serving
        # 30 kWh from the unit gives 50%
        dv = DecisionVector(u=np.ones((1, 2)), p_mt=np.array([[10.0, 20.0]]),
                            r_mt=np.zeros((1, 2)), p_ch=np.zeros(2),
                            p_dc=np.zeros(2), p_res=np.zeros(2))
        assert eval_satisfaction(dv, sc) == pytest.approx(50.0)

    def test_independent_recomputation(self):
        sc = make_miniature_scenario()
        rng = np.random.default_rng(8)
        for _ in range(10):
            dv = random_dv(rng, sc)
            supplied = 0.0
            for t in range(sc.horizon):
                supplied += (sum(dv.p_mt[n, t] for n in range(sc.n_units))
                             + sc.forecast_pv[t] + sc.forecast_wt[t]
                             + dv.p_dc[t] - dv.p_ch[t])
            expect = min(100.0, 100.0 * supplied / sum(sc.forecast_load))
            assert eval_satisfaction(dv, sc) == pytest.approx(expect,
                                                              rel=1e-12)

    def test_capped_at_100(self):
        sc = one_unit_scenario()
        dv = DecisionVector(u=np.array([[1.0]]), p_mt=np.array([[30.0]]),
                            r_mt=np.zeros((1, 1)), p_ch=np.zeros(1),
                            p_dc=np.zeros(1), p_res=np.zeros(1))
        assert eval_satisfaction(dv, sc) == 100.0

    def test_zero_load_rejected(self):
        sc = one_unit_scenario()
        sc.forecast_load = np.zeros(1)
        with pytest.raises(ValueError):
            eval_satisfaction(DecisionVector.zeros(1, 1), sc)

    def test_deterministic(self):
        sc = make_miniature_scenario()
        dv = random_dv(np.random.default_rng(4), sc)
        assert evaluate(dv, sc) == evaluate(dv, sc)


class TestConstraints:
    def test_hand_built_feasible_schedule(self, degenerate_scenario):
        sc = degenerate_scenario
        el = build_equivalent_load(sc)
        # deterministic load of 25 kW on the grid: no reserve required
        dv = DecisionVector(u=np.ones((1, 2)), p_mt=np.full((1, 2), 25.0),
                            r_mt=np.zeros((1, 2)), p_ch=np.zeros(2),
                            p_dc=np.zeros(2), p_res=np.zeros(2))
        rep = check_constraints(dv, sc, el)
        assert rep.violation_total() == pytest.approx(0.0, abs=1e-9)
        assert np.allclose(rep.balance_mismatch, 0.0, atol=1e-9)
        assert rep.feasible()
        assert bool(rep.chance_ok.all())

    def test_output_above_capacity(self, degenerate_scenario):
        sc = degenerate_scenario
        el = build_equivalent_load(sc)
        dv = DecisionVector(u=np.ones((1, 2)),
                            p_mt=np.array([[61.0, 25.0]]),
                            r_mt=np.zeros((1, 2)), p_ch=np.zeros(2),
                            p_dc=np.zeros(2), p_res=np.zeros(2))
        rep = check_constraints(dv, sc, el)
        assert rep.mt_box[0, 0] == pytest.approx(1.0, abs=1e-12)
        assert rep.mt_box[0, 1] == 0.0

    def test_soc_matches_step_simulation(self):
        sc = make_miniature_scenario()
        rng = np.random.default_rng(12)
        for _ in range(20):
            dv = random_dv(rng, sc)
            dv.p_ch = np.abs(dv.p_ch)
            dv.p_dc = np.abs(dv.p_dc)
            soc = soc_trajectory(dv, sc)
            level = sc.ess.cap_initial
            for t in range(sc.horizon):
                level = level + 0.9 * dv.p_ch[t] - dv.p_dc[t] / 0.9
                assert soc[t + 1] == pytest.approx(level, abs=1e-9)

    def test_energy_conservation_identity(self):
        sc = make_miniature_scenario()
        dv = random_dv(np.random.default_rng(3), sc)
        soc = soc_trajectory(dv, sc)
        delta = sum(0.9 * dv.p_ch[t] - dv.p_dc[t] / 0.9
                    for t in range(sc.horizon))
        assert soc[-1] - soc[0] == pytest.approx(delta, abs=1e-9)

    def test_controllable_load_raises_balance_target(self, degenerate_scenario):
        sc = degenerate_scenario
        sc.controllable_load = np.array([5.0, 0.0])
        el = build_equivalent_load(sc)
        dv = DecisionVector(u=np.ones((1, 2)), p_mt=np.full((1, 2), 25.0),
                            r_mt=np.zeros((1, 2)), p_ch=np.zeros(2),
                            p_dc=np.zeros(2), p_res=np.zeros(2))
        rep = check_constraints(dv, sc, el)
        assert rep.balance_mismatch[0] == pytest.approx(-5.0)
        assert rep.balance_mismatch[1] == pytest.approx(0.0)


def random_el_seq(rng, max_len=40):
    probs = rng.dirichlet(np.ones(rng.integers(2, max_len)))
    return ProbSeq(step_q=float(rng.uniform(0.5, 4.0)), probs=probs)


def enumerate_coverage(reserve, el_seq, e_el):
    # brute-force 0/1 indicator sum over every sequence index
    total = 0.0
    for u, prob in enumerate(el_seq.probs):
        if reserve >= u * el_seq.step_q - e_el:
            total += prob
    return total


class TestChanceConstraint:
    def test_point_mass_needs_no_reserve(self):
        el = ProbSeq(step_q=2.5, probs=np.array([0, 0, 0, 1.0]))
        assert reserve_chance_satisfied(0.0, el, 7.5, 0.9)

    def test_full_confidence_needs_worst_case(self):
        el = ProbSeq(step_q=2.5, probs=np.array([0.5, 0, 0, 0.5]))
        e_el = expectation(el)
        need = 3 * 2.5 - e_el
        assert reserve_chance_satisfied(need, el, e_el, 0.999999)
        assert not reserve_chance_satisfied(need - 0.1, el, e_el, 0.999999)

    def test_agrees_with_enumeration(self):
        rng = np.random.default_rng(71)
        for _ in range(50):
            el = random_el_seq(rng)
            e_el = float(rng.uniform(0, len(el) * el.step_q))
            reserve = float(rng.uniform(0, len(el) * el.step_q))
            alpha = float(rng.uniform(0.55, 0.99))
            expect = enumerate_coverage(reserve, el, e_el) >= alpha
            assert reserve_chance_satisfied(reserve, el, e_el, alpha) == expect

    def test_monotone_in_reserve(self):
        rng = np.random.default_rng(72)
        el = random_el_seq(rng)
        e_el = expectation(el)
        satisfied = [reserve_chance_satisfied(r, el, e_el, 0.9)
                     for r in np.linspace(0, len(el) * el.step_q, 50)]
        assert satisfied == sorted(satisfied)


class TestMinRequiredReserve:
    def test_point_mass(self):
        el = ProbSeq(step_q=2.5, probs=np.array([0, 1.0]))
        assert min_required_reserve(el, 2.5, 0.9) == 0.0

    def test_monotone_in_alpha(self):
        rng = np.random.default_rng(73)
        for _ in range(20):
            el = random_el_seq(rng)
            e_el = expectation(el)
            reserves = [min_required_reserve(el, e_el, a)
                        for a in (0.80, 0.85, 0.90, 0.95)]
            assert reserves == sorted(reserves)

    def test_exactness_on_the_grid(self):
        rng = np.random.default_rng(74)
        for _ in range(50):
            el = random_el_seq(rng)
            e_el = expectation(el)
            alpha = float(rng.uniform(0.55, 0.99))
            req = min_required_reserve(el, e_el, alpha)
            assert reserve_chance_satisfied(req, el, e_el, alpha)
            if req > 0:
                assert not reserve_chance_satisfied(req - el.step_q, el,
                                                    e_el, alpha)


class TestRepair:
    def test_idempotent(self):
        sc = make_miniature_scenario()
        el = build_equivalent_load(sc)
        rng = np.random.default_rng(5)
        for _ in range(50):
            first, _ = repair(random_dv(rng, sc), sc, el)
            second, _ = repair(first, sc, el)
            for attr in ("u", "p_mt", "r_mt", "p_ch", "p_dc", "p_res", "s"):
                assert np.array_equal(getattr(first, attr),
                                      getattr(second, attr)), attr

    def test_feasible_point_unchanged(self, degenerate_scenario):
        sc = degenerate_scenario
        el = build_equivalent_load(sc)
        dv = DecisionVector(u=np.ones((1, 2)), p_mt=np.full((1, 2), 25.0),
                            r_mt=np.zeros((1, 2)), p_ch=np.zeros(2),
                            p_dc=np.zeros(2), p_res=np.zeros(2))
        rep, penalty = repair(dv, sc, el)
        assert penalty == 0.0
        for attr in ("u", "p_mt", "r_mt", "p_ch", "p_dc", "p_res"):
            assert np.array_equal(getattr(rep, attr), getattr(dv, attr)), attr

    def test_no_simultaneous_exchange(self):
        sc = make_miniature_scenario()
        el = build_equivalent_load(sc)
        dv = DecisionVector.zeros(1, 2)
        dv.p_ch[:] = 5.0
        dv.p_dc[:] = 5.0
        rep, _ = repair(dv, sc, el)
        assert np.all(rep.p_ch * rep.p_dc == 0.0)

    def test_random_sweep_clears_everything_but_reserve_shortfall(self):
        sc = make_miniature_scenario()
        el = build_equivalent_load(sc)
        rng = np.random.default_rng(6)
        for _ in range(1000):
            rep, penalty = repair(random_dv(rng, sc), sc, el)
            report = check_constraints(rep, sc, el)
            residue = (report.mt_box.sum() + report.startup_mismatch.sum()
                       + report.exchange_rate.sum()
                       + report.simultaneous_exchange.sum()
                       + report.soc_bounds.sum()
                       + report.mt_reserve_headroom.sum()
                       + report.ess_reserve_cap.sum()
                       + np.maximum(report.balance_mismatch, 0.0).sum())
            assert residue <= 1e-9
            assert penalty == pytest.approx(
                1e6 * report.chance_shortfall.sum(), rel=1e-9, abs=1e-6)

    def test_startups_rebuilt_from_commitments(self):
        sc = make_miniature_scenario()
        el = build_equivalent_load(sc)
        dv = DecisionVector.zeros(1, 2)
        dv.u[0] = [1.0, 1.0]
        dv.p_mt[0] = [10.0, 10.0]
        rep, _ = repair(dv, sc, el)
        assert rep.s[0].tolist() == [1.0, 0.0]
