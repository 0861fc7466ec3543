import numpy as np
import pytest

from mgdispatch.dispatch import (ESSParams, MTUnit, Scenario, TOUSchedule,
                                 build_equivalent_load)
from mgdispatch.probmodel import LoadParams, PVParams, WindParams
from mgdispatch.scenario_io import load_bundled_scenario


@pytest.fixture(scope="session")
def bundled_scenario():
    return load_bundled_scenario()


@pytest.fixture(scope="session")
def bundled_el(bundled_scenario):
    return build_equivalent_load(bundled_scenario)


def make_miniature_scenario():
    """2 periods, 1 unit, zero renewables: small enough for exhaustive
    grid-search oracles."""
    unit = MTUnit(name="MT1", p_min=5.0, p_max=30.0, fuel_zeta=0.5,
                  fuel_psi=0.1, startstop_cost_kappa=1.0,
                  reserve_price_sigma=0.03,
                  emission_coeffs=(1.0, 300.0, 1.0, 0.01))
    ess = ESSParams(cap_min=5.0, cap_max=40.0, cap_initial=20.0,
                    p_ch_max=10.0, p_dc_max=10.0, eff_ch=0.9, eff_dc=0.9,
                    reserve_price=0.02)
    dead_wind = WindParams(shape_k=2.0, scale_gamma=0.2, v_in=3.0,
                           v_rated=12.0, v_out=25.0, p_rated=40.0)
    return Scenario(
        name="miniature", horizon=2, dt=1.0, units=(unit,), ess=ess,
        tou=TOUSchedule(purchase=np.array([0.5, 0.8]),
                        sale=np.array([0.4, 0.6])),
        wind=(dead_wind, dead_wind),
        pv=(PVParams(2.0, 2.0, 0.0), PVParams(2.0, 2.0, 0.0)),
        load=(LoadParams(25.0, 2.5), LoadParams(35.0, 3.5)),
        confidence_alpha=0.9, step_q=2.5)


def make_degenerate_scenario(horizon=2, load_kw=25.0, step_q=2.5):
    """Deterministic case: zero renewables, exact point-mass load sitting on
    the discretization grid."""
    unit = MTUnit(name="MT1", p_min=5.0, p_max=60.0, fuel_zeta=0.5,
                  fuel_psi=0.1, startstop_cost_kappa=1.0,
                  reserve_price_sigma=0.03,
                  emission_coeffs=(1.0, 300.0, 1.0, 0.01))
    ess = ESSParams(cap_min=5.0, cap_max=40.0, cap_initial=20.0,
                    p_ch_max=10.0, p_dc_max=10.0, eff_ch=0.9, eff_dc=0.9,
                    reserve_price=0.02)
    dead_wind = WindParams(shape_k=2.0, scale_gamma=0.2, v_in=3.0,
                           v_rated=12.0, v_out=25.0, p_rated=40.0)
    return Scenario(
        name="degenerate", horizon=horizon, dt=1.0, units=(unit,), ess=ess,
        tou=TOUSchedule(purchase=np.full(horizon, 0.5),
                        sale=np.full(horizon, 0.4)),
        wind=(dead_wind,) * horizon,
        pv=(PVParams(2.0, 2.0, 0.0),) * horizon,
        load=(LoadParams(load_kw, 0.0),) * horizon,
        confidence_alpha=0.9, step_q=step_q)


@pytest.fixture
def miniature_scenario():
    return make_miniature_scenario()


@pytest.fixture
def degenerate_scenario():
    return make_degenerate_scenario()
