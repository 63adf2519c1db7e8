import csv
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from filigeo import golden
from filigeo.errors import BadParameter, OutsideDomain
from filigeo.geodesics import (
    PhaseState,
    find_turning_point,
    geodesic_rhs,
    hw_geodesic_family,
    hw_initial_velocity,
    shoot_geodesic,
    tangent_norm,
)
from filigeo.metric_zoo import flat, hw_lorentzian, hw_riemannian, lipschitz_toy

from conftest import EPS, LAM


@pytest.fixture(scope="module")
def gamma_eps(hw_family):
    return shoot_geodesic(hw_riemannian(LAM), [0.0, 0.0], hw_initial_velocity(EPS), (0.0, 2 * hw_family.s0))


# -- right-hand side --------------------------------------------------------


def test_rhs_hw_value():
    r = geodesic_rhs(hw_riemannian(1.5), PhaseState([0.5, 0.0], [0.0, 1.0]))
    np.testing.assert_allclose(r[:2], [0.0, 1.0])
    assert r[2] == pytest.approx(-0.75 * math.sqrt(0.5), abs=1e-15)
    assert r[2] == pytest.approx(-0.5303300858899106, abs=1e-15)
    assert r[3] == 0.0


def test_rhs_hw_no_y_acceleration_without_y_velocity():
    r = geodesic_rhs(hw_riemannian(1.5), PhaseState([0.3, 0.7], [1.0, 0.0]))
    assert r[3] == 0.0 and r[2] == 0.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
def test_rhs_flat_is_free_motion(y):
    r = geodesic_rhs(flat(2), PhaseState(y[:2], y[2:]))
    np.testing.assert_array_equal(r, [y[2], y[3], 0.0, 0.0])


def test_rhs_outside_domain():
    with pytest.raises(OutsideDomain):
        geodesic_rhs(hw_riemannian(1.5), PhaseState([1.5, 0.0], [0.0, 1.0]))


def test_phase_state_rejects_nan():
    with pytest.raises(BadParameter):
        PhaseState([np.nan, 0.0], [0.0, 1.0])


# -- shooting ---------------------------------------------------------------


def test_axis_geodesic_stays_on_axis():
    rec = shoot_geodesic(hw_riemannian(LAM), [0.0, 0.0], [0.0, 1.0], (0.0, 3.0))
    assert rec.termination == "Completed"
    s = np.linspace(0, 3, 31)
    pos = rec.position(s)
    np.testing.assert_allclose(pos[:, 0], 0.0, atol=1e-14)
    np.testing.assert_allclose(pos[:, 1], s, atol=1e-12)


def test_turning_point_matches_oracle(gamma_eps, hw_ref):
    s_turn, _ = find_turning_point(gamma_eps, component=0)
    assert s_turn == pytest.approx(hw_ref["s0"], abs=1e-7)
    x, y = gamma_eps.position(s_turn)
    assert x == pytest.approx(hw_ref["x_turn"], abs=1e-6)
    assert y == pytest.approx(hw_ref["y1"], abs=1e-6)
    vx, vy = gamma_eps.velocity(s_turn)
    assert vx == pytest.approx(0.0, abs=1e-8)
    assert vy == pytest.approx(1.0 / math.sqrt(1 - EPS), abs=1e-7)


def test_returns_to_axis_at_twice_s0(gamma_eps, hw_ref):
    x, y = gamma_eps.position(2 * hw_ref["s0"])
    assert x == pytest.approx(0.0, abs=1e-7)
    assert y == pytest.approx(2 * hw_ref["y1"], abs=1e-6)


def test_first_integral(gamma_eps):
    s = np.linspace(0, gamma_eps.s_end, 500)
    st_ = gamma_eps.state(s)
    c = (1 - np.abs(st_[:, 0]) ** LAM) * st_[:, 3]
    assert np.max(np.abs(c - math.sqrt(1 - EPS))) < 1e-7


def test_reflection_symmetry(gamma_eps, hw_ref):
    s0, y1 = hw_ref["s0"], hw_ref["y1"]
    sig = np.linspace(0, s0, 41)
    a = gamma_eps.position(s0 + sig)
    b = gamma_eps.position(s0 - sig)
    np.testing.assert_allclose(a[:, 1] + b[:, 1], 2 * y1, atol=1e-6)
    np.testing.assert_allclose(a[:, 0], b[:, 0], atol=1e-6)


def test_mirror_geodesic():
    m = hw_riemannian(LAM)
    s = np.linspace(0, 2.0, 21)
    a = shoot_geodesic(m, [0, 0], hw_initial_velocity(EPS, 1), (0, 2.0)).position(s)
    b = shoot_geodesic(m, [0, 0], hw_initial_velocity(EPS, -1), (0, 2.0)).position(s)
    np.testing.assert_allclose(a[:, 0], -b[:, 0], atol=1e-10)
    np.testing.assert_allclose(a[:, 1], b[:, 1], atol=1e-10)


@pytest.mark.parametrize("opts", [{"max_step": 0.01}, {"method": "RK45", "rtol": 1e-11, "atol": 1e-13}])
def test_ivp_uniqueness_across_step_control(gamma_eps, opts):
    other = shoot_geodesic(hw_riemannian(LAM), [0.0, 0.0], hw_initial_velocity(EPS), (0.0, gamma_eps.s_end), **opts)
    s = np.linspace(0, gamma_eps.s_end, 101)
    assert np.max(np.abs(gamma_eps.state(s) - other.state(s))) < 1e-6


def test_toy_metric_single_crossing():
    m = lipschitz_toy()
    v = np.array([1.0, 0.5])
    rec = shoot_geodesic(m, [-0.5, 0.0], v, (0.0, 2.0), normalize=True)
    assert rec.termination == "Completed"
    assert [e.kind for e in rec.events] == ["CrossUp"]
    assert rec.norm_drift < 1e-8
    ev = rec.events[0]
    before = rec.trajectory.segments[0](ev.t_event)
    after = rec.trajectory.segments[1](ev.t_event)
    np.testing.assert_allclose(before, after, atol=1e-12)


def test_toy_metric_halved_tolerance():
    m = lipschitz_toy()
    a = shoot_geodesic(m, [-0.5, 0.0], [1.0, 0.5], (0.0, 2.0))
    b = shoot_geodesic(m, [-0.5, 0.0], [1.0, 0.5], (0.0, 2.0), rtol=5e-11, atol=5e-13, event_tol=5e-11)
    assert np.linalg.norm(a.state(2.0) - b.state(2.0)) < 1e-8


def test_norm_conservation_rate(rng):
    m = lipschitz_toy()
    for _ in range(5):
        ang = rng.uniform(-1.2, 1.2)
        rec = shoot_geodesic(m, [-0.4, 0.0], [math.cos(ang), math.sin(ang)], (0.0, 3.0), normalize=True)
        assert rec.norm_drift / rec.s_end < 1e-6


def test_normalize_rejects_null():
    with pytest.raises(BadParameter):
        shoot_geodesic(hw_lorentzian(LAM), [0, 0, 0], [1.0, 1.0, 0.0], (0, 1), normalize=True)


# -- tangent norm -----------------------------------------------------------


def test_tangent_norm_hw_arclength(gamma_eps):
    _, vals, drift = tangent_norm(hw_riemannian(LAM), gamma_eps)
    assert vals[0] == pytest.approx(1.0, abs=1e-14)
    assert drift < 1e-8


def test_tangent_norm_flat_exact():
    m = flat(2)
    rec = shoot_geodesic(m, [0.3, -0.2], [0.6, 0.8], (0.0, 5.0))
    _, vals, drift = tangent_norm(m, rec)
    assert drift == 0.0
    assert vals[0] == pytest.approx(1.0, abs=1e-15)


def test_tangent_norm_lorentzian_gamma0(hw_ref):
    s0, y1 = hw_ref["s0"], hw_ref["y1"]
    m = hw_lorentzian(LAM)
    v = np.array([2 * math.sqrt(2) * s0, 0.0, 2 * y1])
    rec = shoot_geodesic(m, [0.0, 0.0, 0.0], v, (0.0, 1.0))
    _, vals, drift = tangent_norm(m, rec)
    assert vals[0] == pytest.approx(-8 * s0**2 + 4 * y1**2, rel=1e-14)
    assert vals[0] < 0 and drift < 1e-12
    assert rec.causal_character == "timelike"
    np.testing.assert_allclose(rec.position(1.0), [2 * math.sqrt(2) * s0, 0.0, 2 * y1], atol=1e-10)


def test_causal_character_riemannian_is_na(gamma_eps):
    assert gamma_eps.causal_character == "n/a"


def test_causal_character_null_line():
    rec = shoot_geodesic(flat(2, "lorentzian"), [0, 0], [1.0, 1.0], (0, 1))
    assert rec.causal_character == "null"


# -- HW family --------------------------------------------------------------


def test_family_matches_golden(hw_family, hw_ref):
    # two different quadratures (scipy adaptive vs mpmath tanh-sinh, different substitutions)
    assert hw_family.s0 == pytest.approx(hw_ref["s0"], abs=1e-11)
    assert hw_family.y1 == pytest.approx(hw_ref["y1"], abs=1e-11)
    assert hw_family.x_turn == pytest.approx(0.25 ** (2 / 3), abs=1e-15)
    assert hw_family.turning_point == (hw_family.x_turn, hw_family.y1)
    assert hw_family.turning_velocity[1] == pytest.approx(1 / math.sqrt(0.75))


@pytest.mark.parametrize("row", golden.load()["hw"], ids=lambda r: f"eps={r['eps']}")
def test_family_matches_golden_grid(row):
    fam = hw_geodesic_family(golden.load()["settings"]["lambda"], row["eps"])
    assert fam.s0 == pytest.approx(row["s0"], rel=1e-10)
    assert fam.y1 == pytest.approx(row["y1"], rel=1e-10)


def _crossover(lam):
    """The eps at which y1 = s0; below it s0 < y1."""
    return brentq(lambda e: hw_geodesic_family(lam, e).y1 - hw_geodesic_family(lam, e).s0, 1e-3, 0.99)


@settings(max_examples=40, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.01, 0.99))
def test_family_upper_bound(lam, eps):
    fam = hw_geodesic_family(lam, eps)
    assert fam.y1 < 2 * fam.s0


@settings(max_examples=25, deadline=None)
@given(st.floats(1.05, 1.95), st.floats(0.0, 1.0))
def test_family_ordering_for_small_eps(lam, frac):
    eps = max(frac * _crossover(lam), 1e-3)
    fam = hw_geodesic_family(lam, eps)
    assert fam.s0 < fam.y1 < 2 * fam.s0


def test_family_ordering_at_reference_point(hw_family):
    assert hw_family.s0 < hw_family.y1 < 2 * hw_family.s0


@pytest.mark.parametrize("lam,eps", [(1.75, 0.5), (1.5, 0.7), (1.9, 0.3)])
def test_lower_bound_fails_for_large_eps(lam, eps):
    # y1 < s0 here; the independent mpmath quadrature agrees
    mp = pytest.importorskip("mpmath")
    from quadrature_oracle import turning_data

    mp.mp.dps = 30
    _, s0, y1 = turning_data(mp.mpf(lam), mp.mpf(eps))
    fam = hw_geodesic_family(lam, eps)
    assert fam.y1 < fam.s0 and y1 < s0
    assert fam.s0 == pytest.approx(float(s0), rel=1e-10)


def test_crossover_shrinks_towards_lambda_two():
    eps_star = [_crossover(lam) for lam in (1.2, 1.5, 1.8, 1.95)]
    assert all(a > b for a, b in zip(eps_star, eps_star[1:]))
    assert eps_star[1] > 0.25


@pytest.mark.parametrize("lam,eps", [(1.5, 1.0), (1.5, 0.0), (2.0, 0.5), (1.0, 0.5), (1.5, -0.1)])
def test_family_rejects_boundary(lam, eps):
    with pytest.raises(BadParameter):
        hw_geodesic_family(lam, eps)


def test_family_points_follow_integrated_curve(hw_family, gamma_eps):
    s = np.linspace(0, 2 * hw_family.s0, 33)
    np.testing.assert_allclose(hw_family.points(s), gamma_eps.position(s), atol=1e-7)
    np.testing.assert_allclose(hw_family.points(s, -1)[:, 0], -gamma_eps.position(s)[:, 0], atol=1e-7)
    with pytest.raises(BadParameter):
        hw_family.points([3 * hw_family.s0])


def test_family_json(hw_family):
    d = json.loads(json.dumps(hw_family.to_json()))
    assert set(d) == {"lambda", "eps", "c", "s0", "y1"}
    assert d["c"] == pytest.approx(math.sqrt(0.75))


def test_record_csv(tmp_path, gamma_eps):
    gamma_eps.to_csv(tmp_path / "g.csv", 20)
    gamma_eps.write_events(tmp_path / "e.json")
    rows = list(csv.reader(open(tmp_path / "g.csv")))
    assert rows[0] == ["s", "x1", "x2", "v1", "v2", "norm"]
    assert all(abs(float(r[-1]) - 1.0) < 1e-8 for r in rows[1:])
    assert json.loads((tmp_path / "e.json").read_text())["termination"] == "Completed"
