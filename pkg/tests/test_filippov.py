import csv
import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from filigeo.errors import NotSliding
from filigeo.filippov import (
    PiecewiseField,
    classify_interface_hit,
    continue_trajectory,
    demo_field,
    filippov_hull,
    integrate_filippov,
    sliding_field,
)
from filigeo.geodesics import geodesic_field
from filigeo.metric_zoo import hw_riemannian, lipschitz_toy

KINDS = {"CrossUp", "CrossDown", "Sliding", "Repulsive", "Tangential"}


def const_field(fm, fp, dim=None):
    fm, fp = np.asarray(fm, float), np.asarray(fp, float)
    return PiecewiseField(
        f_minus=lambda x: fm.copy(), f_plus=lambda x: fp.copy(),
        level=lambda x: float(x[0]), level_grad=lambda x: np.eye(fm.size)[0], dim=fm.size,
    )


# -- classification ---------------------------------------------------------


@pytest.mark.parametrize("pair,kind", [
    ((1.0, 1.0), "CrossUp"),
    ((-1.0, -1.0), "CrossDown"),
    ((-1.0, 1.0), "Repulsive"),
    ((1.0, -1.0), "Sliding"),
    ((0.0, 1.0), "Tangential"),
    ((1.0, 5e-10), "Tangential"),
])
def test_classification_examples(pair, kind):
    assert classify_interface_hit(*pair, tol=1e-9) == kind


finite = st.floats(allow_nan=False, allow_infinity=False, min_value=-1e6, max_value=1e6)


@given(finite, finite, st.floats(min_value=0.0, max_value=1.0))
def test_classification_is_total_and_consistent(a, b, tol):
    k = classify_interface_hit(a, b, tol)
    assert k in KINDS
    if abs(a) <= tol or abs(b) <= tol:
        assert k == "Tangential"
    else:
        expected = {(True, True): "CrossUp", (False, False): "CrossDown",
                    (True, False): "Sliding", (False, True): "Repulsive"}[(a > 0, b > 0)]
        assert k == expected


def test_classification_partitions_random_plane(rng):
    pairs = rng.normal(size=(10_000, 2)) * np.array([1.0, 1.0])
    kinds = [classify_interface_hit(a, b, 1e-3) for a, b in pairs]
    assert set(kinds) == KINDS
    tang = np.any(np.abs(pairs) <= 1e-3, axis=1)
    assert all((k == "Tangential") == t for k, t in zip(kinds, tang))


def test_negative_tolerance_rejected():
    with pytest.raises(ValueError):
        classify_interface_hit(1.0, 1.0, -1.0)


# -- sliding ----------------------------------------------------------------


def test_sliding_field_symmetric():
    f = const_field([1.0, 1.0], [-1.0, 1.0])
    np.testing.assert_allclose(sliding_field(f, np.zeros(2)), [0.0, 1.0], atol=1e-15)


def test_sliding_field_weighted():
    f = const_field([1.0, 3.0], [-2.0, 0.0])
    np.testing.assert_allclose(sliding_field(f, np.zeros(2)), [0.0, 2.0], atol=1e-15)


def test_sliding_field_rejects_crossing():
    with pytest.raises(NotSliding):
        sliding_field(const_field([1.0, 0.0], [1.0, 0.0]), np.zeros(2))


def test_sliding_field_tangent_random(rng):
    for _ in range(100):
        fm = rng.normal(size=3)
        fp = rng.normal(size=3)
        fm[0] = abs(fm[0]) + 0.01
        fp[0] = -abs(fp[0]) - 0.01
        f = const_field(fm, fp)
        s = sliding_field(f, np.zeros(3))
        assert abs(s[0]) < 1e-12
        # and it is a selection of the Filippov hull
        hull = filippov_hull(f, np.zeros(3), 1e-6)
        assert hull.contains(s, tol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.01, 10), st.floats(0.01, 10), st.floats(-5, 5), st.floats(-5, 5))
def test_sliding_tangency_property(a, b, ym, yp):
    f = const_field([a, ym], [-b, yp])
    s = sliding_field(f, np.zeros(2))
    assert abs(s[0]) < 1e-12
    lo, hi = min(ym, yp), max(ym, yp)
    assert lo - 1e-12 <= s[1] <= hi + 1e-12


# -- hull -------------------------------------------------------------------


@pytest.mark.parametrize("delta", [1e-6, 1e-3, 0.5])
def test_hull_of_sign_is_unit_interval(delta):
    hull = filippov_hull(demo_field("sliding"), [0.0], delta)
    lo, hi = hull.bounds()
    assert lo[0] == -1.0 and hi[0] == 1.0
    assert hull.rank == 1


def test_hull_shrinks_for_continuous_field():
    f = PiecewiseField(
        f_minus=lambda x: np.array([np.sin(x[0]), np.cos(x[1])]),
        f_plus=lambda x: np.array([np.sin(x[0]), np.cos(x[1])]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0, 0.0]), dim=2,
    )
    diam = [filippov_hull(f, [0.3, 0.2], d).diameter for d in (1e-1, 1e-2, 1e-3, 1e-4)]
    assert all(a > b for a, b in zip(diam, diam[1:]))
    assert diam[-1] < 1e-3


def test_hull_off_interface_is_point():
    hull = filippov_hull(demo_field("crossing"), [0.7], 1e-3)
    assert hull.rank == 0 and hull.diameter == 0.0
    np.testing.assert_array_equal(hull.vertices[0], [1.5])


def test_hull_contains_all_samples(rng):
    f = geodesic_field(lipschitz_toy())
    y = np.array([0.0, 0.3, 0.4, 1.1])
    hull = filippov_hull(f, y, 1e-2, n_samples=400)
    for v in hull.vertices:
        assert hull.contains(v, tol=1e-12)


def test_hull_of_toy_acceleration():
    # x'' = sgn(x) y'^2 / 2 on the toy metric, so the hull is [-y'^2/2, y'^2/2]
    vy = 1.3
    y = np.array([0.0, 0.0, 0.2, vy])
    f = geodesic_field(lipschitz_toy())
    hull = filippov_hull(f, y, 1e-7, n_samples=512)
    lo, hi = hull.bounds()
    assert lo[2] == pytest.approx(-0.5 * vy**2, abs=1e-6)
    assert hi[2] == pytest.approx(0.5 * vy**2, abs=1e-6)


def test_hull_of_hw_acceleration_bound():
    # for lambda > 1 the one-sided limits of x'' vanish at x = 0 and the hull
    # collapses; on B(y, delta) it is bounded by (lam/2) delta^(lam-1) (|y'| + delta)^2
    lam, vy = 1.5, 1.0
    f = geodesic_field(hw_riemannian(lam))
    y = np.array([0.0, 0.0, 0.0, vy])
    widths = []
    for delta in (1e-2, 1e-4, 1e-6):
        lo, hi = filippov_hull(f, y, delta).bounds()
        bound = lam / 2 * delta ** (lam - 1) * (vy + delta) ** 2
        assert hi[2] <= bound + 1e-15 and lo[2] >= -bound - 1e-15
        widths.append(hi[2] - lo[2])
    assert widths[-1] < 1e-2 * widths[0]


def test_hull_affine_equivariance(rng):
    # piecewise-constant field: the essential hull on N is co{f-, f+} in any affine chart
    fm, fp = np.array([1.0, 2.0]), np.array([-0.5, 0.3])
    A = np.array([[2.0, 1.0], [0.5, 1.5]])
    b = np.array([0.1, -0.2])
    Ainv = np.linalg.inv(A)
    f = const_field(fm, fp)
    x = np.array([0.0, 0.4])  # on N in the original chart
    xt = Ainv @ (x - b)  # same point in the new chart y = A^-1 (x - b)
    ft = PiecewiseField(
        f_minus=lambda z: Ainv @ fm, f_plus=lambda z: Ainv @ fp,
        level=lambda z: float((A @ z + b)[0]), level_grad=lambda z: A[0].copy(), dim=2,
    )
    h1 = filippov_hull(f, x, 1e-3)
    h2 = filippov_hull(ft, xt, 1e-3)
    mapped = sorted(map(tuple, np.round(A @ h2.vertices.T, 12).T))
    assert np.allclose(mapped, sorted(map(tuple, np.round(h1.vertices, 12))), atol=1e-12)


def test_hull_high_dimension_uses_support_function(rng):
    d = 5
    f = PiecewiseField(
        f_minus=lambda x: x.copy(), f_plus=lambda x: -x,
        level=lambda x: float(x[0]), level_grad=lambda x: np.eye(d)[0], dim=d,
    )
    hull = filippov_hull(f, np.zeros(d), 0.1, n_samples=300)
    assert hull.support is not None
    for v in hull.vertices[:50]:
        assert hull.contains(v, tol=1e-12)
    assert not hull.contains(np.full(d, 1.0))


# -- integration ------------------------------------------------------------


def test_crossing_demo_closed_form():
    tr = integrate_filippov(demo_field("crossing"), [-1.0], (0.0, 3.0))
    assert tr.termination == "Completed"
    assert [e.kind for e in tr.events] == ["CrossUp"]
    assert tr.events[0].t_event == pytest.approx(2.0, abs=1e-9)
    assert tr(3.0)[0] == pytest.approx(1.5, abs=1e-8)
    ts = np.linspace(0, 3, 61)
    exact = np.where(ts < 2, -1 + 0.5 * ts, 1.5 * (ts - 2))
    np.testing.assert_allclose(tr(ts)[:, 0], exact, atol=1e-8)


def test_sliding_demo_stays_on_interface():
    tr = integrate_filippov(demo_field("sliding"), [1.0], (0.0, 3.0))
    assert tr.termination == "Completed"
    assert tr.events[0].kind == "Sliding"
    assert tr.events[0].t_event == pytest.approx(1.0, abs=1e-9)
    assert np.max(np.abs(tr(np.linspace(1.0 + 1e-6, 3.0, 100))[:, 0])) < 1e-9


def test_repulsive_demo_stops_with_two_continuations():
    f = demo_field("repulsive")
    tr = integrate_filippov(f, [0.0], (0.0, 1.0))
    assert tr.termination == "RepulsiveStop"
    assert tr.events[0].kind == "Repulsive"
    sides = {c["side"]: c["direction"][0] for c in tr.continuations}
    assert sides == {"minus": -1.0, "plus": 1.0}
    for side, sign in (("minus", -1.0), ("plus", 1.0)):
        cont = continue_trajectory(f, tr, side, 1.0)
        assert cont.termination == "Completed"
        assert cont(1.0)[0] == pytest.approx(sign, abs=1e-10)


def test_sliding_in_plane_follows_sliding_field():
    f = const_field([1.0, 3.0], [-2.0, 0.0])
    tr = integrate_filippov(f, [-1.0, 0.0], (0.0, 3.0))
    # reaches N at t = 1 at y = 3, then slides with speed 2
    assert tr.events[0].kind == "Sliding"
    np.testing.assert_allclose(tr(3.0), [0.0, 3.0 + 2 * 2.0], atol=1e-8)


def test_sliding_exit_when_condition_fails():
    # on N: fN- = 1 - y, fN+ = -1; sliding holds until y = 1, then the flow leaves into D-
    f = PiecewiseField(
        f_minus=lambda x: np.array([1.0 - x[1], 1.0]), f_plus=lambda x: np.array([-1.0, 1.0]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0, 0.0]), dim=2,
    )
    tr = integrate_filippov(f, [0.0, 0.0], (0.0, 2.0))
    actions = [e.action for e in tr.events]
    assert actions[0] == "sliding" and "exit-minus" in actions
    t_exit = [e.t_event for e in tr.events if e.action == "exit-minus"][0]
    assert t_exit == pytest.approx(1.0, abs=1e-8)
    assert tr(2.0)[0] < 0


def test_tangential_hit_resolved_by_curvature():
    f = PiecewiseField(
        f_minus=lambda x: np.array([x[1], 1.0]), f_plus=lambda x: np.array([x[1], 1.0]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0, 0.0]), dim=2,
    )
    tr = integrate_filippov(f, [0.0, 0.0], (0.0, 1.0))
    assert tr.events[0].kind == "Tangential" and tr.events[0].action == "plus"
    np.testing.assert_allclose(tr(1.0), [0.5, 1.0], atol=1e-9)


def test_tangential_without_selection_stops():
    f = PiecewiseField(
        f_minus=lambda x: np.array([x[1], 1.0]), f_plus=lambda x: np.array([x[1], -1.0]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0, 0.0]), dim=2,
    )
    tr = integrate_filippov(f, [0.0, 0.0], (0.0, 1.0))
    assert tr.termination == "SlidingExit"


def test_degenerate_tangency_stays_in_interface():
    f = PiecewiseField(
        f_minus=lambda x: np.array([0.0, 1.0]), f_plus=lambda x: np.array([0.0, 1.0]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0, 0.0]), dim=2,
    )
    tr = integrate_filippov(f, [0.0, 0.0], (0.0, 2.0))
    assert tr.termination == "Completed"
    assert tr.events[0].action == "tangent"
    np.testing.assert_allclose(tr(2.0), [0.0, 2.0], atol=1e-12)


def test_domain_exit():
    f = PiecewiseField(
        f_minus=lambda x: np.array([1.0]), f_plus=lambda x: np.array([1.0]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0]), dim=1,
        domain_margin=lambda x: 0.5 - abs(x[0]),
    )
    tr = integrate_filippov(f, [0.0], (0.0, 3.0))
    assert tr.termination == "DomainExit"
    assert tr.t_end == pytest.approx(0.5, abs=1e-9)


def test_step_failure_on_nan_field():
    f = PiecewiseField(
        f_minus=lambda x: np.array([np.nan]), f_plus=lambda x: np.array([np.nan]),
        level=lambda x: float(x[0]), level_grad=lambda x: np.array([1.0]), dim=1,
    )
    tr = integrate_filippov(f, [0.5], (0.0, 1.0))
    assert tr.termination == "StepFailure"


def _multi_crossing_field():
    # rotation about (0.3, 0): crosses x = 0 repeatedly, with different speeds per side
    c = np.array([0.3, 0.0])

    def rot(s):
        return lambda x: s * np.array([-(x[1] - c[1]), x[0] - c[0]])

    return PiecewiseField(f_minus=rot(1.0), f_plus=rot(1.7), level=lambda x: float(x[0]),
                          level_grad=lambda x: np.array([1.0, 0.0]), dim=2)


def test_position_continuity_across_events():
    tr = integrate_filippov(_multi_crossing_field(), [1.0, 0.0], (0.0, 20.0))
    assert len(tr.events) >= 4
    for a, b in zip(tr.segments, tr.segments[1:]):
        assert np.linalg.norm(a(a.t1) - b(b.t0)) < 1e-10
        assert a.t1 == b.t0


def test_halved_tolerance_endpoint_shift():
    f = _multi_crossing_field()
    rtol = 1e-10
    a = integrate_filippov(f, [1.0, 0.0], (0.0, 5.0), rtol=rtol, atol=1e-12)
    b = integrate_filippov(f, [1.0, 0.0], (0.0, 5.0), rtol=rtol / 2, atol=5e-13, event_tol=5e-11)
    xa = a(5.0)
    assert np.linalg.norm(xa - b(5.0)) < 10 * rtol * np.linalg.norm(xa)


def test_exports(tmp_path):
    tr = integrate_filippov(demo_field("crossing"), [-1.0], (0.0, 3.0))
    tr.to_csv(tmp_path / "t.csv", 50)
    tr.write_events(tmp_path / "e.json")
    rows = list(csv.reader(open(tmp_path / "t.csv")))
    assert rows[0] == ["t", "x1", "side"]
    assert {r[2] for r in rows[1:]} == {"minus", "plus"}
    ev = json.loads((tmp_path / "e.json").read_text())
    assert ev["termination"] == "Completed"
    assert set(ev["events"][0]) >= {"t", "point", "fN_minus", "fN_plus", "kind"}
