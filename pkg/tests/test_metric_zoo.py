import json

import numpy as np
import pytest

from filigeo.errors import BadParameter, OutsideDomain, SignatureViolation, SingularMetric
from filigeo.metric_zoo import (
    TAU_GLUE,
    PiecewiseMetric,
    bubble,
    christoffel,
    eval_many,
    eval_metric,
    flat,
    from_descriptor,
    hw_lorentzian,
    hw_riemannian,
    lipschitz_toy,
)

ZOO = [hw_riemannian(1.5), hw_lorentzian(1.5), bubble(0.5), lipschitz_toy(), flat(2), flat(3, "lorentzian")]


def _random_points(m, rng, k):
    X = rng.uniform(-0.95, 0.95, size=(k, m.dim))
    return X


def _fd_christoffel(m, x, side, h=1e-6):
    n = m.dim
    dg = np.empty((n, n, n))
    for k in range(n):
        e = np.zeros(n)
        e[k] = h
        gp = eval_metric(m, x + e, side, check_signature=False).g
        gm = eval_metric(m, x - e, side, check_signature=False).g
        dg[k] = (gp - gm) / (2 * h)
    g = eval_metric(m, x, side, check_signature=False).g
    low = 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)
    return np.einsum("il,ljk->ijk", np.linalg.inv(g), low)


def test_hw_value_off_axis():
    s = eval_metric(hw_riemannian(1.5), [0.5, 0.0])
    np.testing.assert_allclose(s.g, np.diag([1.0, 1.0 - 0.5**1.5]), rtol=0, atol=1e-15)
    assert s.g[1, 1] == pytest.approx(0.6464466094067263, abs=1e-15)
    assert s.side == "plus"


@pytest.mark.parametrize("side", ["minus", "plus", None])
def test_hw_identity_on_axis(side):
    s = eval_metric(hw_riemannian(1.5), [0.0, 3.0], side)
    np.testing.assert_array_equal(s.g, np.eye(2))


def test_hw_metadata_and_parameter_range():
    m = hw_riemannian(1.5)
    assert m.regularity == "C^{1,0.5}"
    assert m.level([0.3, 1.0]) == 0.3
    for lam in (1.0, 2.0, 0.5, 2.5):
        with pytest.raises(BadParameter):
            hw_riemannian(lam)


def test_hw_lorentzian_values():
    m = hw_lorentzian(1.5)
    np.testing.assert_array_equal(eval_metric(m, [0.0, 0.0, 0.0]).g, np.diag([-1.0, 1.0, 1.0]))
    g = eval_metric(m, [0.0, 0.5, 0.0]).g
    np.testing.assert_allclose(g, np.diag([-1.0, 1.0, 1.0 - 0.5**1.5]), atol=1e-15)
    assert m.signature == "lorentzian"
    np.testing.assert_array_equal(m.time_orientation([0, 0, 0]), [1.0, 0.0, 0.0])
    with pytest.raises(BadParameter):
        hw_lorentzian(0.5)


def test_bubble_values():
    m = bubble(0.5)
    for x in (-3.0, 0.0, 7.5):
        np.testing.assert_array_equal(eval_metric(m, [0.0, x], "plus").g, [[-1.0, -1.0], [-1.0, 0.0]])
    # d/dx is null on the axis
    assert m.inner([0.0, 0.0], [0, 1], [0, 1], "plus") == 0.0
    g = eval_metric(m, [0.25, 0.0]).g
    assert g[1, 1] == pytest.approx(0.75, abs=1e-15)
    assert np.linalg.det(g) == pytest.approx(-1.0, abs=1e-14)
    for lam in (0.0, 1.0, 1.5):
        with pytest.raises(BadParameter):
            bubble(lam)


def test_domain_walls():
    with pytest.raises(OutsideDomain):
        eval_metric(hw_riemannian(1.5), [1.0, 0.0])
    with pytest.raises(OutsideDomain):
        eval_metric(bubble(0.5), [-1.2, 0.0])
    with pytest.raises(BadParameter):
        eval_metric(hw_riemannian(1.5), [0.0, 0.0, 0.0])


def test_signature_violation_reported():
    bad = PiecewiseMetric(
        name="bad", dim=2, signature="riemannian",
        branch_minus=lambda x: (np.diag([1.0, -1.0]), np.zeros((2, 2, 2))),
        branch_plus=lambda x: (np.diag([1.0, -1.0]), np.zeros((2, 2, 2))),
        level=lambda x: x[0], level_grad=lambda x: np.array([1.0, 0.0]),
    )
    with pytest.raises(SignatureViolation):
        eval_metric(bad, [0.5, 0.0])


def test_singular_metric():
    deg = PiecewiseMetric(
        name="deg", dim=2, signature="riemannian",
        branch_minus=lambda x: (np.diag([1.0, 0.0]), np.zeros((2, 2, 2))),
        branch_plus=lambda x: (np.diag([1.0, 0.0]), np.zeros((2, 2, 2))),
        level=lambda x: x[0], level_grad=lambda x: np.array([1.0, 0.0]),
    )
    with pytest.raises(SingularMetric):
        christoffel(deg, [0.5, 0.0])


@pytest.mark.parametrize("m", ZOO, ids=lambda m: f"{m.name}-{m.dim}")
def test_glue_continuity(m, rng):
    for x in _random_points(m, rng, 1000):
        x[0 if m.name not in ("hw-lorentzian",) else 1] = 0.0
        gm, _ = m.branch_minus(x)
        gp, _ = m.branch_plus(x)
        assert np.max(np.abs(gp - gm)) < TAU_GLUE


@pytest.mark.parametrize("m", ZOO, ids=lambda m: f"{m.name}-{m.dim}")
def test_signature_stability(m, rng):
    for x in _random_points(m, rng, 1000):
        s = eval_metric(m, x, check_signature=False)
        ev = np.linalg.eigvalsh(s.g)
        assert np.allclose(s.g, s.g.T)
        assert np.allclose(s.dg, s.dg.transpose(0, 2, 1))
        if m.signature == "riemannian":
            assert np.all(ev > 0)
        else:
            assert ev[0] < 0 and np.all(ev[1:] > 0)


@pytest.mark.parametrize("m", [m for m in ZOO if m.name != "flat"], ids=lambda m: m.name)
def test_level_gradient_regular(m, rng):
    for x in _random_points(m, rng, 100):
        assert np.linalg.norm(m.level_grad(x)) > 0


def test_hw_christoffel_matches_geodesic_equation(rng):
    lam = 1.5
    m = hw_riemannian(lam)
    for x in rng.uniform(-0.9, 0.9, size=(50, 2)):
        if abs(x[0]) < 1e-3:
            continue
        G = christoffel(m, x)
        expected = lam / 2 * abs(x[0]) ** (lam - 1) * np.sign(x[0])
        assert G[0, 1, 1] == pytest.approx(expected, rel=1e-13)


def test_hw_christoffel_against_finite_differences():
    m = hw_riemannian(1.5)
    x = np.array([0.5, 0.0])
    G = christoffel(m, x)
    # Gamma^y_{xy} = -(lam/2) |x|^{lam-1} sgn(x) / (1 - |x|^lam)
    assert G[1, 0, 1] == pytest.approx(-0.75 * 0.5**0.5 / (1 - 0.5**1.5), rel=1e-13)
    np.testing.assert_allclose(G, _fd_christoffel(m, x, "plus"), atol=1e-6)


@pytest.mark.parametrize("m", [hw_riemannian(1.5), hw_lorentzian(1.5), bubble(0.5), lipschitz_toy()], ids=lambda m: m.name)
def test_christoffel_fd_agreement_both_branches(m, rng):
    for x in rng.uniform(-0.8, 0.8, size=(40, m.dim)):
        side = m.side_of(x)
        if abs(m.level(x)) < 0.05:
            continue
        G = christoffel(m, x, side)
        np.testing.assert_allclose(G, _fd_christoffel(m, x, side), atol=1e-5)
        np.testing.assert_array_equal(G, G.transpose(0, 2, 1))


def test_flat_christoffel_zero():
    np.testing.assert_array_equal(christoffel(flat(2), [0.3, -1.0]), np.zeros((2, 2, 2)))


@pytest.mark.parametrize("m", ZOO, ids=lambda m: f"{m.name}-{m.dim}")
def test_eval_many_matches_pointwise(m, rng):
    X = _random_points(m, rng, 50)
    G, DG = eval_many(m, X)
    for x, g, dg in zip(X, G, DG):
        s = eval_metric(m, x, check_signature=False)
        np.testing.assert_allclose(g, s.g, rtol=1e-14, atol=1e-15)
        np.testing.assert_allclose(dg, s.dg, rtol=1e-13, atol=1e-15)


@pytest.mark.parametrize("m", ZOO, ids=lambda m: f"{m.name}-{m.dim}")
def test_descriptor_round_trip(m):
    d = json.loads(m.to_json())
    assert set(d) == {"name", "params", "dim", "signature", "regularity"}
    m2 = from_descriptor(d)
    assert m2.descriptor() == m.descriptor()


def test_unknown_descriptor():
    with pytest.raises(BadParameter):
        from_descriptor({"name": "nope", "params": {}})
