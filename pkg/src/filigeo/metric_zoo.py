"""Piecewise metrics glued along a level-set hypersurface, and the example zoo.

A :class:`PiecewiseMetric` carries two smooth branches of metric components,
each evaluable on its closed half-domain (and slightly beyond, so that an
integrator stage overshooting the interface still gets a finite value).  The
interface is the zero set of a scalar level function ``phi``; ``phi < 0`` is
the minus side, ``phi > 0`` the plus side.

Branch callables return ``(g, dg)`` where ``g[i, j]`` are the components and
``dg[k, i, j]`` the first partials with respect to coordinate ``k``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np

from .errors import BadParameter, OutsideDomain, SignatureViolation, SingularMetric

Side = Literal["minus", "plus", "interface"]
Signature = Literal["riemannian", "lorentzian"]
BranchFn = Callable[[np.ndarray], "tuple[np.ndarray, np.ndarray]"]

TAU_ONSURFACE = 1e-10
TAU_GLUE = 1e-12

__all__ = [
    "PiecewiseMetric",
    "MetricSample",
    "eval_metric",
    "eval_many",
    "christoffel",
    "geodesic_acceleration",
    "hw_riemannian",
    "hw_lorentzian",
    "bubble",
    "lipschitz_toy",
    "flat",
    "from_descriptor",
    "TAU_ONSURFACE",
    "TAU_GLUE",
]


@dataclass(frozen=True)
class MetricSample:
    g: np.ndarray
    dg: np.ndarray
    side: Side


@dataclass(frozen=True)
class PiecewiseMetric:
    """Semi-Riemannian metric given by two smooth branches glued along ``{phi = 0}``.

    ``domain_margin`` is positive inside the coordinate domain and reaches
    zero on its hard walls.  ``time_orientation`` returns the future-pointing
    timelike field ``T(x)`` for Lorentzian metrics.  ``differentiable``
    records whether ``g`` is C^1 across the interface.
    """

    name: str
    dim: int
    signature: Signature
    branch_minus: BranchFn
    branch_plus: BranchFn
    level: Callable[[np.ndarray], float]
    level_grad: Callable[[np.ndarray], np.ndarray]
    params: dict = field(default_factory=dict)
    regularity: str = "C^inf"
    differentiable: bool = True
    lipschitz_constant_hint: float | None = None
    domain_margin: Callable[[np.ndarray], float] | None = None
    time_orientation: Callable[[np.ndarray], np.ndarray] | None = None
    batch: Callable[[np.ndarray, np.ndarray], "tuple[np.ndarray, np.ndarray]"] | None = field(
        default=None, repr=False, compare=False
    )

    def side_of(self, x, side_hint: Side | None = None) -> Side:
        phi = self.level(np.asarray(x, dtype=float))
        if abs(phi) <= TAU_ONSURFACE:
            return side_hint if side_hint in ("minus", "plus") else "interface"
        return "plus" if phi > 0 else "minus"

    def inside(self, x) -> bool:
        if self.domain_margin is None:
            return True
        return bool(self.domain_margin(np.asarray(x, dtype=float)) > 0)

    def branch(self, side: Side) -> BranchFn:
        return self.branch_minus if side == "minus" else self.branch_plus

    def descriptor(self) -> dict:
        return {
            "name": self.name,
            "params": dict(self.params),
            "dim": self.dim,
            "signature": self.signature,
            "regularity": self.regularity,
        }

    def to_json(self) -> str:
        return json.dumps(self.descriptor(), sort_keys=True)

    def inner(self, x, u, w, side: Side | None = None) -> float:
        g = eval_metric(self, x, side, check_signature=False).g
        return float(np.asarray(u) @ g @ np.asarray(w))


def _signature_ok(g: np.ndarray, signature: Signature) -> bool:
    ev = np.linalg.eigvalsh(g)
    if signature == "riemannian":
        return bool(np.all(ev > 0))
    return bool(ev[0] < 0 and np.all(ev[1:] > 0))


def eval_metric(
    m: PiecewiseMetric,
    x,
    side_hint: Side | None = None,
    *,
    check_signature: bool = True,
) -> MetricSample:
    """Evaluate ``g`` and its partials on the branch selected for ``x``.

    On the interface without a hint both branches are evaluated; ``g`` is
    taken from the plus branch (the branches agree there) and ``dg`` is the
    mean of the one-sided partials.
    """
    x = np.asarray(x, dtype=float)
    if x.shape != (m.dim,):
        raise BadParameter(f"point must have shape ({m.dim},), got {x.shape}")
    if not m.inside(x):
        raise OutsideDomain(f"{m.name}: point {x} is outside the coordinate domain")
    side = m.side_of(x, side_hint)
    if side == "interface":
        g, dgp = m.branch_plus(x)
        _, dgm = m.branch_minus(x)
        with np.errstate(invalid="ignore"):
            dg = 0.5 * (dgp + dgm)
    else:
        g, dg = m.branch(side)(x)
    if check_signature and not _signature_ok(g, m.signature):
        raise SignatureViolation(f"{m.name}: metric at {x} is not {m.signature}")
    return MetricSample(g=g, dg=dg, side=side)


def eval_many(m: PiecewiseMetric, X) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised ``(g, dg)`` at the rows of ``X`` (no domain or signature checks).

    Rows on the interface get the mean of the one-sided partials, as in
    :func:`eval_metric`.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    phi = np.array([m.level(x) for x in X])
    sign = np.where(np.abs(phi) <= TAU_ONSURFACE, 0.0, np.sign(phi))
    if m.batch is not None:
        return m.batch(X, sign)
    k, n = X.shape
    G = np.empty((k, n, n))
    DG = np.empty((k, n, n, n))
    for i, (x, sg) in enumerate(zip(X, sign)):
        if sg == 0:
            smp = eval_metric(m, x, check_signature=False)
            G[i], DG[i] = smp.g, smp.dg
        else:
            G[i], DG[i] = m.branch("plus" if sg > 0 else "minus")(x)
    return G, DG


def _lowered_christoffel(dg: np.ndarray) -> np.ndarray:
    # Gamma_{l jk} = 1/2 (d_j g_lk + d_k g_lj - d_l g_jk), indexed [l, j, k]
    return 0.5 * (dg.transpose(1, 0, 2) + dg.transpose(1, 2, 0) - dg)


def christoffel(m: PiecewiseMetric, x, side: Side | None = None) -> np.ndarray:
    """Christoffel symbols ``Gamma[i, j, k]`` of the branch selected by ``side``."""
    s = eval_metric(m, x, side, check_signature=False)
    try:
        ginv = np.linalg.inv(s.g)
    except np.linalg.LinAlgError as exc:
        raise SingularMetric(f"{m.name}: metric is singular at {x}") from exc
    if not np.all(np.isfinite(ginv)) or abs(np.linalg.det(s.g)) < 1e-300:
        raise SingularMetric(f"{m.name}: metric is singular at {x}")
    return np.einsum("il,ljk->ijk", ginv, _lowered_christoffel(s.dg))


def geodesic_acceleration(branch: BranchFn, x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``-Gamma^i_{jk} v^j v^k`` for one branch, without the Christoffel tensor."""
    g, dg = branch(x)
    dgv = dg @ v  # [k, i] = d_k g_ij v^j
    w = dgv.T @ v - 0.5 * (dgv @ v)
    return -np.linalg.solve(g, w)


# ---------------------------------------------------------------------------
# zoo


def _coord_level(i: int, dim: int):
    e = np.zeros(dim)
    e[i] = 1.0

    def level(x):
        return float(x[i])

    def grad(x):
        return e.copy()

    return level, grad


def _abs_pow(s: float, lam: float) -> tuple[float, float]:
    """``|s|^lam`` and its derivative; the derivative is +-inf at 0 when lam < 1."""
    a = abs(s)
    if a == 0.0:
        if lam > 1:
            return 0.0, 0.0
        return 0.0, np.inf
    p = a**lam
    return p, lam * p / a * np.sign(s)


def hw_riemannian(lam: float) -> PiecewiseMetric:
    """Hartman-Wintner metric ``dx^2 + (1 - |x|^lam) dy^2`` on ``(-1, 1) x R``."""
    lam = float(lam)
    if not 1.0 < lam < 2.0:
        raise BadParameter(f"hw_riemannian requires 1 < lambda < 2, got {lam}")

    def branch(x):
        p, dp = _abs_pow(x[0], lam)
        g = np.array([[1.0, 0.0], [0.0, 1.0 - p]])
        dg = np.zeros((2, 2, 2))
        dg[0, 1, 1] = -dp
        return g, dg

    def batch(X, sign):
        a = np.abs(X[:, 0])
        p = a**lam
        with np.errstate(divide="ignore", invalid="ignore"):
            dp = np.where(a > 0, lam * p / np.where(a > 0, a, 1.0), 0.0) * np.sign(X[:, 0])
        G = np.zeros((len(X), 2, 2))
        G[:, 0, 0] = 1.0
        G[:, 1, 1] = 1.0 - p
        DG = np.zeros((len(X), 2, 2, 2))
        DG[:, 0, 1, 1] = -dp
        return G, DG

    level, grad = _coord_level(0, 2)
    return PiecewiseMetric(
        name="hw",
        batch=batch,
        dim=2,
        signature="riemannian",
        branch_minus=branch,
        branch_plus=branch,
        level=level,
        level_grad=grad,
        params={"lambda": lam},
        regularity=f"C^{{1,{lam - 1:g}}}",
        differentiable=True,
        domain_margin=lambda x: 1.0 - abs(x[0]),
    )


def hw_lorentzian(lam: float) -> PiecewiseMetric:
    """``-dt^2 + dx^2 + (1 - |x|^lam) dy^2`` on ``R x (-1, 1) x R``, future = +t."""
    lam = float(lam)
    if not 1.0 < lam < 2.0:
        raise BadParameter(f"hw_lorentzian requires 1 < lambda < 2, got {lam}")

    def branch(x):
        p, dp = _abs_pow(x[1], lam)
        g = np.diag([-1.0, 1.0, 1.0 - p])
        dg = np.zeros((3, 3, 3))
        dg[1, 2, 2] = -dp
        return g, dg

    def batch(X, sign):
        a = np.abs(X[:, 1])
        p = a**lam
        with np.errstate(divide="ignore", invalid="ignore"):
            dp = np.where(a > 0, lam * p / np.where(a > 0, a, 1.0), 0.0) * np.sign(X[:, 1])
        G = np.zeros((len(X), 3, 3))
        G[:, 0, 0] = -1.0
        G[:, 1, 1] = 1.0
        G[:, 2, 2] = 1.0 - p
        DG = np.zeros((len(X), 3, 3, 3))
        DG[:, 1, 2, 2] = -dp
        return G, DG

    level, grad = _coord_level(1, 3)
    t_field = np.array([1.0, 0.0, 0.0])
    return PiecewiseMetric(
        name="hw-lorentzian",
        batch=batch,
        dim=3,
        signature="lorentzian",
        branch_minus=branch,
        branch_plus=branch,
        level=level,
        level_grad=grad,
        params={"lambda": lam},
        regularity=f"C^{{1,{lam - 1:g}}}",
        differentiable=True,
        domain_margin=lambda x: 1.0 - abs(x[1]),
        time_orientation=lambda x: t_field.copy(),
    )


def bubble(lam: float) -> PiecewiseMetric:
    """Causal-bubble metric on ``(-1, 1) x R`` in coordinates ``(u, x)``.

    ``g = -du^2 + 2(|u|^lam - 1) du dx + |u|^lam (2 - |u|^lam) dx^2``,
    time-oriented by ``d/du``.  Only Hoelder continuous at ``u = 0``, where
    the ``u``-partials are infinite.
    """
    lam = float(lam)
    if not 0.0 < lam < 1.0:
        raise BadParameter(f"bubble requires 0 < lambda < 1, got {lam}")

    def make(sign: float):
        def branch(x):
            a, da = _abs_pow(x[0], lam)
            if x[0] == 0.0:
                da = sign * np.inf
            g = np.array([[-1.0, a - 1.0], [a - 1.0, a * (2.0 - a)]])
            dg = np.zeros((2, 2, 2))
            with np.errstate(invalid="ignore"):
                dg[0] = np.array([[0.0, da], [da, (2.0 - 2.0 * a) * da]])
            return g, dg

        return branch

    def batch(X, sign):
        u = X[:, 0]
        au = np.abs(u)
        a = au**lam
        with np.errstate(divide="ignore", invalid="ignore"):
            da = np.where(au > 0, lam * a / np.where(au > 0, au, 1.0) * np.sign(u), sign * np.inf)
        G = np.empty((len(X), 2, 2))
        G[:, 0, 0] = -1.0
        G[:, 0, 1] = G[:, 1, 0] = a - 1.0
        G[:, 1, 1] = a * (2.0 - a)
        DG = np.zeros((len(X), 2, 2, 2))
        with np.errstate(invalid="ignore"):
            DG[:, 0, 0, 1] = DG[:, 0, 1, 0] = da
            DG[:, 0, 1, 1] = (2.0 - 2.0 * a) * da
        return G, DG

    level, grad = _coord_level(0, 2)
    t_field = np.array([1.0, 0.0])
    return PiecewiseMetric(
        name="bubble",
        batch=batch,
        dim=2,
        signature="lorentzian",
        branch_minus=make(-1.0),
        branch_plus=make(1.0),
        level=level,
        level_grad=grad,
        params={"lambda": lam},
        regularity=f"C^{{0,{lam:g}}}",
        differentiable=False,
        domain_margin=lambda x: 1.0 - abs(x[0]),
        time_orientation=lambda x: t_field.copy(),
    )


def lipschitz_toy() -> PiecewiseMetric:
    """``dx^2 + (1 + |x|) dy^2``: Lipschitz, with a genuine jump of the
    Christoffel symbols across ``x = 0``."""

    def make(sign: float):
        def branch(x):
            g = np.array([[1.0, 0.0], [0.0, 1.0 + sign * x[0]]])
            dg = np.zeros((2, 2, 2))
            dg[0, 1, 1] = sign
            return g, dg

        return branch

    def batch(X, sign):
        G = np.zeros((len(X), 2, 2))
        G[:, 0, 0] = 1.0
        G[:, 1, 1] = 1.0 + np.abs(X[:, 0])
        DG = np.zeros((len(X), 2, 2, 2))
        DG[:, 0, 1, 1] = sign
        return G, DG

    level, grad = _coord_level(0, 2)
    return PiecewiseMetric(
        name="toy-lipschitz",
        batch=batch,
        dim=2,
        signature="riemannian",
        branch_minus=make(-1.0),
        branch_plus=make(1.0),
        level=level,
        level_grad=grad,
        regularity="C^{0,1}",
        differentiable=False,
        lipschitz_constant_hint=1.0,
    )


def flat(dim: int = 2, signature: Signature = "riemannian") -> PiecewiseMetric:
    """Euclidean or Minkowski metric (time is coordinate 0); no interface."""
    if dim < 2:
        raise BadParameter("dim must be >= 2")
    eta = np.eye(dim)
    if signature == "lorentzian":
        eta[0, 0] = -1.0
    elif signature != "riemannian":
        raise BadParameter(f"unknown signature {signature!r}")
    zero = np.zeros((dim, dim, dim))

    def branch(x):
        return eta.copy(), zero.copy()

    def batch(X, sign):
        k = len(X)
        return np.broadcast_to(eta, (k, dim, dim)).copy(), np.zeros((k, dim, dim, dim))

    t_field = np.eye(dim)[0]
    return PiecewiseMetric(
        name="flat",
        batch=batch,
        dim=dim,
        signature=signature,
        branch_minus=branch,
        branch_plus=branch,
        level=lambda x: 1.0,
        level_grad=lambda x: np.zeros(dim),
        params={"dim": dim, "signature": signature},
        regularity="C^inf",
        time_orientation=(lambda x: t_field.copy()) if signature == "lorentzian" else None,
    )


_REGISTRY: dict[str, Callable[..., PiecewiseMetric]] = {
    "hw": lambda p: hw_riemannian(p["lambda"]),
    "hw-lorentzian": lambda p: hw_lorentzian(p["lambda"]),
    "bubble": lambda p: bubble(p["lambda"]),
    "toy-lipschitz": lambda p: lipschitz_toy(),
    "flat": lambda p: flat(int(p.get("dim", 2)), p.get("signature", "riemannian")),
}


def from_descriptor(desc: dict | str) -> PiecewiseMetric:
    """Rebuild a zoo metric from its JSON descriptor."""
    if isinstance(desc, str):
        desc = json.loads(desc)
    try:
        make = _REGISTRY[desc["name"]]
    except KeyError as exc:
        raise BadParameter(f"unknown metric {desc.get('name')!r}") from exc
    return make(desc.get("params", {}))
