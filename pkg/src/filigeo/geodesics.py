"""Geodesics of piecewise metrics as Filippov solutions of the first-order system.

The geodesic equation is written on phase space ``(x, v)`` as
``x' = v, v' = -Gamma(x)(v, v)`` with the Christoffel symbols of the branch on
the current side of the interface.  Because the interface only constrains
positions, the one-sided normal components coincide (both equal the normal
velocity), so a transversal hit is always a crossing and the carried-over
phase state is the C^1-matching of the two smooth branch geodesics.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate, optimize

from .errors import BadParameter, QuadratureFailure
from .filippov import PiecewiseField, Trajectory, integrate_filippov
from .metric_zoo import PiecewiseMetric, eval_metric, geodesic_acceleration, hw_riemannian

NULL_TOL = 1e-8

__all__ = [
    "PhaseState",
    "GeodesicRecord",
    "HWFamily",
    "geodesic_field",
    "geodesic_rhs",
    "shoot_geodesic",
    "hw_geodesic_family",
    "hw_initial_velocity",
    "tangent_norm",
    "NULL_TOL",
]


@dataclass(frozen=True)
class PhaseState:
    x: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float))
        object.__setattr__(self, "v", np.asarray(self.v, dtype=float))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.v))):
            raise BadParameter("phase state must be finite")

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.v])

    @classmethod
    def from_array(cls, y) -> "PhaseState":
        y = np.asarray(y, dtype=float)
        n = y.size // 2
        return cls(y[:n], y[n:])


def geodesic_field(m: PiecewiseMetric) -> PiecewiseField:
    """The 2n-dimensional phase-space field of the geodesic equation."""
    n = m.dim
    bm, bp = m.branch_minus, m.branch_plus

    def f_minus(y):
        return np.concatenate([y[n:], geodesic_acceleration(bm, y[:n], y[n:])])

    def f_plus(y):
        return np.concatenate([y[n:], geodesic_acceleration(bp, y[:n], y[n:])])

    zeros = np.zeros(n)
    margin = None
    if m.domain_margin is not None:
        dm = m.domain_margin

        def margin(y):
            return dm(y[:n])

    return PiecewiseField(
        f_minus=f_minus,
        f_plus=f_plus,
        level=lambda y: m.level(y[:n]),
        level_grad=lambda y: np.concatenate([m.level_grad(y[:n]), zeros]),
        domain_margin=margin,
        dim=2 * n,
        name=f"geodesics[{m.name}]",
    )


def geodesic_rhs(m: PiecewiseMetric, s: PhaseState, side=None) -> np.ndarray:
    """Phase velocity ``(v, -Gamma(v, v))`` on the branch chosen by ``side``."""
    chosen = m.side_of(s.x, side)
    eval_metric(m, s.x, chosen, check_signature=False)  # domain check
    branch = m.branch_minus if chosen == "minus" else m.branch_plus
    return np.concatenate([s.v, geodesic_acceleration(branch, s.x, s.v)])


@dataclass
class GeodesicRecord:
    metric: PiecewiseMetric
    trajectory: Trajectory
    norm_s: np.ndarray
    norm_trace: np.ndarray
    causal_character: str

    @property
    def dim(self) -> int:
        return self.metric.dim

    @property
    def termination(self) -> str:
        return self.trajectory.termination

    @property
    def events(self) -> list:
        return self.trajectory.events

    @property
    def s_end(self) -> float:
        return self.trajectory.t_end

    def state(self, s) -> np.ndarray:
        return self.trajectory(s)

    def position(self, s) -> np.ndarray:
        y = self.trajectory(s)
        return y[..., : self.dim]

    def velocity(self, s) -> np.ndarray:
        y = self.trajectory(s)
        return y[..., self.dim :]

    @property
    def norm_drift(self) -> float:
        return float(np.max(np.abs(self.norm_trace - self.norm_trace[0]))) if self.norm_trace.size else 0.0

    def to_csv(self, path, n: int = 200) -> None:
        ts, ys, _ = self.trajectory.sample(n)
        norms = _norms(self.metric, self.trajectory, ts, ys)
        d = self.dim
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["s", *[f"x{i + 1}" for i in range(d)], *[f"v{i + 1}" for i in range(d)], "norm"])
            for s, y, g in zip(ts, ys, norms):
                w.writerow([repr(float(s)), *[repr(float(c)) for c in y], repr(float(g))])

    def write_events(self, path) -> None:
        self.trajectory.write_events(path)


def _norms(m: PiecewiseMetric, traj: Trajectory, ts, ys) -> np.ndarray:
    n = m.dim
    out = np.empty(len(ts))
    for k, (s, y) in enumerate(zip(ts, ys)):
        side = traj.side_at(s)
        branch = m.branch_minus if side == "minus" else m.branch_plus
        g, _ = branch(y[:n])
        out[k] = y[n:] @ g @ y[n:]
    return out


def _character(m: PiecewiseMetric, values: np.ndarray, null_tol: float = NULL_TOL) -> str:
    if m.signature != "lorentzian":
        return "n/a"
    labels = set()
    for g in values:
        if abs(g) < null_tol:
            labels.add("null")
        elif g < 0:
            labels.add("timelike")
        else:
            labels.add("spacelike")
    if len(labels) == 1:
        return labels.pop()
    return "mixed"


def shoot_geodesic(
    m: PiecewiseMetric,
    p,
    v,
    s_span,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    event_tol: float = 1e-10,
    max_step: float = np.inf,
    normalize: bool = False,
    n_norm_samples: int = 200,
    method: str = "DOP853",
) -> GeodesicRecord:
    """Integrate the (Filippov) geodesic with ``gamma(s0) = p``, ``gamma'(s0) = v``.

    With ``normalize=True`` the initial velocity is rescaled so that
    ``|g(v, v)| = 1`` (arclength or eigentime); the parametrization stays
    affine.
    """
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if normalize:
        g0 = eval_metric(m, p, m.side_of(p, "plus"), check_signature=False).g
        nv = float(v @ g0 @ v)
        if abs(nv) < NULL_TOL:
            raise BadParameter("cannot normalize a null initial velocity")
        v = v / math.sqrt(abs(nv))
    else:
        eval_metric(m, p, check_signature=False)
    traj = integrate_filippov(
        geodesic_field(m),
        np.concatenate([p, v]),
        s_span,
        rtol=rtol,
        atol=atol,
        event_tol=event_tol,
        max_step=max_step,
        method=method,
    )
    if traj.segments:
        ts, ys, _ = traj.sample(n_norm_samples)
    else:
        ts, ys = np.array([traj.t_start]), np.array([traj.y_start])
    norms = _norms(m, traj, ts, ys)
    return GeodesicRecord(m, traj, ts, norms, _character(m, norms))


def tangent_norm(m: PiecewiseMetric, rec: GeodesicRecord, n: int = 400):
    """``g(gamma', gamma')`` along ``rec`` and its maximal deviation from the start value."""
    ts, ys, _ = rec.trajectory.sample(n)
    vals = _norms(m, rec.trajectory, ts, ys)
    return ts, vals, float(np.max(np.abs(vals - vals[0])))


# ---------------------------------------------------------------------------
# Hartman-Wintner family


@dataclass
class HWFamily:
    """Geodesic through the origin of the HW metric leaving at angle ``asin(sqrt(eps))``.

    ``s0`` is the arclength to the turning point ``(eps**(1/lam), y1)``;
    after it the curve is the mirror image in ``y = y1`` and returns to the
    axis at ``(0, 2 y1)`` at ``s = 2 s0``.
    """

    lam: float
    eps: float
    c: float
    s0: float
    y1: float
    x_turn: float
    quad_error: float = 0.0
    _curve: object = field(default=None, repr=False, compare=False)

    @property
    def turning_point(self) -> tuple[float, float]:
        return (self.x_turn, self.y1)

    @property
    def turning_velocity(self) -> tuple[float, float]:
        return (0.0, 1.0 / self.c)

    def to_json(self) -> dict:
        return {"lambda": self.lam, "eps": self.eps, "c": self.c, "s0": self.s0, "y1": self.y1}

    def points(self, s, sign: int = 1) -> np.ndarray:
        """Positions ``gamma_{+-eps}(s)`` for ``s`` in ``[0, 2 s0]``."""
        if self._curve is None:
            rec = shoot_geodesic(
                hw_riemannian(self.lam), [0.0, 0.0], hw_initial_velocity(self.eps), (0.0, self.s0), rtol=1e-12, atol=1e-14
            )
            self._curve = rec
        s = np.atleast_1d(np.asarray(s, dtype=float))
        if np.any(s < -1e-12) or np.any(s > 2 * self.s0 + 1e-12):
            raise BadParameter("s outside [0, 2 s0]")
        first = np.minimum(s, 2 * self.s0 - s)
        pos = self._curve.position(first)
        pos = np.atleast_2d(pos).copy()
        back = s > self.s0
        pos[back, 1] = 2 * self.y1 - pos[back, 1]
        pos[:, 0] *= sign
        return pos


def hw_initial_velocity(eps: float, sign: int = 1) -> np.ndarray:
    return np.array([sign * math.sqrt(eps), math.sqrt(1.0 - eps)])


def hw_geodesic_family(lam: float, eps: float) -> HWFamily:
    """Turning-point data of the HW geodesic with first integral ``c = sqrt(1 - eps)``.

    Arclength and height are integrated in ``x``; near the turning point
    ``x' ~ sqrt(x_turn - x)``, so the substitution ``x = x_turn - u**2``
    removes the endpoint singularity of ``ds/dx``.
    """
    lam, eps = float(lam), float(eps)
    if not 1.0 < lam < 2.0:
        raise BadParameter(f"lambda must lie in (1, 2), got {lam}")
    if not 0.0 < eps < 1.0:
        raise BadParameter(f"eps must lie in (0, 1), got {eps}")
    c = math.sqrt(1.0 - eps)
    xt = eps ** (1.0 / lam)
    umax = math.sqrt(xt)
    limit0 = 2.0 * math.sqrt(xt / (lam * eps))

    def ds(u):
        if u == 0.0:
            return limit0
        x = xt - u * u
        gap = -eps * math.expm1(lam * math.log1p(-u * u / xt))  # eps - x**lam
        return 2.0 * u * math.sqrt((1.0 - x**lam) / gap)

    def dy(u):
        x = xt - u * u
        return c / (1.0 - x**lam) * ds(u)

    opts = dict(epsabs=1e-15, epsrel=1e-13, limit=400, full_output=1)
    s0, e1, *info1 = integrate.quad(ds, 0.0, umax, **opts)
    y1, e2, *info2 = integrate.quad(dy, 0.0, umax, **opts)
    err = max(e1, e2)
    if len(info1) > 1 or len(info2) > 1 or err > 1e-10 * max(s0, 1.0):
        raise QuadratureFailure(f"quadrature did not converge (error estimate {err:.2e})")
    return HWFamily(lam=lam, eps=eps, c=c, s0=s0, y1=y1, x_turn=xt, quad_error=err)


def find_turning_point(rec: GeodesicRecord, component: int = 0, s_lo: float | None = None, s_hi: float | None = None):
    """First parameter where the velocity component changes sign, via Brent on the dense output."""
    n = rec.dim
    ts, ys, _ = rec.trajectory.sample(400)
    vc = ys[:, n + component]
    lo = s_lo if s_lo is not None else ts[0]
    hi = s_hi if s_hi is not None else ts[-1]
    sel = (ts >= lo) & (ts <= hi)
    ts, vc = ts[sel], vc[sel]
    idx = np.nonzero(np.sign(vc[:-1]) * np.sign(vc[1:]) < 0)[0]
    if idx.size == 0:
        return None
    a, b = ts[idx[0]], ts[idx[0] + 1]
    s_star = optimize.brentq(lambda s: rec.state(s)[n + component], a, b, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    return s_star, rec.state(s_star)
