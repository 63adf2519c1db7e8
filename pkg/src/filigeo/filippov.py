"""Filippov machinery for vector fields that are smooth off a hypersurface.

The field is given by two branches ``f_minus``/``f_plus`` and a level
function whose zero set ``N`` separates them.  Besides the set-valued map
approximation (:func:`filippov_hull`) this module provides the classification
of interface hits by the signs of the one-sided normal components, the
sliding vector field, and an event-driven integrator that strings smooth
branch solutions together across ``N``.
"""

from __future__ import annotations

import csv
import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Literal

import numpy as np
from scipy.integrate import DOP853, RK45
from scipy.spatial import ConvexHull, QhullError

from .errors import NotSliding

Kind = Literal["CrossUp", "CrossDown", "Sliding", "Repulsive", "Tangential"]
Termination = Literal["Completed", "DomainExit", "RepulsiveStop", "SlidingExit", "StepFailure"]
Side = Literal["minus", "plus", "interface"]

TAU_ONSURFACE = 1e-10
CHATTER_LIMIT = 50

__all__ = [
    "PiecewiseField",
    "HullApproximation",
    "InterfaceEvent",
    "Segment",
    "Trajectory",
    "filippov_hull",
    "classify_interface_hit",
    "sliding_field",
    "integrate_filippov",
    "continue_trajectory",
    "demo_field",
]


@dataclass(frozen=True)
class PiecewiseField:
    """Vector field on R^d that is smooth on each side of ``{level = 0}``."""

    f_minus: Callable[[np.ndarray], np.ndarray]
    f_plus: Callable[[np.ndarray], np.ndarray]
    level: Callable[[np.ndarray], float]
    dim: int
    level_grad: Callable[[np.ndarray], np.ndarray] | None = None
    domain_margin: Callable[[np.ndarray], float] | None = None
    name: str = "field"

    def grad(self, x: np.ndarray) -> np.ndarray:
        if self.level_grad is not None:
            return np.asarray(self.level_grad(x), dtype=float)
        h = 1e-7
        e = np.eye(self.dim)
        return np.array([(self.level(x + h * e[i]) - self.level(x - h * e[i])) / (2 * h) for i in range(self.dim)])

    def normal(self, x: np.ndarray) -> np.ndarray:
        g = self.grad(x)
        return g / np.linalg.norm(g)

    def branch(self, side: str) -> Callable[[np.ndarray], np.ndarray]:
        return self.f_minus if side == "minus" else self.f_plus

    def normal_components(self, x: np.ndarray) -> tuple[float, float]:
        n = self.normal(x)
        return float(n @ self.f_minus(x)), float(n @ self.f_plus(x))

    def __call__(self, x: np.ndarray) -> np.ndarray:
        phi = self.level(x)
        return self.f_plus(x) if phi >= 0 else self.f_minus(x)


# ---------------------------------------------------------------------------
# set-valued map


@dataclass
class HullApproximation:
    """Convex hull of field values sampled on ``B(center, radius)`` off ``N``.

    The hull is computed exactly inside the affine span of the samples when
    that span has dimension <= 3; otherwise it is represented by support
    function values over a fixed set of directions (an outer approximation).
    """

    center: np.ndarray
    radius: float
    vertices: np.ndarray
    origin: np.ndarray
    basis: np.ndarray  # (r, d) orthonormal rows spanning the affine hull
    equations: np.ndarray | None = None  # facets in basis coordinates
    interval: tuple[float, float] | None = None
    directions: np.ndarray | None = None
    support: np.ndarray | None = None

    @property
    def rank(self) -> int:
        return self.basis.shape[0]

    @property
    def diameter(self) -> float:
        v = self.vertices
        if len(v) < 2:
            return 0.0
        diff = v[:, None, :] - v[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    def contains(self, y, tol: float = 1e-9) -> bool:
        y = np.asarray(y, dtype=float)
        if self.support is not None:
            return bool(np.all(self.directions @ y <= self.support + tol))
        rel = y - self.origin
        coords = self.basis @ rel
        off = rel - self.basis.T @ coords
        if np.linalg.norm(off) > tol:
            return False
        if self.rank == 0:
            return True
        if self.rank == 1:
            lo, hi = self.interval
            return bool(lo - tol <= coords[0] <= hi + tol)
        return bool(np.all(self.equations[:, :-1] @ coords + self.equations[:, -1] <= tol))


def _sample_ball(rng: np.random.Generator, center: np.ndarray, radius: float, n: int) -> np.ndarray:
    d = center.size
    z = rng.standard_normal((n, d))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / d)
    return center + z * r[:, None]


def filippov_hull(
    f: PiecewiseField,
    x,
    delta: float,
    n_samples: int = 256,
    *,
    seed: int = 0,
    n_directions: int = 512,
) -> HullApproximation:
    """Approximate the Filippov set-valued map of ``f`` at ``x``.

    Samples lying on the interface (``|level| <= 1e-10``) are discarded, which
    realises the removal of null sets; every other sample is evaluated on the
    branch of its own side.
    """
    x = np.asarray(x, dtype=float)
    if delta <= 0:
        raise ValueError("delta must be positive")
    if n_samples < f.dim + 1:
        raise ValueError("need at least dim + 1 samples")
    rng = np.random.default_rng(seed)
    pts = _sample_ball(rng, x, delta, n_samples)
    # the sphere poles along the normal guarantee both sides are represented
    if abs(f.level(x)) <= delta * 1e3:
        nrm = f.normal(x)
        pts = np.vstack([pts, x + 0.5 * delta * nrm, x - 0.5 * delta * nrm])
    vals = []
    for p in pts:
        phi = f.level(p)
        if abs(phi) <= TAU_ONSURFACE:
            continue
        vals.append(f.f_plus(p) if phi > 0 else f.f_minus(p))
    vals = np.asarray(vals, dtype=float)

    origin = vals.mean(axis=0)
    centered = vals - origin
    scale = max(1.0, float(np.abs(vals).max()))
    _, s, vt = np.linalg.svd(centered, full_matrices=False)
    rank = int(np.sum(s > 1e-12 * scale * math.sqrt(len(vals))))
    basis = vt[:rank]

    hull = HullApproximation(center=x, radius=delta, vertices=vals, origin=origin, basis=basis)
    if rank == 0:
        hull.vertices = vals[:1]
        return hull
    coords = centered @ basis.T
    if rank == 1:
        c = coords[:, 0]
        hull.interval = (float(c.min()), float(c.max()))
        hull.vertices = vals[[int(np.argmin(c)), int(np.argmax(c))]]
        return hull
    if rank <= 3:
        try:
            ch = ConvexHull(coords)
        except QhullError:
            ch = None
        if ch is not None:
            hull.equations = ch.equations
            hull.vertices = vals[ch.vertices]
            return hull
    dirs = rng.standard_normal((n_directions, f.dim))
    dirs = np.vstack([dirs / np.linalg.norm(dirs, axis=1, keepdims=True), np.eye(f.dim), -np.eye(f.dim)])
    hull.directions = dirs
    hull.support = (vals @ dirs.T).max(axis=0)
    return hull


# ---------------------------------------------------------------------------
# classification and sliding


def classify_interface_hit(fN_minus: float, fN_plus: float, tol: float = 1e-9) -> Kind:
    """Label an interface hit by the signs of the one-sided normal components."""
    if tol < 0:
        raise ValueError("tol must be nonnegative")
    if abs(fN_minus) <= tol or abs(fN_plus) <= tol:
        return "Tangential"
    if fN_minus > 0 and fN_plus > 0:
        return "CrossUp"
    if fN_minus < 0 and fN_plus < 0:
        return "CrossDown"
    if fN_plus > 0:
        return "Repulsive"
    return "Sliding"


def _convex_weight(fN_minus: float, fN_plus: float) -> float:
    den = fN_minus - fN_plus
    if abs(den) < 1e-300:
        return 0.5
    return min(1.0, max(0.0, fN_minus / den))


def sliding_field(f: PiecewiseField, x, tol: float = 1e-9) -> np.ndarray:
    """Filippov convex combination of ``f_minus``/``f_plus`` tangent to ``N``."""
    x = np.asarray(x, dtype=float)
    fm, fp = f.f_minus(x), f.f_plus(x)
    n = f.normal(x)
    nm, np_ = float(n @ fm), float(n @ fp)
    if classify_interface_hit(nm, np_, tol) != "Sliding":
        raise NotSliding(f"no sliding motion at {x}: fN- = {nm:.3g}, fN+ = {np_:.3g}")
    alpha = nm / (nm - np_)
    return alpha * fp + (1.0 - alpha) * fm


# ---------------------------------------------------------------------------
# trajectories


@dataclass
class InterfaceEvent:
    t_event: float
    x_event: np.ndarray
    fN_minus: float
    fN_plus: float
    kind: Kind
    action: str = ""

    def to_json(self) -> dict:
        return {
            "t": float(self.t_event),
            "point": [float(v) for v in self.x_event],
            "fN_minus": float(self.fN_minus),
            "fN_plus": float(self.fN_plus),
            "kind": self.kind,
            "action": self.action,
        }


@dataclass
class Segment:
    """Dense output of one smooth piece; ``side`` is the branch integrated."""

    side: Side
    breaks: list = field(default_factory=list)
    pieces: list = field(default_factory=list)

    @property
    def t0(self) -> float:
        return self.breaks[0]

    @property
    def t1(self) -> float:
        return self.breaks[-1]

    def add(self, t_old: float, t_new: float, interp) -> None:
        if not self.breaks:
            self.breaks.append(t_old)
        self.breaks.append(t_new)
        self.pieces.append(interp)

    def __call__(self, t: float) -> np.ndarray:
        i = int(np.searchsorted(self.breaks, t, side="right")) - 1
        i = min(max(i, 0), len(self.pieces) - 1)
        return np.asarray(self.pieces[i](t), dtype=float)


@dataclass
class Trajectory:
    dim: int
    t_span: tuple[float, float]
    segments: list = field(default_factory=list)
    events: list = field(default_factory=list)
    termination: Termination = "Completed"
    message: str = ""
    continuations: list = field(default_factory=list)
    y_start: np.ndarray | None = None
    y_stop: np.ndarray | None = None

    @property
    def t_start(self) -> float:
        return self.t_span[0]

    @property
    def t_end(self) -> float:
        return self.segments[-1].t1 if self.segments else self.t_span[0]

    def _segment_at(self, t: float) -> Segment:
        for seg in self.segments:
            if t <= seg.t1:
                return seg
        return self.segments[-1]

    def __call__(self, t):
        if not self.segments:
            if np.ndim(t) == 0:
                return self.y_start.copy()
            return np.tile(self.y_start, (len(t), 1))
        if np.ndim(t) == 0:
            return self._segment_at(float(t))(float(t))
        return np.array([self._segment_at(float(s))(float(s)) for s in t])

    def side_at(self, t: float) -> Side:
        return self._segment_at(t).side if self.segments else "interface"

    def sample(self, n: int = 200, include_breaks: bool = True):
        """Return ``(t, X, sides)`` on a uniform grid plus segment/event breakpoints."""
        ts = np.linspace(self.t_start, self.t_end, n)
        if include_breaks:
            extra = [b for seg in self.segments for b in (seg.t0, seg.t1)]
            ts = np.unique(np.concatenate([ts, extra]))
        return ts, self(ts), [self.side_at(t) for t in ts]

    def events_json(self) -> list:
        return [e.to_json() for e in self.events]

    def to_csv(self, path, n: int = 200, names: list[str] | None = None) -> None:
        ts, xs, sides = self.sample(n)
        names = names or [f"x{i + 1}" for i in range(self.dim)]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", *names, "side"])
            for t, x, s in zip(ts, xs, sides):
                w.writerow([repr(float(t)), *[repr(float(v)) for v in x], s])

    def write_events(self, path) -> None:
        payload = {"termination": self.termination, "events": self.events_json(), "continuations": [
            {"side": c["side"], "point": [float(v) for v in c["point"]], "direction": [float(v) for v in c["direction"]]}
            for c in self.continuations
        ]}
        with open(path, "w") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# integrator


def _curvature(f: PiecewiseField, fs: Callable, x: np.ndarray) -> float:
    """Second derivative of ``level`` along the flow of ``fs`` at ``x``."""
    v = fs(x)
    nv = float(np.linalg.norm(v))
    if nv == 0.0:
        return 0.0
    eta = 1e-6 / max(nv, 1.0)

    def h(y):
        return float(f.normal(y) @ fs(y))

    return (h(x + eta * v) - h(x - eta * v)) / (2 * eta)


def _decide(f: PiecewiseField, x: np.ndarray, tol: float):
    """Choose how to continue from a point on N.

    Returns ``(mode, kind, fN_minus, fN_plus, stop)`` where ``mode`` is one
    of ``minus``, ``plus``, ``sliding``, ``tangent`` and ``stop`` names a
    termination if the trajectory cannot be continued.
    """
    fNm, fNp = f.normal_components(x)
    kind = classify_interface_hit(fNm, fNp, tol)
    if kind == "CrossUp":
        return "plus", kind, fNm, fNp, None
    if kind == "CrossDown":
        return "minus", kind, fNm, fNp, None
    if kind == "Sliding":
        return "sliding", kind, fNm, fNp, None
    if kind == "Repulsive":
        return None, kind, fNm, fNp, "RepulsiveStop"
    cp = _curvature(f, f.f_plus, x) if abs(fNp) <= tol else 0.0
    cm = _curvature(f, f.f_minus, x) if abs(fNm) <= tol else 0.0
    enter_plus = fNp > tol or (abs(fNp) <= tol and cp > tol)
    enter_minus = fNm < -tol or (abs(fNm) <= tol and cm < -tol)
    if enter_plus and enter_minus:
        return None, kind, fNm, fNp, "RepulsiveStop"
    if enter_plus:
        return "plus", kind, fNm, fNp, None
    if enter_minus:
        return "minus", kind, fNm, fNp, None
    if max(abs(fNm), abs(fNp), abs(cp), abs(cm)) <= tol:
        # both one-sided flows are tangent to N to second order: stay in N
        return "tangent", kind, fNm, fNp, None
    return None, kind, fNm, fNp, "SlidingExit"


def _bisect(sol, g, ta: float, tb: float, tol: float) -> tuple[float, float]:
    while tb - ta > tol:
        tm = 0.5 * (ta + tb)
        if g(sol(tm)) < 0:
            tb = tm
        else:
            ta = tm
    return ta, tb


_SOLVERS = {"DOP853": DOP853, "RK45": RK45}


def integrate_filippov(
    f: PiecewiseField,
    x0,
    t_span,
    *,
    rtol: float = 1e-10,
    atol: float = 1e-12,
    event_tol: float = 1e-10,
    max_step: float = np.inf,
    tol: float = 1e-9,
    method: str = "DOP853",
    initial_side: Literal["minus", "plus"] | None = None,
    max_events: int = 10_000,
    stabilization: float = 10.0,
) -> Trajectory:
    """Integrate a Filippov solution of ``x' = f(x)`` over ``t_span``.

    Between interface hits the active branch is integrated with an adaptive
    Runge-Kutta method; a sign change of the level function within a step is
    localised by bisection on the step's dense output to ``event_tol``.  At a
    hit the state is carried over unchanged, which for second-order systems
    is exactly the C^1-matching of position and velocity.
    """
    t0, tf = float(t_span[0]), float(t_span[1])
    x = np.asarray(x0, dtype=float).copy()
    traj = Trajectory(dim=f.dim, t_span=(t0, tf), y_start=x.copy())
    solver_cls = _SOLVERS[method]
    recent: deque = deque()
    window = max_step if np.isfinite(max_step) else max((tf - t0) * 1e-3, event_tol * 1e3)
    tol_exit = 10.0 * tol

    def finish(term: Termination, msg: str = "", xs=None) -> Trajectory:
        traj.termination = term
        traj.message = msg
        traj.y_stop = x.copy() if xs is None else xs
        return traj

    if f.domain_margin is not None and f.domain_margin(x) <= 0:
        return finish("DomainExit", "initial point outside domain")

    t = t0
    phi = f.level(x)
    if initial_side is not None:
        mode = initial_side
    elif abs(phi) > TAU_ONSURFACE:
        mode = "plus" if phi > 0 else "minus"
    else:
        mode, kind, fNm, fNp, stop = _decide(f, x, tol)
        traj.events.append(InterfaceEvent(t, x.copy(), fNm, fNp, kind, action=stop or mode))
        if stop:
            _add_continuations(traj, f, x, stop)
            return finish(stop, f"{kind} at initial point")

    while t < tf:
        if mode in ("minus", "plus"):
            sgn = 1.0 if mode == "plus" else -1.0
            fun_branch = f.branch(mode)

            def rhs(_t, y, _fb=fun_branch):
                return _fb(y)

            triggers = [("interface", lambda y, s=sgn: s * f.level(y))]
        else:
            weighted = mode == "sliding"

            def rhs(_t, y, _w=weighted):
                fm, fp = f.f_minus(y), f.f_plus(y)
                n = f.normal(y)
                if _w:
                    a = _convex_weight(float(n @ fm), float(n @ fp))
                    return a * fp + (1.0 - a) * fm - stabilization * f.level(y) * n
                # tangent mode: both normal components are below tol, drop the
                # residual so a non-Lipschitz field cannot oscillate across N
                avg = 0.5 * (fm + fp)
                return avg - (float(n @ avg) + stabilization * f.level(y)) * n

            if weighted:
                triggers = [
                    ("exit-minus", lambda y: f.normal_components(y)[0]),
                    ("exit-plus", lambda y: -f.normal_components(y)[1]),
                ]
            else:
                triggers = [
                    ("leave-minus", lambda y: tol_exit - abs(f.normal_components(y)[0])),
                    ("leave-plus", lambda y: tol_exit - abs(f.normal_components(y)[1])),
                ]
        if f.domain_margin is not None:
            triggers.append(("domain", f.domain_margin))

        rhs = _finite(rhs)
        seg = Segment(side=mode if mode in ("minus", "plus") else "interface")
        traj.segments.append(seg)
        try:
            solver = solver_cls(rhs, t, x, tf, rtol=rtol, atol=atol, max_step=max_step)
        except Exception as exc:  # noqa: BLE001 - any RHS failure ends the run
            return finish("StepFailure", f"cannot start solver: {exc}")
        armed = [g(x) >= 0 for _, g in triggers]
        hit = None
        while solver.status == "running":
            t_old, y_old = solver.t, solver.y.copy()
            try:
                msg = solver.step()
            except Exception as exc:  # noqa: BLE001
                _drop_empty(traj)
                return finish("StepFailure", f"step failed at t={t_old:.6g}: {exc}", y_old)
            if solver.status == "failed" or not np.all(np.isfinite(solver.y)):
                _drop_empty(traj)
                return finish("StepFailure", f"step failed at t={t_old:.6g}: {msg}", y_old)
            t_new, y_new = solver.t, solver.y
            sol = solver.dense_output()
            first = None
            for k, (name, g) in enumerate(triggers):
                val = g(y_new)
                if not armed[k]:
                    armed[k] = val >= 0
                    continue
                if val < 0:
                    _, tb = _bisect(sol, g, t_old, t_new, event_tol)
                    if first is None or tb < first[1]:
                        first = (name, tb)
            if first is not None:
                name, tb = first
                seg.add(t_old, tb, sol)
                t, x = tb, np.asarray(sol(tb), dtype=float)
                hit = name
                break
            seg.add(t_old, t_new, sol)
            t, x = t_new, y_new.copy()
        _drop_empty(traj)

        if hit is None:
            break
        if hit == "domain":
            return finish("DomainExit", f"left the coordinate domain at t={t:.10g}")

        # interface logic
        recent.append(t)
        while recent and recent[0] < t - window:
            recent.popleft()
        if len(traj.events) >= max_events:
            return finish("StepFailure", "too many interface events")
        if hit == "exit-minus":
            fNm, fNp = f.normal_components(x)
            traj.events.append(InterfaceEvent(t, x.copy(), fNm, fNp, classify_interface_hit(fNm, fNp, tol), "exit-minus"))
            mode = "minus"
            continue
        if hit == "exit-plus":
            fNm, fNp = f.normal_components(x)
            traj.events.append(InterfaceEvent(t, x.copy(), fNm, fNp, classify_interface_hit(fNm, fNp, tol), "exit-plus"))
            mode = "plus"
            continue
        new_mode, kind, fNm, fNp, stop = _decide(f, x, tol)
        if len(recent) > CHATTER_LIMIT and stop is None and new_mode in ("minus", "plus"):
            a = _convex_weight(fNm, fNp)
            if fNm > 0 > fNp or 0.0 < a < 1.0:
                new_mode, kind = "sliding", "Sliding"
            else:
                traj.events.append(InterfaceEvent(t, x.copy(), fNm, fNp, kind, "chattering"))
                return finish("SlidingExit", "chattering without a sliding selection")
        traj.events.append(InterfaceEvent(t, x.copy(), fNm, fNp, kind, action=stop or new_mode))
        if stop:
            _add_continuations(traj, f, x, stop)
            return finish(stop, f"{kind} hit at t={t:.10g}")
        mode = new_mode

    return finish("Completed")


def _finite(rhs):
    # a NaN slope would make the step-size controller loop forever
    def wrapped(t, y):
        v = rhs(t, y)
        if not np.all(np.isfinite(v)):
            raise FloatingPointError(f"non-finite field value at t={t:.6g}")
        return v

    return wrapped


def _drop_empty(traj: Trajectory) -> None:
    if traj.segments and not traj.segments[-1].pieces:
        traj.segments.pop()


def _add_continuations(traj: Trajectory, f: PiecewiseField, x: np.ndarray, stop: str) -> None:
    if stop != "RepulsiveStop":
        return
    traj.continuations = [
        {"side": "minus", "point": x.copy(), "direction": np.asarray(f.f_minus(x), dtype=float)},
        {"side": "plus", "point": x.copy(), "direction": np.asarray(f.f_plus(x), dtype=float)},
    ]


def continue_trajectory(f: PiecewiseField, traj: Trajectory, side: Literal["minus", "plus"], t_end: float, **opts) -> Trajectory:
    """Follow one of the admissible continuations after a repulsive stop."""
    x = traj.y_stop if traj.y_stop is not None else traj(traj.t_end)
    return integrate_filippov(f, x, (traj.t_end, t_end), initial_side=side, **opts)


# ---------------------------------------------------------------------------
# one-dimensional demonstration fields


def demo_field(name: str) -> PiecewiseField:
    """Scalar fields used to exercise the three generic interface behaviours.

    ``crossing``: x' = 1 + sgn(x)/2; ``sliding``: x' = -sgn(x);
    ``repulsive``: x' = sgn(x).
    """
    table = {
        "crossing": (0.5, 1.5),
        "sliding": (1.0, -1.0),
        "repulsive": (-1.0, 1.0),
    }
    try:
        vm, vp = table[name]
    except KeyError as exc:
        raise ValueError(f"unknown demo field {name!r}") from exc
    return PiecewiseField(
        f_minus=lambda x, v=vm: np.array([v]),
        f_plus=lambda x, v=vp: np.array([v]),
        level=lambda x: float(x[0]),
        level_grad=lambda x: np.array([1.0]),
        dim=1,
        name=name,
    )
