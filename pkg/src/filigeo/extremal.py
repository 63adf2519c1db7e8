"""Discrete length functional, energy minimisation, BVP shooting, du Bois-Reymond check."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize
from scipy.interpolate import CubicSpline
from scipy.linalg import solve_banded

from .errors import BadParameter, InterfaceOnCurve, NoConvergence, NonCausalSegment
from .geodesics import GeodesicRecord, shoot_geodesic
from .metric_zoo import TAU_ONSURFACE, PiecewiseMetric, eval_many, eval_metric

__all__ = [
    "Polyline",
    "BvpSolution",
    "BvpSolutionSet",
    "DbrResult",
    "curve_length",
    "segment_norms",
    "discrete_energy",
    "minimize_bvp",
    "seed_polyline",
    "orthonormal_frame",
    "geodesic_bvp_shooting",
    "dbr_residual",
]


@dataclass
class Polyline:
    """Nodes ``nodes[0..N]`` on the uniform parameter grid of ``[a, b]``."""

    nodes: np.ndarray
    a: float = 0.0
    b: float = 1.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        if self.nodes.ndim != 2 or len(self.nodes) < 2:
            raise BadParameter("a polyline needs at least two nodes")

    @property
    def n_segments(self) -> int:
        return len(self.nodes) - 1

    @property
    def param(self) -> np.ndarray:
        return np.linspace(self.a, self.b, len(self.nodes))

    @property
    def dt(self) -> float:
        return (self.b - self.a) / self.n_segments

    def to_csv(self, path) -> None:
        n = self.nodes.shape[1]
        header = ",".join(["t", *[f"x{i + 1}" for i in range(n)]])
        np.savetxt(path, np.column_stack([self.param, self.nodes]), delimiter=",", header=header, comments="")


def _midpoints(nodes: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return 0.5 * (nodes[1:] + nodes[:-1]), np.diff(nodes, axis=0)


def segment_norms(m: PiecewiseMetric, c: Polyline) -> np.ndarray:
    """``g(Delta, Delta)`` of every chord, with ``g`` taken at the chord midpoint."""
    mid, d = _midpoints(c.nodes)
    G, _ = eval_many(m, mid)
    return np.einsum("ki,kij,kj->k", d, G, d)


def curve_length(m: PiecewiseMetric, c: Polyline, *, causal_slack: float = 1e-13) -> float:
    """Midpoint-rule length; Lorentzian polylines must be causal chord by chord."""
    q = segment_norms(m, c)
    if m.signature == "riemannian":
        return float(np.sqrt(np.maximum(q, 0.0)).sum())
    d = np.diff(c.nodes, axis=0)
    scale = np.einsum("ki,ki->k", d, d)
    bad = np.nonzero(q > causal_slack * np.maximum(scale, 1e-300))[0]
    if bad.size:
        raise NonCausalSegment(f"segment {int(bad[0])} is spacelike (g = {q[bad[0]]:.3g})")
    return float(np.sqrt(np.maximum(-q, 0.0)).sum())


def discrete_energy(m: PiecewiseMetric, nodes: np.ndarray, dt: float) -> tuple[float, np.ndarray]:
    """``sum g(Delta, Delta) / dt`` and its gradient with respect to all nodes."""
    mid, d = _midpoints(nodes)
    G, DG = eval_many(m, mid)
    gd = np.einsum("kij,kj->ki", G, d)
    e = float(np.einsum("ki,ki->", gd, d)) / dt
    dq = 0.5 * np.einsum("kmij,ki,kj->km", DG, d, d)
    grad = np.zeros_like(nodes)
    grad[1:] += (2.0 * gd + dq) / dt
    grad[:-1] += (-2.0 * gd + dq) / dt
    return e, grad


def seed_polyline(p, q, n_segments: int, kind: str = "straight", bend: float = 0.3) -> np.ndarray:
    """Straight chord, or a circular-arc-like bulge to the left/right of it."""
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    t = np.linspace(0.0, 1.0, n_segments + 1)[:, None]
    nodes = p + t * (q - p)
    if kind == "straight":
        return nodes
    if kind not in ("left", "right"):
        raise BadParameter(f"unknown seed {kind!r}")
    d = q - p
    length = float(np.linalg.norm(d))
    if length == 0.0:
        return nodes
    perp = np.zeros_like(d)
    # rotate the chord in the plane of its first two coordinates
    perp[0], perp[1] = -d[1], d[0]
    if np.linalg.norm(perp) == 0.0:
        perp[1] = length
    perp /= np.linalg.norm(perp)
    sgn = -1.0 if kind == "right" else 1.0
    return nodes + sgn * bend * length * np.sin(np.pi * t) * perp


def _laplacian_solve(r: np.ndarray, dt: float) -> np.ndarray:
    """Apply the inverse of the flat-metric energy Hessian to interior rows."""
    k = r.shape[0]
    ab = np.zeros((3, k))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    ab[2, :-1] = -1.0
    return solve_banded((1, 1), ab, r) * (dt / 2.0)


def minimize_bvp(
    m: PiecewiseMetric,
    p,
    q,
    n_segments: int = 128,
    *,
    seeds=("straight",),
    max_iters: int = 5000,
    grad_tol: float = 1e-9,
    bend: float = 0.3,
) -> Polyline:
    """Local minimiser of the discrete energy between fixed endpoints.

    Each seed is descended with preconditioned Polak-Ribiere conjugate
    gradients and Armijo backtracking; the polyline of least length among the
    converged runs is returned.  Seeds are ``"straight"``, ``"left"``,
    ``"right"`` or explicit node arrays.
    """
    if m.signature != "riemannian":
        raise BadParameter("minimize_bvp needs a Riemannian metric")
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    dt = 1.0 / n_segments
    if np.array_equal(p, q):
        return Polyline(np.tile(p, (n_segments + 1, 1)), info={"length": 0.0, "grad_norm": 0.0, "iterations": 0})

    best = None
    failures = []
    for seed in seeds:
        nodes0 = seed_polyline(p, q, n_segments, seed, bend) if isinstance(seed, str) else np.asarray(seed, dtype=float)
        if nodes0.shape != (n_segments + 1, p.size):
            raise BadParameter("seed polyline has the wrong shape")
        try:
            nodes, gnorm, its, energy = _ncg(m, nodes0.copy(), dt, max_iters, grad_tol)
        except NoConvergence as exc:
            failures.append(str(exc))
            continue
        poly = Polyline(nodes, info={"grad_norm": gnorm, "iterations": its, "energy": energy,
                                     "seed": seed if isinstance(seed, str) else "custom"})
        poly.info["length"] = curve_length(m, poly)
        if best is None or poly.info["length"] < best.info["length"]:
            best = poly
    if best is None:
        raise NoConvergence("; ".join(failures))
    return best


WOLFE_ROUNDOFF = 1e-10


def _ncg(m, nodes, dt, max_iters, grad_tol):
    def feasible(x):
        if m.domain_margin is None:
            return True
        return all(m.domain_margin(y) > 0 for y in x)

    e, g = discrete_energy(m, nodes, dt)
    gi = g[1:-1]
    z = _laplacian_solve(gi, dt)
    d = -z
    alpha = 1.0
    for it in range(max_iters):
        gnorm = float(np.abs(gi).max())
        if gnorm < grad_tol:
            return nodes, gnorm, it, e
        slope = float(np.sum(gi * d))
        if slope >= 0:
            d = -z
            slope = float(np.sum(gi * d))
        step = min(1.0, 2.0 * alpha)
        secants = 0
        while True:
            trial = nodes.copy()
            trial[1:-1] += step * d
            if feasible(trial):
                e_new, g_new = discrete_energy(m, trial, dt)
                if e_new <= e + 1e-4 * step * slope and e_new < e:
                    break
                if e_new <= e + WOLFE_ROUNDOFF * abs(e):
                    # energy differences are at rounding level: decide on the
                    # directional derivative instead (approximate Wolfe test)
                    dslope = float(np.sum(g_new[1:-1] * d))
                    if 0.9 * slope <= dslope <= -0.8 * slope:
                        break
                    if dslope > slope and secants < 20:
                        secants += 1
                        step *= slope / (slope - dslope)
                        continue
            step *= 0.5
            if step < 1e-14:
                if gnorm < 10 * grad_tol:
                    return nodes, gnorm, it, e
                raise NoConvergence(f"line search stalled at |grad| = {gnorm:.3e}")
        alpha = step
        nodes, e = trial, e_new
        gi_new = g_new[1:-1]
        z_new = _laplacian_solve(gi_new, dt)
        beta = max(0.0, float(np.sum(gi_new * (z_new - z))) / float(np.sum(gi * z)))
        d = -z_new + beta * d
        gi, z = gi_new, z_new
    gnorm = float(np.abs(gi).max())
    if gnorm < grad_tol:
        return nodes, gnorm, max_iters, e
    raise NoConvergence(f"no convergence after {max_iters} iterations (|grad| = {gnorm:.3e})")


# ---------------------------------------------------------------------------
# shooting


@dataclass
class BvpSolution:
    direction: np.ndarray  # unit initial velocity in coordinates
    frame_params: np.ndarray
    length: float
    miss: float
    record: GeodesicRecord

    def to_json(self) -> dict:
        return {"direction": [float(v) for v in self.direction], "length": float(self.length), "miss": float(self.miss)}


@dataclass
class BvpSolutionSet:
    solutions: list
    dedup_radius: float
    p: np.ndarray
    q: np.ndarray

    def __len__(self) -> int:
        return len(self.solutions)

    def __iter__(self):
        return iter(self.solutions)

    def closest(self, direction) -> BvpSolution:
        direction = np.asarray(direction, dtype=float)
        return min(self.solutions, key=lambda s: float(np.linalg.norm(s.direction - direction)))

    def to_json(self) -> dict:
        return {"solutions": [s.to_json() for s in self.solutions]}


def orthonormal_frame(m: PiecewiseMetric, p, toward) -> np.ndarray:
    """Rows ``e_0..e_{n-1}`` orthonormal for ``g(p)`` with ``e_0`` along ``toward``.

    In Lorentzian signature ``toward`` must be timelike and future pointing;
    ``e_0`` is then the unit timelike vector and the rest are spacelike.
    """
    g = eval_metric(m, p, m.side_of(p, "plus"), check_signature=False).g
    n = m.dim
    first = np.asarray(toward, dtype=float)
    cand = [first] + [e for e in np.eye(n)]
    frame = []
    for v in cand:
        w = v.copy()
        for e in frame:
            w = w - (w @ g @ e) / (e @ g @ e) * e
        nn = float(w @ g @ w)
        if abs(nn) < 1e-12 * max(1.0, float(v @ v)):
            continue
        frame.append(w / math.sqrt(abs(nn)))
        if len(frame) == n:
            break
    return np.array(frame)


def _unit_velocity(m: PiecewiseMetric, frame: np.ndarray, params: np.ndarray) -> np.ndarray:
    """Unit initial velocity from ``n-1`` frame parameters (angle or boost components)."""
    n = m.dim
    if m.signature == "lorentzian":
        w = np.asarray(params, dtype=float)
        return math.sqrt(1.0 + float(w @ w)) * frame[0] + w @ frame[1:]
    if n == 2:
        th = float(params[0])
        return math.cos(th) * frame[0] + math.sin(th) * frame[1]
    w = np.asarray(params, dtype=float)
    return (frame[0] + w @ frame[1:]) / math.sqrt(1.0 + float(w @ w))


def _seed_grid(m: PiecewiseMetric, angle_grid: int, radii=(0.125, 0.25, 0.4, 0.6, 0.85, 1.2)):
    """Initial-direction parameters and the neighbour lists of the grid graph."""
    d = m.dim - 1
    if m.signature == "riemannian" and d == 1:
        seeds = [np.array([2.0 * np.pi * k / angle_grid]) for k in range(angle_grid)]
        nbrs = [[(k - 1) % angle_grid, (k + 1) % angle_grid] for k in range(angle_grid)]
        return seeds, nbrs
    if d == 1:
        w = np.concatenate([-np.asarray(radii)[::-1], [0.0], radii])
        seeds = [np.array([v]) for v in w]
        nbrs = [[j for j in (i - 1, i + 1) if 0 <= j < len(w)] for i in range(len(w))]
        return seeds, nbrs
    # polar grid in the first two frame parameters, centre first
    seeds = [np.zeros(d)]
    nbrs = [[]]
    nr = len(radii)
    index = lambda i, k: 1 + i * angle_grid + (k % angle_grid)  # noqa: E731
    for i, r in enumerate(radii):
        for k in range(angle_grid):
            ang = 2.0 * np.pi * k / angle_grid
            u = np.zeros(d)
            u[0], u[1] = r * math.cos(ang), r * math.sin(ang)
            seeds.append(u)
            nb = [index(i, k - 1), index(i, k + 1)]
            nb.append(0 if i == 0 else index(i - 1, k))
            if i + 1 < nr:
                nb.append(index(i + 1, k))
            nbrs.append(nb)
            if i == 0:
                nbrs[0].append(index(0, k))
    return seeds, nbrs


def geodesic_bvp_shooting(
    m: PiecewiseMetric,
    p,
    q,
    total_s: float,
    angle_grid: int = 64,
    bvp_tol: float = 1e-9,
    *,
    dedup_radius: float = 1e-3,
    rtol: float = 1e-11,
    atol: float = 1e-13,
    max_newton: int = 40,
    promising: float = 0.5,
    max_candidates: int = 12,
) -> BvpSolutionSet:
    """All unit-speed geodesics from ``p`` to ``q`` found from a grid of initial directions.

    Each direction is shot over ``[0, total_s]`` and scored by its closest
    approach to ``q``.  Directions that are grid-local minima of the miss
    distance and closer than ``promising * |q - p|`` are refined by damped
    Newton iteration on ``(direction, length)`` with a finite-difference
    Jacobian.  Converged solutions are deduplicated by initial direction.
    """
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    n = m.dim
    chord = q - p
    scale = float(np.linalg.norm(chord))
    frame = orthonormal_frame(m, p, chord)
    if m.signature == "lorentzian":
        g0 = eval_metric(m, p, m.side_of(p, "plus"), check_signature=False).g
        if float(chord @ g0 @ chord) >= 0:
            raise BadParameter("Lorentzian shooting needs a timelike chord q - p")
        tf = m.time_orientation(p) if m.time_orientation is not None else np.eye(n)[0]
        if float(frame[0] @ g0 @ tf) > 0:
            frame[0] = -frame[0]

    def shoot(params, s_end):
        v = _unit_velocity(m, frame, params)
        return shoot_geodesic(m, p, v, (0.0, s_end), rtol=rtol, atol=atol, n_norm_samples=16)

    def closest(rec):
        ts = np.linspace(0.0, rec.s_end, 401)
        pts = rec.position(ts)
        dist = np.linalg.norm(pts - q, axis=1)
        k = int(np.argmin(dist))
        lo, hi = ts[max(k - 1, 0)], ts[min(k + 1, len(ts) - 1)]
        if hi > lo:
            r = optimize.minimize_scalar(lambda s: float(np.linalg.norm(rec.position(s) - q)), bounds=(lo, hi),
                                         method="bounded", options={"xatol": 1e-12})
            if r.fun < dist[k]:
                return float(r.x), float(r.fun)
        return float(ts[k]), float(dist[k])

    seeds, nbrs = _seed_grid(m, angle_grid)
    scored = []
    for prm in seeds:
        rec = shoot(prm, total_s)
        if rec.s_end <= 0:
            scored.append((prm, 0.0, np.inf))
            continue
        s_star, miss = closest(rec)
        scored.append((prm, s_star, miss))

    # grid-local minima of the miss distance are the promising directions
    cand = [
        c for c, nb in zip(scored, nbrs)
        if c[2] < promising * scale and all(c[2] <= scored[j][2] for j in nb)
    ]
    cand.sort(key=lambda c: c[2])
    cand = cand[:max_candidates]

    found: list[BvpSolution] = []

    def residual(z):
        rec = shoot(z[:-1], max(z[-1], 1e-12))
        return rec.position(z[-1]) - q if rec.s_end >= z[-1] - 1e-12 else np.full(n, np.inf)

    for prm, s_star, miss in cand:
        z = np.concatenate([prm, [s_star]])
        r = residual(z)
        res = float(np.linalg.norm(r))
        for _ in range(max_newton):
            if res <= bvp_tol:
                break
            h = 1e-7
            J = np.empty((n, n))
            for j in range(n):
                zp = z.copy()
                zp[j] += h
                J[:, j] = (residual(zp) - r) / h
            if not np.all(np.isfinite(J)):
                break
            step = np.linalg.lstsq(J, -r, rcond=None)[0]
            lam = 1.0
            improved = False
            while lam > 1e-4:
                zt = z + lam * step
                rt = residual(zt)
                rn = float(np.linalg.norm(rt))
                if np.isfinite(rn) and rn < res:
                    z, r, res = zt, rt, rn
                    improved = True
                    break
                lam *= 0.5
            if not improved:
                break
        if res > bvp_tol:
            continue
        v = _unit_velocity(m, frame, z[:-1])
        if any(np.linalg.norm(v - s.direction) < dedup_radius for s in found):
            continue
        rec = shoot_geodesic(m, p, v, (0.0, z[-1]), rtol=rtol, atol=atol)
        found.append(BvpSolution(direction=v, frame_params=z[:-1].copy(), length=float(z[-1]), miss=res, record=rec))
    found.sort(key=lambda s: s.length)
    return BvpSolutionSet(found, dedup_radius, p, q)


# ---------------------------------------------------------------------------
# du Bois-Reymond residual


@dataclass
class DbrResult:
    s: np.ndarray
    residual: np.ndarray  # (k, n): F_{x'^i} - int F_{x^i}
    deviation: np.ndarray  # per coordinate standard deviation

    @property
    def max_deviation(self) -> float:
        return float(self.deviation.max())


def _cumulative_simpson(y: np.ndarray, h: float) -> np.ndarray:
    """Cumulative integral on a uniform grid: Simpson on pairs, midpoint-corrected odd nodes."""
    out = np.zeros_like(y)
    k = len(y)
    for i in range(1, k):
        if i % 2 == 0:
            out[i] = out[i - 2] + h / 3.0 * (y[i - 2] + 4 * y[i - 1] + y[i])
        else:
            if i >= 2:
                # three-point rule for the last half interval
                out[i] = out[i - 1] + h / 12.0 * (-y[i - 2] + 8 * y[i - 1] + 5 * y[i])
            else:
                out[i] = h / 12.0 * (5 * y[0] + 8 * y[1] - y[2]) if k > 2 else 0.5 * h * (y[0] + y[1])
    return out


def dbr_residual(m: PiecewiseMetric, c: Polyline, n_samples: int | None = None, trim: int = 4) -> DbrResult:
    """Constancy check of ``F_{x'^i} - int_a^t F_{x^i} ds`` along ``c``.

    ``c`` is reparametrised by arclength through a cubic spline, velocities
    come from fourth-order central differences and the integral from
    composite Simpson.  For a genuine extremal every component is constant,
    so the standard deviations measure how far ``c`` is from one.
    """
    if m.signature != "riemannian":
        raise BadParameter("du Bois-Reymond residual is defined for Riemannian metrics")
    nodes = c.nodes
    if not m.differentiable:
        phi = np.array([m.level(x) for x in nodes])
        if np.any(np.abs(phi) <= TAU_ONSURFACE) or np.any(np.sign(phi[1:]) != np.sign(phi[:-1])):
            raise InterfaceOnCurve("curve meets the interface of a metric that is not C^1 there")
    q = segment_norms(m, c)
    cum = np.concatenate([[0.0], np.cumsum(np.sqrt(np.maximum(q, 0.0)))])
    total = cum[-1]
    if total <= 0:
        raise BadParameter("degenerate curve")
    spline = CubicSpline(cum, nodes, axis=0)
    k = n_samples or len(nodes)
    s = np.linspace(0.0, total, k)
    h = s[1] - s[0]
    x = spline(s)
    v = np.full_like(x, np.nan)
    v[2:-2] = (x[:-4] - 8 * x[1:-3] + 8 * x[3:-1] - x[4:]) / (12 * h)
    v[:2] = spline(s[:2], 1)
    v[-2:] = spline(s[-2:], 1)
    G, DG = eval_many(m, x)
    F = np.sqrt(np.einsum("ki,kij,kj->k", v, G, v))
    F_v = np.einsum("kij,kj->ki", G, v) / F[:, None]
    F_x = 0.5 * np.einsum("kmij,ki,kj->km", DG, v, v) / F[:, None]
    integral = np.column_stack([_cumulative_simpson(F_x[:, i], h) for i in range(m.dim)])
    R = F_v - integral
    sel = slice(trim, k - trim) if k > 2 * trim + 2 else slice(None)
    return DbrResult(s=s[sel], residual=R[sel], deviation=R[sel].std(axis=0))
