"""Lorentzian diagnostics: cones, causal character, grid reachability, maximisers."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import optimize, sparse
from scipy.sparse import csgraph

from .errors import BadParameter, FiligeoError, NotCausallyRelated, ResolutionTooCoarse
from .extremal import Polyline, _laplacian_solve, _midpoints, curve_length
from .geodesics import NULL_TOL, GeodesicRecord, _character, _norms, hw_geodesic_family
from .metric_zoo import TAU_ONSURFACE, PiecewiseMetric, eval_many, eval_metric

__all__ = [
    "ConeSample",
    "cone_sample",
    "CausalCharacter",
    "causal_character",
    "GridSpec",
    "ReachabilitySet",
    "grid_reachability",
    "maximize_causal_bvp",
    "hw_lorentzian_lengths",
    "DEFAULT_SLACK_K",
    "DEFAULT_STENCIL_RADIUS",
]

DEFAULT_SLACK_K = 1e-3
DEFAULT_STENCIL_RADIUS = 8
MIN_CONE_DIRECTIONS = 8


def _require_lorentzian(m: PiecewiseMetric) -> None:
    if m.signature != "lorentzian":
        raise BadParameter(f"{m.name} is not Lorentzian")


def _time_vector(m: PiecewiseMetric, x) -> np.ndarray:
    if m.time_orientation is None:
        return np.eye(m.dim)[0]
    return np.asarray(m.time_orientation(x), dtype=float)


@dataclass
class ConeSample:
    """Light cone of ``g`` at one point together with the time orientation."""

    point: np.ndarray
    g: np.ndarray
    T: np.ndarray
    degenerate: bool

    def test(self, v) -> tuple[float, float]:
        v = np.asarray(v, dtype=float)
        gv = self.g @ v
        return float(v @ gv), float(np.sign(gv @ self.T))

    def is_causal(self, v, tol: float = 0.0) -> bool:
        q, s = self.test(v)
        return q <= tol and s < 0

    def is_timelike(self, v, tol: float = 0.0) -> bool:
        q, s = self.test(v)
        return q < -tol and s < 0

    def null_directions(self) -> np.ndarray:
        """Future null directions (two-dimensional metrics only), unit Euclidean length."""
        if self.g.shape != (2, 2):
            raise BadParameter("null directions are listed for 2d metrics only")
        a, b, c = self.g[1, 1], 2 * self.g[0, 1], self.g[0, 0]
        # g((1, k), (1, k)) = c + b k + a k^2 with (1, k) a direction in coordinates
        if abs(a) < 1e-15:
            roots = [-c / b] if b != 0 else []
            dirs = [np.array([1.0, r]) for r in roots] + [np.array([0.0, 1.0])]
        else:
            disc = b * b - 4 * a * c
            rr = [(-b + s * math.sqrt(max(disc, 0.0))) / (2 * a) for s in (1, -1)]
            dirs = [np.array([1.0, r]) for r in rr]
        out = []
        for d in dirs:
            d = d / np.linalg.norm(d)
            if (self.g @ d) @ self.T > 0:
                d = -d
            out.append(d)
        return np.array(out)


def cone_sample(m: PiecewiseMetric, x, side=None) -> ConeSample:
    _require_lorentzian(m)
    x = np.asarray(x, dtype=float)
    smp = eval_metric(m, x, side, check_signature=False)
    T = _time_vector(m, x)
    return ConeSample(point=x, g=smp.g, T=T, degenerate=bool(T @ smp.g @ T >= 0))


# ---------------------------------------------------------------------------
# causal character


@dataclass
class CausalCharacter:
    verdict: str
    values: np.ndarray  # g(velocity, velocity) samples
    labels: list

    def to_json(self) -> dict:
        return {"verdict": self.verdict, "counts": {k: self.labels.count(k) for k in ("timelike", "null", "spacelike")}}


def _label(q: float, null_tol: float) -> str:
    if abs(q) < null_tol:
        return "null"
    return "timelike" if q < 0 else "spacelike"


def causal_character(m: PiecewiseMetric, curve, null_tol: float = NULL_TOL, n: int = 400) -> CausalCharacter:
    """Pointwise sign classification of ``g(c', c')`` along a geodesic or polyline.

    Polylines are treated as parametrised over their parameter interval, so
    the velocity on a segment is ``Delta / dt`` and ``g`` is taken at the
    segment midpoint.
    """
    _require_lorentzian(m)
    if isinstance(curve, GeodesicRecord):
        ts, ys, _ = curve.trajectory.sample(n)
        values = _norms(m, curve.trajectory, ts, ys)
    elif isinstance(curve, Polyline):
        mid, d = _midpoints(curve.nodes)
        G, _ = eval_many(m, mid)
        v = d / curve.dt
        values = np.einsum("ki,kij,kj->k", v, G, v)
    else:
        raise BadParameter("expected a GeodesicRecord or a Polyline")
    labels = [_label(float(q), null_tol) for q in values]
    return CausalCharacter(_character(m, values, null_tol), np.asarray(values), labels)


# ---------------------------------------------------------------------------
# grid reachability


@dataclass(frozen=True)
class GridSpec:
    """Uniform 2d vertex grid ``lo + h * i`` covering ``bounds``."""

    bounds: tuple
    h: float

    def __post_init__(self):
        if self.h <= 0:
            raise BadParameter("grid spacing must be positive")
        if len(self.bounds) != 2:
            raise BadParameter("grids are two-dimensional")

    @property
    def lo(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def shape(self) -> tuple[int, int]:
        return tuple(int(round((hi - lo) / self.h)) + 1 for lo, hi in self.bounds)

    def axes(self) -> list:
        return [lo + self.h * np.arange(k) for (lo, _), k in zip(self.bounds, self.shape)]

    def points(self) -> np.ndarray:
        a, b = self.axes()
        A, B = np.meshgrid(a, b, indexing="ij")
        return np.column_stack([A.ravel(), B.ravel()])

    def nearest(self, x) -> tuple[int, int]:
        idx = np.rint((np.asarray(x, dtype=float) - self.lo) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.array(self.shape)):
            raise BadParameter(f"point {list(map(float, x))} is outside the grid")
        return int(idx[0]), int(idx[1])

    def flat_index(self, ij) -> int:
        return int(np.ravel_multi_index(ij, self.shape))

    def to_json(self) -> dict:
        return {"bounds": [[float(a), float(b)] for a, b in self.bounds], "h": float(self.h)}


def _stencil(radius: int) -> np.ndarray:
    return np.array(
        [(a, b) for a in range(-radius, radius + 1) for b in range(-radius, radius + 1)
         if (a, b) != (0, 0) and math.gcd(a, b) == 1],
        dtype=int,
    )


@dataclass
class _EdgeSet:
    src: np.ndarray
    dst: np.ndarray
    q: np.ndarray  # g(Delta, Delta) at the chord midpoint
    n_vertices: int


def _future_edges(m: PiecewiseMetric, grid: GridSpec, K: float, radius: int) -> _EdgeSet:
    """All future-directed chords whose midpoint norm is at most the causal slack."""
    n0, n1 = grid.shape
    P = grid.points().reshape(n0, n1, 2)
    ids = np.arange(n0 * n1).reshape(n0, n1)
    sigma = K * grid.h**2
    src, dst, qs = [], [], []
    interior = np.zeros((n0, n1), dtype=bool)
    interior[radius : n0 - radius, radius : n1 - radius] = True
    counts = np.zeros((n0, n1), dtype=int)
    for a, b in _stencil(radius):
        s0 = slice(max(0, -a), n0 - max(0, a))
        s1 = slice(max(0, -b), n1 - max(0, b))
        if s0.start >= s0.stop or s1.start >= s1.stop:
            continue
        base = P[s0, s1].reshape(-1, 2)
        delta = grid.h * np.array([a, b], dtype=float)
        mid = base + 0.5 * delta
        G, _ = eval_many(m, mid)
        gd = G @ delta
        q = gd @ delta
        T = np.array([_time_vector(m, x) for x in mid]) if m.time_orientation is not None else np.eye(2)[[0] * len(mid)]
        ok = (q <= sigma) & (np.einsum("ki,ki->k", gd, T) < 0)
        okg = ok.reshape(s0.stop - s0.start, s1.stop - s1.start)
        counts[s0, s1] += okg
        sid = ids[s0, s1].ravel()
        src.append(sid[ok])
        dst.append(sid[ok] + a * n1 + b)
        qs.append(q[ok])
    region = counts[interior] if interior.any() else counts.ravel()
    if region.size and int(region.min()) < MIN_CONE_DIRECTIONS:
        raise ResolutionTooCoarse(
            f"only {int(region.min())} admissible stencil directions at some vertex (h={grid.h:g}, radius={radius})"
        )
    return _EdgeSet(np.concatenate(src), np.concatenate(dst), np.concatenate(qs), n0 * n1)


def _reach(edges: _EdgeSet, mask: np.ndarray, source: int) -> np.ndarray:
    n = edges.n_vertices
    adj = sparse.csr_matrix((np.ones(int(mask.sum())), (edges.src[mask], edges.dst[mask])), shape=(n, n))
    order = csgraph.breadth_first_order(adj, source, directed=True, return_predecessors=False)
    out = np.zeros(n, dtype=bool)
    out[order] = True
    return out


def _frontier(reach: np.ndarray) -> np.ndarray:
    pad = np.pad(reach, 1, constant_values=False)
    inner = pad[1:-1, 1:-1] & pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    return reach & ~inner


@dataclass
class ReachabilitySet:
    """Grid approximation of the causal and/or chronological future of a vertex.

    Verdicts are conditional on the resolution ``h``, the stencil radius and
    the slack constant ``K`` (chords pass the causal test when
    ``g(Delta, Delta) <= K h^2`` and the timelike test when it is at most
    ``-K h^2``), so they are evidence rather than proof.
    """

    grid: GridSpec
    source: np.ndarray
    source_index: tuple
    mode: str
    K: float
    stencil_radius: int
    causal_reachable: np.ndarray | None = None
    timelike_reachable: np.ndarray | None = None
    _edges: _EdgeSet | None = field(default=None, repr=False)

    def _array(self, mode: str) -> np.ndarray:
        arr = self.causal_reachable if mode == "causal" else self.timelike_reachable
        if arr is None:
            raise BadParameter(f"{mode} reachability was not computed")
        return arr

    def reachable(self, x, mode: str = "causal") -> bool:
        return bool(self._array(mode)[self.grid.nearest(x)])

    def frontier(self, mode: str = "causal") -> np.ndarray:
        return _frontier(self._array(mode))

    def metadata(self) -> dict:
        return {
            "h": float(self.grid.h),
            "K": float(self.K),
            "source": [float(v) for v in self.source],
            "mode": self.mode,
            "stencil_radius": int(self.stencil_radius),
            "grid": self.grid.to_json(),
            "shape": list(self.grid.shape),
        }

    def raster(self) -> np.ndarray:
        """0 unreachable, 128 causal only, 255 timelike."""
        img = np.zeros(self.grid.shape, dtype=np.uint8)
        if self.causal_reachable is not None:
            img[self.causal_reachable] = 128
        if self.timelike_reachable is not None:
            img[self.timelike_reachable] = 255
        return img

    def export(self, out_dir, stem: str = "reachability") -> dict:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        img = self.raster()
        # rows of the image run along the second coordinate, time upwards
        pic = img.T[::-1]
        pgm = out / f"{stem}.pgm"
        with open(pgm, "wb") as fh:
            fh.write(f"P5\n{pic.shape[1]} {pic.shape[0]}\n255\n".encode())
            fh.write(np.ascontiguousarray(pic).tobytes())
        csv_path = out / f"{stem}.csv"
        pts = self.grid.points()
        causal = self.causal_reachable.ravel() if self.causal_reachable is not None else np.zeros(len(pts), bool)
        timelike = self.timelike_reachable.ravel() if self.timelike_reachable is not None else np.zeros(len(pts), bool)
        with open(csv_path, "w") as fh:
            fh.write("x1,x2,causal,timelike\n")
            for p, c, t in zip(pts, causal, timelike):
                fh.write(f"{p[0]!r},{p[1]!r},{int(c)},{int(t)}\n")
        meta = out / f"{stem}.json"
        meta.write_text(json.dumps(self.metadata(), indent=2, sort_keys=True) + "\n")
        return {"pgm": str(pgm), "csv": str(csv_path), "json": str(meta)}


def grid_reachability(
    m: PiecewiseMetric,
    source,
    grid: GridSpec,
    mode: str = "both",
    *,
    K: float = DEFAULT_SLACK_K,
    stencil_radius: int = DEFAULT_STENCIL_RADIUS,
) -> ReachabilitySet:
    """Search the graph of future-directed causal (or timelike) grid chords from ``source``."""
    _require_lorentzian(m)
    if m.dim != 2:
        raise BadParameter("grid reachability is implemented for 2d metrics")
    if mode not in ("causal", "timelike", "both"):
        raise BadParameter(f"unknown mode {mode!r}")
    ij = grid.nearest(source)
    src = grid.flat_index(ij)
    edges = _future_edges(m, grid, K, stencil_radius)
    sigma = K * grid.h**2
    rs = ReachabilitySet(grid, np.asarray(source, dtype=float), ij, mode, K, stencil_radius, _edges=edges)
    if mode in ("causal", "both"):
        rs.causal_reachable = _reach(edges, np.ones(edges.src.size, bool), src).reshape(grid.shape)
    if mode in ("timelike", "both"):
        rs.timelike_reachable = _reach(edges, edges.q <= -sigma, src).reshape(grid.shape)
    return rs


# ---------------------------------------------------------------------------
# maximiser


def _longest_path(rs: ReachabilitySet) -> tuple[np.ndarray, np.ndarray]:
    """Longest causal path lengths from the source and predecessor links.

    Vertices are processed in lexicographic coordinate order, which is a
    topological order as long as every chord increases that order; this is
    checked.
    """
    e = rs._edges
    if not np.all(e.dst > e.src):
        raise FiligeoError("grid chords are not ordered by the coordinate order; cannot seed by longest path")
    n = e.n_vertices
    order = np.argsort(e.src, kind="stable")
    src, dst, w = e.src[order], e.dst[order], np.sqrt(np.maximum(-e.q[order], 0.0))
    starts = np.searchsorted(src, np.arange(n + 1))
    best = np.full(n, -np.inf)
    pred = np.full(n, -1)
    s0 = rs.grid.flat_index(rs.source_index)
    best[s0] = 0.0
    for v in range(s0, n):
        if not np.isfinite(best[v]):
            continue
        lo, hi = starts[v], starts[v + 1]
        if lo == hi:
            continue
        cand = best[v] + w[lo:hi]
        tgt = dst[lo:hi]
        better = cand > best[tgt]
        best[tgt[better]] = cand[better]
        pred[tgt[better]] = v
    return best, pred


def _chord_ok(m: PiecewiseMetric, a: np.ndarray, b: np.ndarray, slack: float = 1e-13) -> bool:
    d = b - a
    mid = 0.5 * (a + b)
    G, _ = eval_many(m, mid[None])
    gd = G[0] @ d
    return bool(gd @ d <= slack * (d @ d) and gd @ _time_vector(m, mid) < 0)


def _resample(path: np.ndarray, n_segments: int) -> np.ndarray:
    seg = np.linalg.norm(np.diff(path, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    t = np.linspace(0.0, s[-1], n_segments + 1)
    return np.column_stack([np.interp(t, s, path[:, i]) for i in range(path.shape[1])])


def _grid_seed(m, p, q, n_segments, h, bounds, K, radius):
    if bounds is None:
        lo = np.minimum(p, q) - 0.25 * np.abs(q - p).max()
        hi = np.maximum(p, q) + 0.25 * np.abs(q - p).max()
        lo[0] = p[0]
        bounds = tuple(zip(lo, hi))
    grid = GridSpec(tuple((float(a), float(b)) for a, b in bounds), h)
    rs = grid_reachability(m, p, grid, "causal", K=K, stencil_radius=radius)
    best, pred = _longest_path(rs)
    pts = grid.points()
    ok = np.isfinite(best)
    # join q to the best reachable vertex that sees it along a causal chord
    idx = np.nonzero(ok)[0]
    d = q - pts[idx]
    mid = pts[idx] + 0.5 * d
    G, _ = eval_many(m, mid)
    gd = np.einsum("kij,kj->ki", G, d)
    qq = np.einsum("ki,ki->k", gd, d)
    T = np.array([_time_vector(m, x) for x in mid])
    fut = (qq <= 0) & (np.einsum("ki,ki->k", gd, T) < 0)
    fut |= np.linalg.norm(d, axis=1) < 1e-14
    if not fut.any():
        raise NotCausallyRelated("no grid-reachable vertex sees q along a causal chord")
    total = best[idx] + np.sqrt(np.maximum(-qq, 0.0))
    total[~fut] = -np.inf
    v = int(idx[int(np.argmax(total))])
    chain = []
    while v >= 0:
        chain.append(pts[v])
        v = int(pred[v])
    path = np.array(chain[::-1])
    path[0] = p
    if np.linalg.norm(path[-1] - q) > 1e-14:
        path = np.vstack([path, q])
    return _resample(path, n_segments), rs


def _project_causal(m, nodes, tidx, slack=1e-13):
    """Restore per-segment causality sweeping forward along the time coordinate.

    A violating segment is repaired by moving its far node forward in the
    time coordinate to the cone boundary; the final node is fixed, so a
    violation there cannot be repaired and ``None`` is returned.
    """
    x = nodes.copy()
    n = len(x) - 1
    for k in range(n):
        if _chord_ok(m, x[k], x[k + 1], slack):
            continue
        if k + 1 == n:
            return None

        def gap(tau, k=k):
            y = x[k + 1].copy()
            y[tidx] += tau
            d = y - x[k]
            mid = 0.5 * (x[k] + y)
            G, _ = eval_many(m, mid[None])
            return float(d @ G[0] @ d) + 1e-15 * float(d @ d)

        hi = max(1e-12, abs(x[k + 1][tidx] - x[k][tidx]))
        while gap(hi) > 0:
            hi *= 2.0
            if hi > 1e6:
                return None
        tau = optimize.brentq(gap, 0.0, hi, xtol=1e-15) if gap(0.0) > 0 else 0.0
        x[k + 1][tidx] += tau
        if not _chord_ok(m, x[k], x[k + 1], 1e-10):
            return None
    return x


def _length_and_grad(m, nodes):
    mid, d = _midpoints(nodes)
    G, DG = eval_many(m, mid)
    gd = np.einsum("kij,kj->ki", G, d)
    q = np.einsum("ki,ki->k", gd, d)
    ell = np.sqrt(np.maximum(-q, 0.0))
    with np.errstate(invalid="ignore"):
        dq = 0.5 * np.einsum("kmij,ki,kj->km", DG, d, d)
    dq[~np.isfinite(dq)] = 0.0
    live = ell > 1e-9 * np.linalg.norm(d, axis=1)
    inv = np.where(live, 1.0 / np.where(live, ell, 1.0), 0.0)[:, None]
    grad = np.zeros_like(nodes)
    grad[1:] += -(2.0 * gd + dq) * 0.5 * inv
    grad[:-1] += -(-2.0 * gd + dq) * 0.5 * inv
    return float(ell.sum()), grad


def _ascend(m, nodes, max_iters, grad_tol, frozen_normal):
    tidx = int(np.argmax(np.abs(_time_vector(m, nodes[0]))))
    n_seg = len(nodes) - 1
    dt = 1.0 / n_seg

    def masked(g):
        gi = g[1:-1].copy()
        for k, nrm in frozen_normal.items():
            gi[k - 1] -= (gi[k - 1] @ nrm) * nrm
        return gi

    def precondition(gi, x):
        # length is blind to sliding nodes along the curve: drop that component
        z = _laplacian_solve(gi, dt)
        tau = x[2:] - x[:-2]
        tau /= np.maximum(np.linalg.norm(tau, axis=1, keepdims=True), 1e-300)
        keep = np.array([k + 1 not in frozen_normal for k in range(len(z))])
        z[keep] -= np.einsum("ki,ki->k", z[keep], tau[keep])[:, None] * tau[keep]
        return z

    L, g = _length_and_grad(m, nodes)
    gi = masked(g)
    z = precondition(gi, nodes)
    d = z.copy()
    step = None
    stall = 0
    it = 0
    for it in range(1, max_iters + 1):
        gnorm = float(np.abs(gi).max())
        if gnorm < grad_tol:
            break
        if float(np.sum(gi * d)) <= 0:
            d = z.copy()
        dn = float(np.abs(d).max())
        if step is None:
            seg = float(np.linalg.norm(np.diff(nodes, axis=0), axis=1).mean())
            step = 0.1 * seg / max(dn, 1e-300)
        else:
            step *= 2.0
        accepted = False
        while step * dn > 1e-15:
            trial = nodes.copy()
            trial[1:-1] += step * d
            for k, nrm in frozen_normal.items():
                off = trial[k] - nodes[k]
                trial[k] = nodes[k] + off - (off @ nrm) * nrm
            trial = _project_causal(m, trial, tidx)
            if trial is not None:
                L_new, g_new = _length_and_grad(m, trial)
                if L_new > L + 1e-4 * step * float(np.sum(gi * d)):
                    accepted = True
                    break
            step *= 0.5
        if not accepted:
            break
        gain = L_new - L
        nodes, L = trial, L_new
        gi_new = masked(g_new)
        z_new = precondition(gi_new, nodes)
        beta = max(0.0, float(np.sum(gi_new * (z_new - z))) / max(float(np.sum(gi * z)), 1e-300))
        d = z_new + beta * d
        gi, z = gi_new, z_new
        stall = stall + 1 if gain <= 1e-14 * max(L, 1.0) else 0
        if stall >= 5:
            break
    return nodes, L, it, float(np.abs(gi).max())


def maximize_causal_bvp(
    m: PiecewiseMetric,
    p,
    q,
    n_segments: int = 64,
    *,
    seeds=None,
    max_iters: int = 2000,
    grad_tol: float = 1e-10,
    grid_h: float | None = None,
    grid_bounds=None,
    K: float = DEFAULT_SLACK_K,
    stencil_radius: int = DEFAULT_STENCIL_RADIUS,
    bend: float = 0.3,
) -> Polyline:
    """Longest causal polyline from ``p`` to ``q`` found by projected ascent.

    In two dimensions the ascent starts from the longest path of the causal
    grid graph (which also certifies that ``q`` lies in the causal future of
    ``p`` at that resolution); in higher dimension it starts from the straight
    chord and from chords bent by ``bend`` either way in the first spatial
    coordinate.
    Nodes of a seed lying on the interface of a metric that is not C^1 there
    may slide along the interface but not leave it.
    """
    _require_lorentzian(m)
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if np.array_equal(p, q):
        return Polyline(np.tile(p, (n_segments + 1, 1)), info={"length": 0.0, "iterations": 0})
    tidx = int(np.argmax(np.abs(_time_vector(m, p))))

    starts = []
    info = {}
    if seeds is not None:
        starts = [np.asarray(s, dtype=float) for s in seeds]
    elif m.dim == 2:
        h = grid_h if grid_h is not None else float(np.abs(q - p).max()) / 64.0
        seed, rs = _grid_seed(m, p, q, n_segments, h, grid_bounds, K, stencil_radius)
        info.update({"grid_h": h, "K": K, "stencil_radius": stencil_radius})
        starts = [seed]
    else:
        t = np.linspace(0.0, 1.0, n_segments + 1)[:, None]
        line = p + t * (q - p)
        space = [i for i in range(m.dim) if i != tidx][0]
        bump = np.zeros(m.dim)
        bump[space] = bend
        starts = [line, line + np.sin(np.pi * t) * bump, line - np.sin(np.pi * t) * bump]

    best = None
    for start in starts:
        start = start.copy()
        start[0], start[-1] = p, q
        nodes = _project_causal(m, start, tidx)
        if nodes is None:
            continue
        frozen = {}
        if not m.differentiable:
            for k in range(1, n_segments):
                if abs(m.level(nodes[k])) <= TAU_ONSURFACE:
                    nrm = np.asarray(m.level_grad(nodes[k]), dtype=float)
                    frozen[k] = nrm / np.linalg.norm(nrm)
        nodes, L, its, gnorm = _ascend(m, nodes, max_iters, grad_tol, frozen)
        if best is None or L > best[1]:
            best = (nodes, L, its, gnorm)
    if best is None:
        raise NotCausallyRelated("no causal polyline between the endpoints could be constructed")
    nodes, L, its, gnorm = best
    poly = Polyline(nodes, info={**info, "iterations": its, "grad_norm": gnorm})
    poly.info["length"] = curve_length(m, poly, causal_slack=1e-9)
    return poly


# ---------------------------------------------------------------------------
# Lorentzian Hartman-Wintner lengths


def hw_lorentzian_lengths(lam: float, eps: float) -> dict:
    """Lengths of the three geodesics joining ``(0,0,0)`` to ``(2 sqrt2 s0, 0, 2 y1)``.

    ``Gamma_pm`` lift the Riemannian arcs with ``t = sqrt2 s`` and have length
    ``2 s0``; ``Gamma_0`` is the straight line in ``x = 0``.
    """
    fam = hw_geodesic_family(lam, eps)
    s0, y1 = fam.s0, fam.y1
    L0 = math.sqrt(8.0 * s0 * s0 - 4.0 * y1 * y1)
    Lpm = 2.0 * s0
    if not L0 < Lpm:
        raise FiligeoError(f"expected L(Gamma_0) < 2 s0, got {L0} >= {Lpm}")
    return {"L_gamma0": L0, "L_gamma_pm": Lpm, "s0": s0, "y1": y1}
