"""Numerical flows, sampled two-parameter balls, the rescaled exponential map
and the necessity experiment.

Fields are compiled from their exact coefficients to vectorized numpy
callables; all integration is fixed-step classical RK4 so every experiment
is bit-reproducible from its seed.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .polyalg import MultiPoly, RationalFn
from .polytope import (
    EXTERIOR,
    LebesguePair,
    NewtonPolytope,
    TrivialRegimeError,
    c_from_p,
    separating_halfplane,
    spanning_tuples,
)
from .vfcalc import Degree, FieldData, VectorField, Word, WordTable, lambda_I

__all__ = [
    "FlowConfig",
    "FlowError",
    "BallSpec",
    "PointCloud",
    "OccupancyGrid",
    "compile_field",
    "compile_map",
    "flow",
    "flow_batch",
    "commutator_defect",
    "sample_ball",
    "estimate_volume",
    "ball_scaling_study",
    "phi_map",
    "phi_volume_check",
    "lambda_norm",
    "sharpness_probe",
    "spawn_seeds",
    "write_csv",
]

CHUNK = 1 << 15


class FlowError(ArithmeticError):
    """Integration left the guard region or met a vanishing denominator."""


@dataclass(frozen=True)
class FlowConfig:
    h: float = 1e-3
    max_steps: int = 1_000_000
    guard: float = 1e3
    threads: int = 1

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("step h must be positive")
        if not math.isfinite(self.guard):
            raise ValueError("guard radius must be finite")


# ---------------------------------------------------------------------------
# compilation

def _poly_src(p: MultiPoly, var: str = "v") -> str:
    if p.is_zero():
        return "0.0"
    parts = []
    for exp, c in p.sorted_terms():
        factors = [repr(float(c))]
        for i, e in enumerate(exp):
            if e == 1:
                factors.append(f"{var}{i}")
            elif e > 1:
                factors.append(f"{var}{i}**{e}")
        parts.append("*".join(factors))
    return " + ".join(parts)


def _component_src(c: RationalFn) -> str:
    num = _poly_src(c.num)
    if c.den.is_constant():
        k = float(c.den.constant_value())
        return f"({num})" if k == 1.0 else f"({num})/{k!r}"
    return f"_safe_div({num}, {_poly_src(c.den)})"


def _safe_div(a, b):
    b = np.asarray(b, dtype=float)
    out = np.divide(a, b, out=np.full(np.broadcast(a, b).shape, np.nan), where=np.abs(b) > 1e-12)
    return out


def _build(exprs: list[str], nin: int, name: str) -> Callable[[np.ndarray], np.ndarray]:
    lines = [f"def {name}(P):"]
    lines.append("    N = P.shape[0]")
    for i in range(nin):
        lines.append(f"    v{i} = P[:, {i}]")
    lines.append(f"    out = np.empty((N, {len(exprs)}))")
    for i, e in enumerate(exprs):
        lines.append(f"    out[:, {i}] = {e}")
    lines.append("    return out")
    ns = {"np": np, "_safe_div": _safe_div}
    exec("\n".join(lines), ns)
    fn = ns[name]
    fn.source = "\n".join(lines)
    return fn


def _require_numeric(names: Sequence[str], dim: int):
    if len(names) != dim:
        raise ValueError(
            f"parameters {tuple(names[dim:])} must be specialized before numerical work"
        )


def compile_field(X: VectorField) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized evaluator ``(N, n) -> (N, n)``."""
    _require_numeric(X.names, X.dim)
    return _build([_component_src(c) for c in X.components], X.dim, "field")


def compile_map(components: Sequence[RationalFn], dim: int) -> Callable[[np.ndarray], np.ndarray]:
    """Vectorized evaluator of a coordinate map (e.g. a projection)."""
    for c in components:
        _require_numeric(range(c.nvars), dim)
    return _build([_component_src(c) for c in components], dim, "cmap")


def _as_callable(X) -> Callable:
    return compile_field(X) if isinstance(X, VectorField) else X


# ---------------------------------------------------------------------------
# integration

def flow_batch(F, P: np.ndarray, t, cfg: FlowConfig = FlowConfig(), steps: int | None = None,
               strict: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """RK4 flow of many points, each for its own time.

    Returns the endpoints and a boolean mask of rows that stayed valid.
    With ``strict`` any invalid row raises FlowError.
    """
    F = _as_callable(F)
    P = np.array(P, dtype=float, copy=True)
    if P.ndim == 1:
        P = P[None, :]
    t = np.broadcast_to(np.asarray(t, dtype=float), (P.shape[0],))
    if steps is None:
        tmax = float(np.max(np.abs(t))) if t.size else 0.0
        steps = max(1, math.ceil(tmax / cfg.h - 1e-9))
    if steps > cfg.max_steps:
        raise FlowError(f"{steps} steps exceed the configured maximum {cfg.max_steps}")
    dt = (t / steps)[:, None]
    ok = np.ones(P.shape[0], dtype=bool)
    with np.errstate(all="ignore"):
        for _ in range(steps):
            k1 = F(P)
            k2 = F(P + 0.5 * dt * k1)
            k3 = F(P + 0.5 * dt * k2)
            k4 = F(P + dt * k3)
            P = P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            bad = ~np.all(np.isfinite(P), axis=1) | (np.max(np.abs(P), axis=1) > cfg.guard)
            if bad.any():
                ok &= ~bad
                P[bad] = 0.0
                if strict:
                    raise FlowError("flow left the guard region or hit a vanishing denominator")
    return P, ok


def flow(X, x: Sequence[float], t: float, cfg: FlowConfig = FlowConfig()) -> np.ndarray:
    """Endpoint of the integral curve of X through x after time t."""
    out, _ = flow_batch(X, np.asarray(x, dtype=float)[None, :], t, cfg)
    return out[0]


def commutator_defect(X1, X2, x: Sequence[float], t1: float, t2: float,
                      cfg: FlowConfig = FlowConfig()) -> np.ndarray:
    """``(e^{-t1 X1} e^{-t2 X2} e^{t1 X1} e^{t2 X2}(x) - x) / (t1 t2)``.

    The legs are applied in reading order (the leftmost factor acts first),
    which makes the quotient converge to ``+[X1, X2](x)``.
    """
    F1, F2 = _as_callable(X1), _as_callable(X2)
    x = np.asarray(x, dtype=float)
    y = flow(F1, x, -t1, cfg)
    y = flow(F2, y, -t2, cfg)
    y = flow(F1, y, t1, cfg)
    y = flow(F2, y, t2, cfg)
    return (y - x) / (t1 * t2)


# ---------------------------------------------------------------------------
# seeding

def spawn_seeds(seed: int, count: int) -> list[np.random.Generator]:
    """Independent generators for fixed-size chunks; independent of thread count."""
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(s) for s in ss.spawn(count)]


def _chunks(total: int) -> list[int]:
    sizes = [CHUNK] * (total // CHUNK)
    if total % CHUNK:
        sizes.append(total % CHUNK)
    return sizes


def _map_chunks(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------------------
# balls and occupancy grids

@dataclass(frozen=True)
class BallSpec:
    x0: tuple
    delta1: float
    delta2: float
    kmax: int = 6
    samples: int = 100_000
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.delta1 < 1 and 0 <= self.delta2 < 1):
            raise ValueError("radii must lie in [0, 1)")
        if self.kmax < 2:
            raise ValueError("kmax must be at least 2")
        if self.samples < 1:
            raise ValueError("sample count must be positive")


@dataclass
class PointCloud:
    points: np.ndarray
    spec: BallSpec | None = None
    dropped: int = 0

    @property
    def dim(self) -> int:
        return self.points.shape[1]


def _l1_ball(rng: np.random.Generator, N: int, k: np.ndarray, kmax: int) -> np.ndarray:
    """Uniform samples of the l1 unit ball in R^k, zero padded to kmax."""
    E = rng.exponential(size=(N, kmax + 1))
    cols = np.arange(kmax + 1)[None, :]
    E = np.where(cols < k[:, None], E, 0.0)
    # one extra exponential for the slack coordinate
    slack = rng.exponential(size=N)
    total = E.sum(axis=1) + slack
    signs = rng.choice(np.array([-1.0, 1.0]), size=(N, kmax + 1))
    return (E * signs / total[:, None])[:, :kmax]


def sample_ball(spec: BallSpec, X1, X2, cfg: FlowConfig = FlowConfig(), max_drop: float = 0.01) -> PointCloud:
    """Random alternating products ``e^{t1 d1 X1} ... e^{tk dk Xk}(x0)``.

    Leg j uses ``X1`` for odd j and ``X2`` for even j; the rightmost leg acts
    first.  Unused legs (j > k) carry time zero.
    """
    F = (_as_callable(X1), _as_callable(X2))
    x0 = np.asarray(spec.x0, dtype=float)
    sizes = _chunks(spec.samples)
    rngs = spawn_seeds(spec.seed, len(sizes))
    deltas = (spec.delta1, spec.delta2)

    def work(args):
        size, rng = args
        k = rng.integers(2, spec.kmax + 1, size=size)
        T = _l1_ball(rng, size, k, spec.kmax)
        P = np.repeat(x0[None, :], size, axis=0)
        ok = np.ones(size, dtype=bool)
        for j in range(spec.kmax - 1, -1, -1):
            d = deltas[j % 2]
            if d == 0:
                continue
            P, okj = flow_batch(F[j % 2], P, T[:, j] * d, cfg, strict=False)
            ok &= okj
        return P[ok], int((~ok).sum())

    res = _map_chunks(work, list(zip(sizes, rngs)), cfg.threads)
    pts = np.concatenate([r[0] for r in res], axis=0) if res else np.empty((0, x0.size))
    dropped = sum(r[1] for r in res)
    if dropped > max_drop * spec.samples:
        raise FlowError(f"{dropped} of {spec.samples} samples failed to integrate")
    return PointCloud(pts, spec, dropped)


@dataclass
class OccupancyGrid:
    origin: np.ndarray
    cell: np.ndarray
    cells: np.ndarray  # (m, n) unique integer indices, lexicographically sorted

    @property
    def count(self) -> int:
        return int(self.cells.shape[0])

    @property
    def volume(self) -> float:
        return self.count * float(np.prod(self.cell))

    def contains(self, points: np.ndarray) -> np.ndarray:
        idx = np.floor((np.asarray(points) - self.origin) / self.cell).astype(np.int64)
        keys = {tuple(r) for r in self.cells.tolist()}
        return np.array([tuple(r) in keys for r in idx.tolist()], dtype=bool)


def occupancy(points: np.ndarray, cell, origin=None) -> OccupancyGrid:
    points = np.asarray(points, dtype=float)
    if points.size == 0:
        raise ValueError("empty cloud")
    n = points.shape[1]
    cell = np.broadcast_to(np.asarray(cell, dtype=float), (n,)).copy()
    if not np.all(cell > 0):
        raise ValueError("cell sizes must be positive")
    origin = np.zeros(n) if origin is None else np.asarray(origin, dtype=float)
    idx = np.floor((points - origin) / cell).astype(np.int64)
    cells = np.unique(idx, axis=0)
    return OccupancyGrid(origin, cell, cells)


def extent_cells(points: np.ndarray, origin, divisions: int = 64) -> np.ndarray:
    """Per-axis cell sizes: largest distance from the anchor along each axis over ``divisions``."""
    ext = np.max(np.abs(np.asarray(points) - np.asarray(origin)), axis=0)
    if np.any(ext == 0):
        raise ValueError("cloud is degenerate along some axis")
    return ext / divisions


@dataclass
class VolumeEstimate:
    volume: float
    count: int
    cell: np.ndarray
    nn_mean: float  # mean nearest-neighbour distance in cell units
    grid: OccupancyGrid


def estimate_volume(cloud: PointCloud | np.ndarray, cell=None, origin=None, divisions: int = 64,
                    diagnostic_points: int = 4000) -> VolumeEstimate:
    """Occupancy-grid volume.

    ``cell`` may be a scalar or a per-axis vector.  When omitted, each axis
    is divided into ``divisions`` cells of the cloud's extent about the
    anchor, so exactly dilated clouds give exactly rescaled volumes.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=float)
    if pts.size == 0:
        raise ValueError("empty cloud")
    if origin is None:
        origin = np.asarray(cloud.spec.x0, dtype=float) if isinstance(cloud, PointCloud) and cloud.spec else pts[0]
    if cell is None:
        cell = extent_cells(pts, origin, divisions)
    grid = occupancy(pts, cell, origin)
    sub = pts[: min(len(pts), diagnostic_points)] / grid.cell
    if len(sub) > 1:
        d, _ = cKDTree(sub).query(sub, k=2)
        nn = float(np.mean(d[:, 1]))
    else:
        nn = float("nan")
    return VolumeEstimate(grid.volume, grid.count, grid.cell, nn, grid)


@dataclass
class ScalingReport:
    deltas: list[float]
    volumes: list[float]
    counts: list[int]
    slope: float
    predicted: Fraction | None
    relation: float
    rows: list[dict] = field(default_factory=list)


def predicted_exponent(gens: Sequence, relation: float = 1.0) -> float:
    """Smallest ``d1 + r d2`` over generators: the dominant term as delta -> 0."""
    best = None
    for g in gens:
        d = g if isinstance(g, Degree) else (g.degree if hasattr(g, "degree") else Degree(*g))
        val = d.d1 + relation * d.d2
        best = val if best is None or val < best else best
    return best


def ball_scaling_study(X1, X2, x0, deltas: Sequence[float], gens: Sequence = (), relation: float = 1.0,
                       samples: int = 100_000, seed: int = 0, kmax: int = 6,
                       cfg: FlowConfig = FlowConfig(), divisions: int = 64) -> ScalingReport:
    """Fit log(volume) against log(delta1) with ``delta2 = delta1**relation``."""
    if len(deltas) < 3:
        raise ValueError("need at least three radii")
    F1, F2 = _as_callable(X1), _as_callable(X2)
    vols, counts, rows = [], [], []
    for d in deltas:
        spec = BallSpec(tuple(x0), d, d ** relation, kmax, samples, seed)
        cloud = sample_ball(spec, F1, F2, cfg)
        est = estimate_volume(cloud, divisions=divisions)
        if est.volume <= 0 or not math.isfinite(est.volume):
            raise ValueError("degenerate volume in scaling fit")
        vols.append(est.volume)
        counts.append(est.count)
        rows.append({"delta1": d, "delta2": d ** relation, "volume": est.volume,
                     "cells": est.count, "nn_over_cell": est.nn_mean, "dropped": cloud.dropped})
    slope = float(np.polyfit(np.log(deltas), np.log(vols), 1)[0])
    for r in rows:
        r["slope"] = slope
    pred = predicted_exponent(gens, relation) if gens else None
    return ScalingReport(list(deltas), vols, counts, slope, pred, relation, rows)


# ---------------------------------------------------------------------------
# rescaled exponential map

def _word_fields(table: WordTable, I: Sequence[Word]) -> list[Callable]:
    return [compile_field(table[w]) for w in I]


def phi_map(x0, I: Sequence[Word], delta1: float, delta2: float, K: float, T: np.ndarray,
            table: WordTable, steps: int = 32, compiled: list | None = None) -> np.ndarray:
    """``exp(sum_j t_j K^-1 (K delta)^deg(w_j) X_{w_j}) x0`` for each row t of T."""
    I = [Word.parse(w) for w in I]
    T = np.atleast_2d(np.asarray(T, dtype=float))
    fs = compiled or _word_fields(table, I)
    scales = np.array([(K * delta1) ** w.degree.d1 * (K * delta2) ** w.degree.d2 / K for w in I])
    C = T * scales[None, :]

    def F(P):
        out = np.zeros_like(P)
        for j, f in enumerate(fs):
            out += C[: P.shape[0], j, None] * f(P)
        return out

    P0 = np.repeat(np.asarray(x0, dtype=float)[None, :], T.shape[0], axis=0)
    if not np.any(T):
        return P0
    out, _ = flow_batch(F, P0, 1.0, FlowConfig(h=1.0 / steps), steps=steps)
    return out


def lambda_norm(table: WordTable, x0, delta1, delta2, K, cap: Degree | None = None):
    """Euclidean norm of ``((K delta)^deg(I) lambda_I(x0))_I`` over distinct spanning tuples.

    Also returns the tuple with the largest entry.
    """
    from .polytope import generators as _gens  # local to avoid a cycle at import time

    if cap is None:
        g0 = min(_gens(table, x0), key=lambda g: g.degree.total)
        cap = Degree(2 * g0.degree.d1, 2 * g0.degree.d2)
    total = 0.0
    best = (-1.0, None)
    for words, deg in spanning_tuples(table, x0, cap):
        lam = lambda_I(table, words, x0)
        term = (K * delta1) ** deg.d1 * (K * delta2) ** deg.d2 * abs(float(lam))
        total += term * term
        if term > best[0]:
            best = (term, words)
    return math.sqrt(total), best[1], best[0]


@dataclass
class PhiVolumeReport:
    ratio: float
    phi_volume: float
    predicted: float
    lambda_norm: float
    witness: tuple
    min_abs_det: float
    max_abs_det: float
    warnings: list[str] = field(default_factory=list)


def _fd_jacobian_dets(fun, T: np.ndarray, eta: float) -> np.ndarray:
    n = T.shape[1]
    N = T.shape[0]
    stacked = []
    for j in range(n):
        e = np.zeros(n)
        e[j] = eta
        stacked.append(T + e)
        stacked.append(T - e)
    vals = fun(np.concatenate(stacked, axis=0)).reshape(2 * n, N, -1)
    J = np.empty((N, vals.shape[2], n))
    for j in range(n):
        J[:, :, j] = (vals[2 * j] - vals[2 * j + 1]) / (2 * eta)
    return np.linalg.det(J)


def phi_volume_check(table: WordTable, x0, delta1: float, delta2: float, K: float = 8,
                     radius: float | None = None, samples: int = 512, seed: int = 0,
                     band: tuple[float, float] = (0.1, 10.0), steps: int = 32,
                     det_floor: float = 1e-3) -> PhiVolumeReport:
    """Monte-Carlo estimate of ``|Phi(E)|`` for the box ``E = [-r, r]^n``
    against ``K^-n |Lambda(x0)| |E|``.  Default r = 1/K."""
    n = table.dim
    r = 1.0 / K if radius is None else radius
    lam, I, top = lambda_norm(table, x0, delta1, delta2, K)
    fs = _word_fields(table, I)
    rng = np.random.default_rng(seed)
    T = rng.uniform(-r, r, size=(samples, n))

    def fun(S):
        return phi_map(x0, I, delta1, delta2, K, S, table, steps, fs)

    dets = np.abs(_fd_jacobian_dets(fun, T, eta=r * 1e-3))
    boxvol = (2 * r) ** n
    vol = float(np.mean(dets)) * boxvol
    pred = K ** (-n) * lam * boxvol
    ratio = vol / pred
    warnings = []
    # det of the pulled back frame, relative to its value at the origin
    d0 = K ** (-n) * top
    rel = dets / d0
    if rel.min() < det_floor:
        warnings.append(f"Jacobian nearly degenerate: min relative det {rel.min():.3g}")
    if not (band[0] <= ratio <= band[1]):
        warnings.append(f"ratio {ratio:.4g} outside band {band}")
    return PhiVolumeReport(ratio, vol, pred, lam, tuple(str(w) for w in I), float(rel.min()), float(rel.max()), warnings)


# ---------------------------------------------------------------------------
# necessity experiment

def _ball_samples(rng: np.random.Generator, N: int, n: int, radius: float) -> np.ndarray:
    g = rng.standard_normal((N, n))
    g /= np.linalg.norm(g, axis=1)[:, None]
    r = radius * rng.uniform(size=N) ** (1.0 / n)
    return g * r[:, None]


@dataclass
class ProbeRow:
    delta0: float
    delta1: float
    delta2: float
    omega: float
    pi1: float
    pi2: float
    ratio: float


@dataclass
class ProbeReport:
    pair: LebesguePair
    c: tuple
    halfplane: tuple
    witness: tuple
    membership: str
    rows: list[ProbeRow]

    @property
    def ratios(self) -> list[float]:
        return [r.ratio for r in self.rows]

    def strictly_increasing(self) -> bool:
        rs = self.ratios
        return all(b > a for a, b in zip(rs, rs[1:]))

    def spread(self) -> float:
        rs = self.ratios
        return max(rs) / min(rs)


def sharpness_probe(fd: FieldData, table: WordTable, poly: NewtonPolytope, pair: LebesguePair,
                    delta0s: Sequence[float], K: float = 8, samples: int = 100_000, seed: int = 0,
                    steps: int = 32, divisions: int = 64, require_exterior: bool = True,
                    halfplane: tuple | None = None, threads: int = 1) -> ProbeReport:
    """Ratio ``|Omega| / (|pi1 Omega|^{1/p1} |pi2 Omega|^{1/p2})`` for
    ``Omega = Phi(B_{1/K})`` at ``delta = (delta0^a1, delta0^a2)``.

    For interior pairs pass ``require_exterior=False``; the half-plane is
    then taken from the vertex where the polytope is touched.
    """
    if pair.is_trivial():
        raise TrivialRegimeError(f"{pair}: trivially bounded regime (p2' <= p1)")
    c = c_from_p(pair)
    mem = poly.membership(c)
    if require_exterior and mem != EXTERIOR:
        raise ValueError(f"{pair}: (c1, c2) = {c} is {mem}, not exterior")
    if halfplane is None:
        if mem == EXTERIOR:
            halfplane = separating_halfplane(poly, c)
        else:
            v = poly.vertices[0] if len(poly.vertices) == 1 else min(
                poly.vertices, key=lambda d: abs(Fraction(d.d1, d.d1 + d.d2) - Fraction(c[0], c[0] + c[1])))
            halfplane = (Fraction(1, 2 * v.d1), Fraction(1, 2 * v.d2))
    a1, a2 = (float(a) for a in halfplane)
    # witness: the generator touching the half-plane
    g = min(poly.generators, key=lambda g: (halfplane[0] * g.degree.d1 + halfplane[1] * g.degree.d2,
                                             g.degree.total))
    I = g.witness
    n = fd.n
    fs = _word_fields(table, I)
    pi1 = compile_map(fd.pi1, n)
    pi2 = compile_map(fd.pi2, n)
    p1inv = float(1 / pair.p1) if not _is_inf(pair.p1) else 0.0
    p2inv = float(1 / pair.p2) if not _is_inf(pair.p2) else 0.0
    x0 = np.asarray([float(v) for v in fd.point])
    sizes = _chunks(samples)
    rows = []
    for d0 in delta0s:
        d1, d2 = d0 ** a1, d0 ** a2
        rngs = spawn_seeds(seed, len(sizes))

        def work(args):
            size, rng = args
            T = _ball_samples(rng, size, n, 1.0 / K)
            return phi_map(x0, I, d1, d2, K, T, table, steps, fs)

        pts = np.concatenate(_map_chunks(work, list(zip(sizes, rngs)), threads), axis=0)
        vol = estimate_volume(pts, origin=x0, divisions=divisions).volume
        q1 = pi1(pts)
        q2 = pi2(pts)
        v1 = estimate_volume(q1, origin=pi1(x0[None, :])[0], divisions=divisions).volume
        v2 = estimate_volume(q2, origin=pi2(x0[None, :])[0], divisions=divisions).volume
        ratio = vol / (v1 ** p1inv * v2 ** p2inv)
        rows.append(ProbeRow(d0, d1, d2, vol, v1, v2, ratio))
    return ProbeReport(pair, c, tuple(halfplane), tuple(str(w) for w in I), mem, rows)


def _is_inf(p) -> bool:
    return not isinstance(p, Fraction)


# ---------------------------------------------------------------------------
# output

def fmt17(x: float) -> str:
    return format(float(x), ".17g")


def write_csv(rows: Sequence[dict], path=None) -> str:
    """CSV with 17-significant-digit floats; returns the text."""
    buf = io.StringIO()
    if rows:
        w = csv.DictWriter(buf, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: fmt17(v) if isinstance(v, float) else v for k, v in r.items()})
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def probe_rows(report: ProbeReport) -> list[dict]:
    return [asdict(r) for r in report.rows]


def manifest(**entries) -> str:
    from . import __version__

    data = {"curvelp": __version__, "numpy": np.__version__}
    data.update(entries)
    return json.dumps(data, indent=2, sort_keys=True, default=str)
