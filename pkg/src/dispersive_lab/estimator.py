"""Operator-norm estimates for linearized and maximal evolutions over frequency classes.

Inputs are coefficient vectors ``c`` on the admitted frequency nodes, with
f^ = L^{n/2} c so that ||f||_2 = ||c||_2.  The linearized operator

    (A c)_i = (h/L)^{n/2} sum_k c_k w_k exp(i (x_i . xi_k + t_i phi(xi_k)))

maps into point values scaled so that ||A c||_2 is the L^2 norm of
T_{t(x)} f over the region (w is an optional frequency weight).  Balls use a
dense or chunked matrix over the points inside; the whole torus uses FFTs.

Every estimate is a lower bound realized by an explicit witness.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.fft as sfft

from .grid import Field, Grid, Region, Side, make_grid, restrict_norm, to_frequency, to_space
from .lpdecomp import psi_k
from .packets import PacketProbe, packet_family, verify_packet
from .phase import PhaseFn, phase_on_grid
from .propagator import (
    TimeField,
    TimeGrid,
    apply_T_linearized,
    apply_T_weighted,
    auto_grid,
    auto_time_count,
    check_aliasing_budget,
    evolve_many,
    japanese,
)

try:
    import finufft
except ImportError:  # pragma: no cover - finufft is a declared dependency
    finufft = None

log = logging.getLogger(__name__)

__all__ = [
    "InputClass",
    "OpNormEstimate",
    "PowerResult",
    "ScalingFit",
    "ScalingSweep",
    "TransferenceReport",
    "LPSummationReport",
    "LinearizedOperator",
    "power_iteration",
    "sup_evaluate",
    "linearized_opnorm",
    "maximal_opnorm",
    "packet_opnorm",
    "recompute_value",
    "fit_scaling",
    "scaling_sweep",
    "transference_report",
    "lp_summation_check",
]

_DENSE_LIMIT = 2e7  # complex entries kept in memory for the point operator
_BATCH_LIMIT = 2**21  # complex entries for batched whole-torus transforms


# ---------------------------------------------------------------- input classes

@dataclass(frozen=True, eq=False)
class InputClass:
    """Functions whose transform is supported on the frequency nodes in ``mask``."""

    grid: Grid
    mask: np.ndarray = field(repr=False)
    label: str = ""

    @classmethod
    def annulus(cls, grid: Grid, R: float) -> "InputClass":
        return cls(grid, Region.dyadic(R).mask(grid, Side.FREQUENCY), f"A({R:g})")

    @classmethod
    def band(cls, grid: Grid, k: int) -> "InputClass":
        return cls(grid, psi_k(grid.xi, k) > 0, f"supp psi_{k}")

    @property
    def size(self) -> int:
        return int(self.mask.sum())

    @property
    def xi(self) -> np.ndarray:
        """Admitted frequencies, shape (M, dim)."""
        return np.stack([c[self.mask] for c in self.grid.xi], axis=1)

    def phi(self, phase: PhaseFn) -> np.ndarray:
        return phase_on_grid(phase, tuple(c[self.mask] for c in self.grid.xi))

    def embed(self, c: np.ndarray) -> Field:
        g = self.grid
        F = np.zeros(g.shape, dtype=complex)
        F[self.mask] = np.asarray(c) * g.side_length ** (g.dim / 2)
        return Field(g, Side.FREQUENCY, F)

    def coefficients(self, f: Field) -> np.ndarray:
        F = to_frequency(f)
        return F.values[self.mask] / self.grid.side_length ** (self.grid.dim / 2)

    def random(self, rng: np.random.Generator) -> np.ndarray:
        c = rng.standard_normal(self.size) + 1j * rng.standard_normal(self.size)
        return c / np.linalg.norm(c)

    def chirp(self, phase: PhaseFn, delta: float) -> np.ndarray:
        c = np.exp(-1j * delta * self.phi(phase))
        return c / np.linalg.norm(c)


# ---------------------------------------------------------------- power iteration

@dataclass
class PowerResult:
    value: float
    vector: np.ndarray = field(repr=False)
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


def power_iteration(
    apply: Callable[[np.ndarray], np.ndarray],
    adjoint: Callable[[np.ndarray], np.ndarray],
    x0: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 200,
) -> PowerResult:
    """Power iteration on A*A.  ``history`` holds ||A x_k|| for unit x_k; it is non-decreasing."""
    x = np.asarray(x0, dtype=complex)
    x = x / np.linalg.norm(x)
    y = apply(x)
    val = float(np.linalg.norm(y))
    hist = [val]
    converged = False
    it = 0
    while it < max_iter:
        z = adjoint(y)
        nz = np.linalg.norm(z)
        if nz == 0:
            converged = True
            break
        x_new = z / nz
        y_new = apply(x_new)
        new = float(np.linalg.norm(y_new))
        it += 1
        hist.append(new)
        if new < val:
            # rounding only; keep the better iterate
            converged = abs(new - val) <= tol * max(val, 1e-300)
            break
        x, y = x_new, y_new
        done = new - val <= tol * new
        val = new
        if done:
            converged = True
            break
    return PowerResult(val, x, it, converged, hist)


# ---------------------------------------------------------------- operators

def _region_points(grid: Grid, region: Region) -> np.ndarray:
    m = region.mask(grid, Side.SPACE)
    return np.stack([c[m] for c in grid.x], axis=1)


class LinearizedOperator:
    """c -> samples of T_{t(x)} f over the region, scaled so norms are L^2 norms.

    ``tindex`` holds time-node indices (0 meaning t = 0): one per region point
    for balls and annuli, one per grid node for the whole torus.
    """

    def __init__(
        self,
        cls: InputClass,
        region: Region,
        tgrid: TimeGrid,
        phase: PhaseFn,
        tindex: np.ndarray,
        weight: np.ndarray | None = None,
    ):
        self.cls, self.region, self.tgrid = cls, region, tgrid
        g = cls.grid
        self.grid = g
        self.scale = (g.spacing / g.side_length) ** (g.dim / 2)
        self.phi_k = cls.phi(phase)
        self.w = np.ones(cls.size) if weight is None else np.asarray(weight, dtype=float)
        self.tindex = np.asarray(tindex)
        self.backend = "fft" if region.kind == "all" else "points"
        if self.backend == "fft":
            if self.tindex.shape != g.shape:
                raise ValueError("whole-torus operators need one time index per grid node")
            self.phi_grid = phase_on_grid(phase, g.xi)
            used, inverse = np.unique(self.tindex, return_inverse=True)
            self.groups = [(j, self.tindex == j) for j in used]
            self.fft_scale = self.scale * g.size
            self._batched = None
            if used.size * g.size <= _BATCH_LIMIT:
                times = tgrid.time(used).reshape((-1,) + (1,) * g.dim)
                self._batched = (np.exp(1j * times * self.phi_grid[None]), inverse.reshape(g.shape))
        else:
            self.points = _region_points(g, region)
            if self.tindex.shape != (self.points.shape[0],):
                raise ValueError("point operators need one time index per region point")
            self.t = tgrid.time(self.tindex)
            self._dense = None
            if self.points.shape[0] * cls.size <= _DENSE_LIMIT:
                self._dense = self._block(slice(None))

    def _block(self, sl) -> np.ndarray:
        ph = self.points[sl] @ self.cls.xi.T + np.outer(self.t[sl], self.phi_k)
        return self.scale * np.exp(1j * ph) * self.w[None, :]

    def _point_chunks(self):
        P, M = self.points.shape[0], self.cls.size
        step = max(1, int(_DENSE_LIMIT // max(M, 1)))
        for s in range(0, P, step):
            yield slice(s, min(P, s + step))

    def apply(self, c: np.ndarray) -> np.ndarray:
        if self.backend == "points":
            if self._dense is not None:
                return self._dense @ c
            return np.concatenate([self._block(sl) @ c for sl in self._point_chunks()])
        g = self.grid
        C = np.zeros(g.shape, dtype=complex)
        C[self.cls.mask] = c * self.w
        axes = tuple(range(1, g.dim + 1))
        if self._batched is not None:
            E, inv = self._batched
            U = sfft.ifftn(C[None] * E, axes=axes)
            out = np.take_along_axis(U, inv[None], axis=0)[0]
            return self.fft_scale * out.ravel()
        out = np.empty(g.shape, dtype=complex)
        for j, sel in self.groups:
            u = sfft.ifftn(C * np.exp(1j * (float(self.tgrid.time(j)) * self.phi_grid)))
            out[sel] = u[sel]
        return self.fft_scale * out.ravel()

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        if self.backend == "points":
            if self._dense is not None:
                return self._dense.conj().T @ y
            acc = np.zeros(self.cls.size, dtype=complex)
            for sl in self._point_chunks():
                acc += self._block(sl).conj().T @ y[sl]
            return acc
        g = self.grid
        Y = y.reshape(g.shape)
        if self._batched is not None:
            E, inv = self._batched
            axes = tuple(range(1, g.dim + 1))
            Z = np.zeros(E.shape, dtype=complex)
            np.put_along_axis(Z, inv[None], Y[None], axis=0)
            acc = np.sum(sfft.fftn(Z, axes=axes) * E.conj(), axis=0)
            return (self.scale * acc[self.cls.mask]) * self.w
        acc = np.zeros(g.shape, dtype=complex)
        for j, sel in self.groups:
            acc += sfft.fftn(np.where(sel, Y, 0)) * np.exp(-1j * (float(self.tgrid.time(j)) * self.phi_grid))
        return (self.scale * acc[self.cls.mask]) * self.w

    def dense_matrix(self) -> np.ndarray:
        """Explicit matrix, for small oracle checks only."""
        M = self.cls.size
        return np.stack([self.apply(e) for e in np.eye(M)], axis=1)


# ---------------------------------------------------------------- sup evaluators

def _is_uniform(tgrid: TimeGrid) -> bool:
    n = tgrid.count
    ref = np.arange(1, n + 1) * (tgrid.T_max / n)
    return bool(np.allclose(tgrid.nodes, ref, rtol=0, atol=1e-12 * tgrid.T_max))


def _sup_direct(cls, pts, tgrid, phi_k, coef, chunk_entries=2e7):
    g = cls.grid
    B = np.exp(1j * (pts @ cls.xi.T))
    best = np.full(pts.shape[0], -1.0)
    arg = np.zeros(pts.shape[0], dtype=np.int64)
    step = max(1, int(chunk_entries // max(cls.size, pts.shape[0])))
    norm = g.side_length ** (-g.dim / 2)
    for s in range(0, tgrid.count, step):
        tt = tgrid.nodes[s : s + step]
        U = np.abs(B @ (coef[:, None] * np.exp(1j * np.outer(phi_k, tt)))) * norm
        j = np.argmax(U, axis=1)
        v = U[np.arange(U.shape[0]), j]
        upd = v > best
        best[upd] = v[upd]
        arg[upd] = j[upd] + s + 1
    return best, arg


def _sup_nufft(cls, pts, tgrid, phi_k, coef, eps=1e-12, chunk_entries=1e7):
    g = cls.grid
    Nt = tgrid.count
    dt = tgrid.T_max / Nt
    w = np.mod(dt * phi_k + np.pi, 2 * np.pi) - np.pi
    j0 = 1 + Nt // 2  # output mode m corresponds to node j = m + j0
    base = coef * np.exp(1j * j0 * w)
    best = np.empty(pts.shape[0])
    arg = np.empty(pts.shape[0], dtype=np.int64)
    step = max(1, int(chunk_entries // max(cls.size, Nt)))
    norm = g.side_length ** (-g.dim / 2)
    xi = cls.xi
    for s in range(0, pts.shape[0], step):
        c = base[None, :] * np.exp(1j * (pts[s : s + step] @ xi.T))
        G = finufft.nufft1d1(w, np.ascontiguousarray(c), Nt, isign=1, eps=eps)
        A = np.abs(np.atleast_2d(G))
        j = np.argmax(A, axis=1)
        best[s : s + step] = A[np.arange(A.shape[0]), j] * norm
        arg[s : s + step] = j + 1
    return best, arg


def _sup_fft(cls, tgrid, phase, coef):
    g = cls.grid
    F = cls.embed(coef).values
    phi = phase_on_grid(phase, g.xi)
    best = np.full(g.shape, -1.0)
    arg = np.zeros(g.shape, dtype=np.int64)
    chunk = max(1, int(2**22 // g.size))
    for s, block in evolve_many(F, tgrid.nodes, phi, g, chunk=chunk):
        A = np.abs(block)
        j = np.argmax(A, axis=0)
        v = np.take_along_axis(A, j[None], axis=0)[0]
        upd = v > best
        best[upd] = v[upd]
        arg[upd] = j[upd] + s + 1
    return best.ravel(), arg


def sup_evaluate(
    cls: InputClass,
    region: Region,
    tgrid: TimeGrid,
    phase: PhaseFn,
    c: np.ndarray,
    weight: np.ndarray | None = None,
    method: str = "auto",
):
    """(|T f| maximized over nodes at each region point, maximizing node index).

    Methods: ``fft`` (whole torus), ``nufft`` (uniform grids, points in a
    region) and ``direct`` (dense sums, the independent reference).
    """
    coef = np.asarray(c, dtype=complex) * (1.0 if weight is None else weight)
    if method == "auto":
        if region.kind == "all":
            method = "fft"
        elif finufft is not None and _is_uniform(tgrid):
            method = "nufft"
        else:
            method = "direct"
    if method == "fft":
        if region.kind != "all":
            raise ValueError("the fft sup evaluator works on the whole torus only")
        return _sup_fft(cls, tgrid, phase, coef)
    pts = _region_points(cls.grid, region) if region.kind != "all" else np.stack(
        [c_.ravel() for c_ in cls.grid.x], axis=1
    )
    phi_k = cls.phi(phase)
    if method == "nufft":
        if not _is_uniform(tgrid):
            raise ValueError("the nufft sup evaluator needs a uniform time grid")
        S, arg = _sup_nufft(cls, pts, tgrid, phi_k, coef)
    elif method == "direct":
        S, arg = _sup_direct(cls, pts, tgrid, phi_k, coef)
    else:
        raise ValueError(f"unknown sup method {method!r}")
    if region.kind == "all":
        arg = arg.reshape(cls.grid.shape)
    return S, arg


# ---------------------------------------------------------------- estimates

@dataclass(eq=False)
class OpNormEstimate:
    value: float
    iterations: int
    converged: bool
    witness: Field | None = field(repr=False, default=None)
    witness_tfield: TimeField | None = field(repr=False, default=None)
    kind: str = "torus"
    history: list[list[float]] = field(default_factory=list, repr=False)
    context: dict = field(default_factory=dict, repr=False)

    def describe(self) -> dict:
        d = {
            "value": self.value,
            "iterations": self.iterations,
            "converged": self.converged,
            "kind": self.kind,
        }
        d.update({k: v for k, v in self.context.items() if isinstance(v, (int, float, str, bool))})
        return d


def _weight(cls: InputClass, exponent: float) -> np.ndarray | None:
    if not exponent:
        return None
    return japanese(tuple(c[cls.mask] for c in cls.grid.xi)) ** (-float(exponent))


def _full_tfield(cls: InputClass, region: Region, tgrid: TimeGrid, tindex: np.ndarray) -> TimeField:
    g = cls.grid
    full = np.zeros(g.shape, dtype=np.int64)
    if region.kind == "all":
        full = np.asarray(tindex).reshape(g.shape)
    else:
        full[region.mask(g, Side.SPACE)] = tindex
    return TimeField.from_indices(g, tgrid, full)


def _tindex_for(tfield: TimeField, tgrid: TimeGrid, region: Region) -> np.ndarray:
    idx = tgrid.index_of(tfield.values)
    if region.kind == "all":
        return idx
    return idx[region.mask(tfield.grid, Side.SPACE)]


def linearized_opnorm(
    tfield: TimeField,
    tgrid: TimeGrid,
    phase: PhaseFn,
    cls: InputClass,
    region: Region,
    max_iter: int = 200,
    tol: float = 1e-6,
    seed: int = 0,
    weight_exponent: float = 0.0,
    x0: np.ndarray | None = None,
) -> OpNormEstimate:
    """Top singular value of c -> 1_region T_{t(x)} f by power iteration."""
    if tfield.grid != cls.grid:
        raise ValueError("time field and input class live on different grids")
    tindex = _tindex_for(tfield, tgrid, region)
    op = LinearizedOperator(cls, region, tgrid, phase, tindex, _weight(cls, weight_exponent))
    rng = np.random.default_rng(seed)
    start = cls.random(rng) if x0 is None else x0
    pr = power_iteration(op.apply, op.adjoint, start, tol=tol, max_iter=max_iter)
    if not pr.converged:
        log.warning("power iteration stopped after %d steps without meeting tol=%g", pr.iterations, tol)
    return OpNormEstimate(
        value=pr.value,
        iterations=pr.iterations,
        converged=pr.converged,
        witness=cls.embed(pr.vector),
        witness_tfield=_full_tfield(cls, region, tgrid, tindex),
        kind="torus",
        history=[pr.history],
        context={
            "phase": phase,
            "tgrid": tgrid,
            "region": region,
            "weight_exponent": float(weight_exponent),
            "class": cls.label,
            "backend": op.backend,
        },
    )


def recompute_value(est: OpNormEstimate) -> float:
    """Ratio ||operator(witness)|| / ||witness|| from the stored witness alone."""
    ctx = est.context
    if est.kind == "packet":
        return verify_packet(ctx["probe"])
    f = est.witness
    phase, tgrid, region = ctx["phase"], ctx["tgrid"], ctx["region"]
    w = ctx.get("weight_exponent", 0.0)
    if w:
        u = apply_T_weighted(f, est.witness_tfield, tgrid, phase, w)
    else:
        u = apply_T_linearized(f, est.witness_tfield, tgrid, phase)
    return restrict_norm(u, region, 2) / to_space(f).l2norm()


def _alternate(cls, region, tgrid, phase, c0, rounds, inner_iter, tol, weight, sup_method):
    g = cls.grid
    hd = g.spacing**g.dim
    c = c0 / np.linalg.norm(c0)
    history = []
    iters = 0
    S, idx = sup_evaluate(cls, region, tgrid, phase, c, weight, sup_method)
    history.append(float(np.sqrt(hd * np.sum(S**2))))
    for _ in range(rounds - 1):
        op = LinearizedOperator(cls, region, tgrid, phase, idx, weight)
        pr = power_iteration(op.apply, op.adjoint, c, tol=tol, max_iter=inner_iter)
        iters += pr.iterations
        c_new = pr.vector
        S_new, idx_new = sup_evaluate(cls, region, tgrid, phase, c_new, weight, sup_method)
        obj = float(np.sqrt(hd * np.sum(S_new**2)))
        history.append(obj)
        c, idx = c_new, idx_new
        if obj - history[-2] <= tol * obj:
            break
    return c, idx, history, iters


def maximal_opnorm(
    R: float,
    phase: PhaseFn,
    T_max: float,
    region: Region,
    tgrid: TimeGrid,
    restarts: int = 4,
    seed: int = 0,
    grid: Grid | None = None,
    cls: InputClass | None = None,
    rounds: int = 8,
    inner_iter: int = 30,
    tol: float = 1e-6,
    weight_exponent: float = 0.0,
    sup_method: str = "auto",
    chirp_delays: Sequence[float] = (0.5, 0.25),
) -> OpNormEstimate:
    """Alternating maximization of ||sup_j |T_{t_j} f| ||_{L^2(region)} / ||f||_2 over the class.

    Restart i starts from a chirp e^{-i delta phi} when i < len(chirp_delays)
    (delta = chirp_delays[i] * T_max, snapped to the time grid) and from
    random class data otherwise, seeded with seed + i.  Each round takes the
    argmax time-field of the current data, then improves the data by power
    iteration on the linearized operator for that time-field, warm-started at
    the current data, so the objective never decreases.
    """
    if tgrid.T_max > T_max * (1 + 1e-12):
        raise ValueError("time grid extends beyond T_max")
    if grid is None:
        grid = auto_grid(1 if phase.dim is None else phase.dim, R, phase.degree, T_max)
    cls = cls or InputClass.annulus(grid, R)
    if cls.size == 0:
        raise ValueError(f"class {cls.label} has no frequency nodes on this grid")
    region.check_fits(grid)
    weight = _weight(cls, weight_exponent)
    best = None
    histories = []
    total = 0
    for i in range(max(1, restarts)):
        rng = np.random.default_rng(seed + i)
        if i < len(chirp_delays):
            delta = float(tgrid.snap(chirp_delays[i] * T_max))
            c0 = cls.chirp(phase, delta)
        else:
            c0 = cls.random(rng)
        c, idx, hist, its = _alternate(cls, region, tgrid, phase, c0, rounds, inner_iter, tol, weight, sup_method)
        histories.append(hist)
        total += its
        log.debug("restart %d: objective %s", i, ["%.6f" % h for h in hist])
        if best is None or hist[-1] > best[2][-1]:
            best = (c, idx, hist)
    c, idx, hist = best
    converged = len(hist) < rounds or (hist[-1] - hist[-2] <= tol * hist[-1] if len(hist) > 1 else True)
    return OpNormEstimate(
        value=hist[-1],
        iterations=total,
        converged=bool(converged),
        witness=cls.embed(c),
        witness_tfield=_full_tfield(cls, region, tgrid, idx),
        kind="torus",
        history=histories,
        context={
            "phase": phase,
            "tgrid": tgrid,
            "region": region,
            "weight_exponent": float(weight_exponent),
            "class": cls.label,
            "R": float(R),
            "N": grid.n,
            "L": grid.side_length,
            "Nt": tgrid.count,
        },
    )


def packet_opnorm(phase: PhaseFn, R: float, T_max: float = 1.0, family: dict | None = None) -> OpNormEstimate:
    """Best traveling-chirp probe at scale R (whole line, one dimension)."""
    best: PacketProbe | None = None
    count = 0
    for p in packet_family(phase, R, T_max, family):
        count += 1
        if best is None or p.value > best.value:
            best = p
    return OpNormEstimate(
        value=best.value,
        iterations=count,
        converged=True,
        witness=best.witness(),
        witness_tfield=None,
        kind="packet",
        history=[],
        context={"probe": best, "R": float(R), "Nt": int(best.times.size), **best.describe()},
    )


# ---------------------------------------------------------------- scaling

@dataclass
class ScalingFit:
    points: list[tuple[float, float]]
    slope: float
    intercept: float
    max_residual: float

    def as_dict(self) -> dict:
        return {
            "points": [[r, v] for r, v in self.points],
            "slope": self.slope,
            "intercept": self.intercept,
            "max_residual": self.max_residual,
        }


def fit_scaling(points: Sequence[tuple[float, float]], drop_smallest: bool = True) -> ScalingFit:
    """Least squares of log norm against log R, by default without the smallest R."""
    pts = sorted((float(r), float(v)) for r, v in points)
    use = pts[1:] if drop_smallest and len(pts) > 2 else pts
    if len(use) < 2:
        raise ValueError("need at least two points to fit a slope")
    lr = np.log([p[0] for p in use])
    lv = np.log([p[1] for p in use])
    slope, intercept = np.polyfit(lr, lv, 1)
    resid = lv - (slope * lr + intercept)
    return ScalingFit(pts, float(slope), float(intercept), float(np.max(np.abs(resid))))


def running_slopes(points: Sequence[tuple[float, float]], drop_smallest: bool = True) -> list[float]:
    """Slope of the fit over the first i points, NaN while fewer than two are usable."""
    out = []
    for i in range(1, len(points) + 1):
        try:
            out.append(fit_scaling(points[:i], drop_smallest).slope)
        except ValueError:
            out.append(float("nan"))
    return out


@dataclass
class ScalingSweep:
    fit: ScalingFit
    mode: str
    method: str
    estimates: dict = field(repr=False)
    settings: dict = field(default_factory=dict)

    @property
    def R_list(self) -> list[float]:
        return [p[0] for p in self.fit.points]


def scaling_sweep(
    phase: PhaseFn,
    dim: int,
    R_list: Sequence[float],
    mode: str,
    budget: float = 2e8,
    restarts: int = 4,
    seed: int = 0,
    T_max: float = 1.0,
    rounds: int = 8,
    Nt: int | None = None,
    L: float | None = None,
    N: int | None = None,
    force: bool = False,
    method: str = "auto",
) -> ScalingSweep:
    """Maximal-operator estimates over A(R) for each R and the fitted exponent.

    Local mode measures on B(0,1); global mode on the whole line.  Global runs
    use the torus when N^dim * Nt <= budget for every R, and traveling-chirp
    packets for the whole sweep otherwise (one dimension only).
    """
    if mode not in ("local", "global"):
        raise ValueError(f"mode must be local or global, got {mode!r}")
    R_list = [float(r) for r in R_list]
    if any(b <= a for a, b in zip(R_list, R_list[1:])):
        raise ValueError("R_list must be ascending")
    for r in R_list:
        if abs(math.log2(r) - round(math.log2(r))) > 1e-12:
            raise ValueError(f"R values must be powers of two, got {r}")
    a = phase.degree

    def grid_for(R):
        if L is not None or N is not None:
            base = auto_grid(dim, R, a, T_max)
            g = make_grid(dim, N or base.n, L or base.side_length)
            check_aliasing_budget(g, R, a, T_max, force=force)
            return g
        return auto_grid(dim, R, a, T_max)

    grids = {R: grid_for(R) for R in R_list}
    nts = {R: int(Nt) if Nt else auto_time_count(R, a, T_max) for R in R_list}
    if method == "auto":
        if mode == "local":
            method = "torus"
        else:
            cost = max(grids[R].size * nts[R] for R in R_list)
            method = "torus" if cost <= budget else "packets"
    if method == "packets" and (mode != "global" or dim != 1):
        raise ValueError("packet probes serve global sweeps in one dimension")
    region = Region.ball(1.0) if mode == "local" else Region.everything()
    estimates = {}
    points = []
    for i, R in enumerate(R_list):
        if method == "packets":
            est = packet_opnorm(phase, R, T_max)
        else:
            est = maximal_opnorm(
                R,
                phase,
                T_max,
                region,
                TimeGrid.uniform(nts[R], T_max),
                restarts=restarts,
                seed=seed + 1000 * i,
                grid=grids[R],
                rounds=rounds,
            )
        log.info("%s %s R=%g: norm %.6f (%s)", phase.spec, mode, R, est.value, method)
        estimates[R] = est
        points.append((R, est.value))
    fit = fit_scaling(points)
    settings = {
        "T_max": T_max,
        "restarts": restarts,
        "rounds": rounds,
        "budget": budget,
        "grids": {R: grids[R].describe() for R in R_list},
        "Nt": {R: (estimates[R].context.get("Nt")) for R in R_list},
    }
    return ScalingSweep(fit, mode, method, estimates, settings)


@dataclass
class TransferenceReport:
    slope_local: float
    slope_global: float
    a: float
    margin: float
    bound: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def transference_report(local_fit: ScalingFit, global_fit: ScalingFit, a: float, margin: float = 0.1) -> TransferenceReport:
    """Check slope_global <= a * slope_local + margin."""
    rl = [p[0] for p in local_fit.points]
    rg = [p[0] for p in global_fit.points]
    if len(rl) != len(rg) or not np.allclose(rl, rg):
        raise ValueError(f"fits use different R lists: {rl} vs {rg}")
    bound = a * local_fit.slope + margin
    passed = global_fit.slope <= bound
    if not passed:
        log.warning("transference violated: global slope %.4f > %.4f", global_fit.slope, bound)
    return TransferenceReport(local_fit.slope, global_fit.slope, float(a), float(margin), float(bound), bool(passed))


# ---------------------------------------------------------------- Littlewood-Paley summation

@dataclass
class LPSummationReport:
    ks: list[int]
    ratios: list[float]
    exponent: float
    slope: float
    intercept: float
    eps: float
    passed: bool

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def lp_summation_check(
    phase: PhaseFn,
    s: float,
    eps: float,
    k_max: int = 6,
    tgrid: TimeGrid | None = None,
    seed: int = 0,
    trials: int = 4,
    dim: int = 1,
    max_iter: int = 60,
    slack: float = 0.05,
) -> LPSummationReport:
    """Per-level norms of the weighted operator on the pieces P_k, and their geometric decay.

    ratio_k is the largest linearized norm over ``trials`` random time-fields
    plus the argmax time-field of random data, with weight
    <xi>^{-(a s + eps)}.  The check passes when the fitted slope of
    log2 ratio_k against k is at most -eps + slack.
    """
    if eps <= 0 or s < 0:
        raise ValueError("need eps > 0 and s >= 0")
    tgrid = tgrid or TimeGrid.uniform(32, 1.0)
    a = phase.degree
    expo = a * s + eps
    ks = list(range(1, int(k_max) + 1))
    ratios = []
    for k in ks:
        g = auto_grid(dim, 2.0**k, a, tgrid.T_max)
        cls = InputClass.band(g, k)
        region = Region.everything()
        rng = np.random.default_rng(seed + k)
        best = 0.0
        tfields = [
            TimeField.from_indices(g, tgrid, rng.integers(1, tgrid.count + 1, size=g.shape)) for _ in range(trials)
        ]
        S, idx = sup_evaluate(cls, region, tgrid, phase, cls.random(rng), _weight(cls, expo))
        tfields.append(TimeField.from_indices(g, tgrid, idx.reshape(g.shape)))
        for j, tf in enumerate(tfields):
            est = linearized_opnorm(
                tf, tgrid, phase, cls, region, max_iter=max_iter, seed=seed + 100 * k + j, weight_exponent=expo
            )
            best = max(best, est.value)
        ratios.append(best)
        log.info("LP level k=%d: ratio %.6g", k, best)
    slope, intercept = np.polyfit(ks, np.log2(ratios), 1)
    return LPSummationReport(ks, ratios, expo, float(slope), float(intercept), float(eps), bool(slope <= -eps + slack))
