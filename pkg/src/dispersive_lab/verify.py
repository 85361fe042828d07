"""Fast invariant suite behind ``dispersive-lab verify``.

Each check returns a :class:`Check` naming the invariant it instantiates, the
measured quantity and the threshold it was compared with.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from . import grid as G
from .estimator import InputClass, linearized_opnorm, power_iteration, LinearizedOperator, recompute_value
from .lpdecomp import psi_k, theta_split
from .norms import hl_maximal, sobolev_norm
from .phase import builtin_phase, check_homogeneity, derived_constants
from .propagator import (
    TimeField,
    TimeGrid,
    apply_R_lowfreq,
    apply_T,
    apply_T_linearized,
    maximal_function,
)

log = logging.getLogger(__name__)

__all__ = ["Check", "run_verify_suite"]


@dataclass
class Check:
    name: str
    criterion: str
    passed: bool
    value: float
    threshold: float

    def as_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = bool(d["passed"])
        d["value"] = float(d["value"])
        d["threshold"] = float(d["threshold"])
        return d


def _le(name, criterion, value, threshold) -> Check:
    value = float(value)
    return Check(name, criterion, bool(value <= threshold), value, float(threshold))


def _ge(name, criterion, value, threshold) -> Check:
    value = float(value)
    return Check(name, criterion, bool(value >= threshold), value, float(threshold))


def band_limited(grid: G.Grid, rng: np.random.Generator, kmax: float) -> G.Field:
    """Random field with transform supported in |xi| <= kmax."""
    F = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    F = np.where(grid.xi_norm <= kmax, F, 0.0)
    return G.Field.frequency(grid, F)


def _rel(a, b) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def _phase_checks(seed: int) -> list[Check]:
    out = []
    for name, kw in [("schrodinger", {}), ("wave", {}), ("airy", {}), ("fractional", {"a": 1.5})]:
        p = builtin_phase(name, 1, **kw)
        out.append(_le(f"homogeneity[{p.spec}]", "phase: homogeneity deviation < 1e-9", check_homogeneity(p, 256, seed), 1e-9))
    closed = {"schrodinger": (2.0, 32.0), "wave": (1.0, 4.0), "airy": (3.0, 192.0)}
    for name, (m, kappa) in closed.items():
        c = derived_constants(builtin_phase(name))
        err = max(abs(c.m - m), abs(c.M - m), abs(c.kappa - kappa))
        out.append(_le(f"constants[{name}]", "phase: m, M, kappa match closed forms", err, 1e-9))
    rng = np.random.default_rng(seed)
    worst = 0.0
    for name in ("schrodinger", "wave"):
        p = builtin_phase(name, 2)
        theta = rng.uniform(0, 2 * np.pi, 100)
        r = rng.uniform(0.1, 10, 100)
        xi = np.stack([r * np.cos(theta), r * np.sin(theta)])
        h = 1e-6 * r
        fd = np.stack([(p(xi + h * e[:, None]) - p(xi - h * e[:, None])) / (2 * h) for e in np.eye(2)])
        gr = p.gradient(xi)
        worst = max(worst, float(np.max(np.abs(fd - gr) / np.abs(gr).max(axis=0))))
    out.append(_le("gradient-vs-differences", "phase: grad matches central differences to 1e-6", worst, 1e-6))
    return out


def _lp_checks() -> list[Check]:
    g = G.make_grid(1, 1024, 64 * np.pi)
    K = 6
    xi = g.xi
    s = sum(psi_k(xi, k) for k in range(K + 1))
    inside = g.xi_norm <= 2 ** (K - 1)
    err = float(np.max(np.abs(s[inside] - 1)))
    overlap = max(
        float(np.max(np.abs(psi_k(xi, k) * psi_k(xi, j)))) for k in range(K + 1) for j in range(K + 1) if abs(k - j) > 1
    )
    th = theta_split(xi)[0]
    r = g.xi_norm
    ann = (r >= 0.5) & (r <= 2)
    outside = (r <= 0.25) | (r >= 4)
    th_err = max(float(np.max(np.abs(th[ann] - 1))), float(np.max(np.abs(th[outside]))))
    return [
        _le("partition-of-unity", "lpdecomp: |sum psi_k - 1| < 1e-14", err, 1e-14),
        _le("neighbour-disjointness", "lpdecomp: psi_k psi_j = 0 for |k-j| > 1", overlap, 0.0),
        _le("theta-annulus", "lpdecomp: theta = 1 on A(1), 0 off {1/4 < |xi| < 4}", th_err, 1e-15),
    ]


def _propagator_checks(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed)
    p = builtin_phase("schrodinger")
    g = G.make_grid(1, 512, 32 * np.pi)
    f = G.to_space(band_limited(g, rng, 6.0))
    out = []
    u = apply_T(f, 0.37, p)
    out.append(_le("unitarity", "propagator: ||T_t f|| = ||f|| to 1e-10", abs(u.l2norm() / f.l2norm() - 1), 1e-10))
    out.append(_le("identity-at-zero", "propagator: T_0 f = f to 1e-12", _rel(apply_T(f, 0.0, p).values, f.values), 1e-12))
    semi = _rel(apply_T(apply_T(f, 0.2, p), 0.3, p).values, apply_T(f, 0.5, p).values)
    out.append(_le("semigroup", "propagator: T_s T_t = T_{s+t} to 1e-12", semi, 1e-12))

    gg = G.make_grid(1, 4096, 64 * np.pi)
    x = gg.x[0]
    gauss = G.Field.space(gg, np.exp(-(x**2) / 2))
    exact = (1 - 1j) ** -0.5 * np.exp(-(x**2) / (2 * (1 - 1j)))
    out.append(_le("gaussian-oracle", "propagator: closed-form Gaussian at t = 0.5 to 1e-6", _rel(apply_T(gauss, 0.5, p).values, exact), 1e-6))

    tg = TimeGrid.uniform(16, 1.0)
    tf = TimeField.from_indices(g, tg, np.full(g.shape, 5))
    same = np.array_equal(apply_T_linearized(f, tf, tg, p).values, apply_T(f, float(tg.nodes[4]), p).values)
    out.append(Check("linearized-constant", "propagator: constant time-field equals apply_T bitwise", same, 0.0 if same else 1.0, 0.0))

    mr = maximal_function(f, tg, p)
    lin = apply_T_linearized(f, mr.argmax_tfield, tg, p)
    dev = float(np.max(np.abs(np.abs(lin.values) - mr.sup_field.values)))
    out.append(_le("argmax-realizes-sup", "propagator: sup_field = |T_{argmax} f| exactly", dev, 0.0))

    fine = maximal_function(f, TimeGrid.uniform(32, 1.0), p)
    drop = float(np.max(mr.sup_field.values.real - fine.sup_field.values.real))
    out.append(_le("refinement-monotone", "propagator: nested refinement never lowers the sup", drop, 0.0))

    # exact rescaling identity, R = 2
    R = 2
    hi = band_limited(g, rng, g.nyquist / (2 * R))
    fR = G.dilate(G.to_space(hi), R)
    tgR = TimeGrid.uniform(16, R**2)
    idx = rng.integers(0, 17, g.shape)
    lhs = G.restrict_norm(apply_T_linearized(hi, TimeField.from_indices(g, tgR, idx), tgR, p), G.Region.ball(R), 2)
    tg1 = tgR.scaled(1.0 / R**2)
    rhs = R**0.5 * G.restrict_norm(
        apply_T_linearized(fR, TimeField.from_indices(fR.grid, tg1, idx), tg1, p), G.Region.ball(1.0), 2
    )
    out.append(_le("rescaling-identity", "propagator: change of variables identity to 1e-6", abs(lhs / rhs - 1), 1e-6))

    low = apply_R_lowfreq(f, tf, tg, p)
    out.append(_le("lowfreq-contraction", "propagator: ||R_t(x) f||_2 <= ||f||_2", low.l2norm() / f.l2norm(), 1 + 1e-10))
    return out


def _norm_checks(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed + 1)
    g = G.make_grid(1, 256, 16 * np.pi)
    f = G.to_space(band_limited(g, rng, 5.0))
    out = [
        _le("sobolev-parseval", "norms: H^0 norm equals L^2 norm", abs(sobolev_norm(f, 0) / f.l2norm() - 1), 1e-12),
    ]
    M = hl_maximal(f)
    out.append(_ge("hl-dominates", "norms: Mf >= |f|", float(np.min(M.values.real - np.abs(f.values))), 0.0))
    scaled = hl_maximal(f * 3.0)
    out.append(_le("hl-homogeneous", "norms: M(cf) = |c| Mf", float(np.max(np.abs(scaled.values - 3 * M.values))), 1e-12))
    return out


def _grid_checks(seed: int) -> list[Check]:
    rng = np.random.default_rng(seed + 2)
    g = G.make_grid(2, 32, 8.0)
    f = G.Field.space(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    back = G.inverse_transform(G.forward_transform(f))
    parseval = abs(G.forward_transform(f).l2norm() / ((2 * np.pi) ** (g.dim / 2) * f.l2norm()) - 1)
    shift = 3 * g.spacing
    a = G.to_space(G.translate(G.forward_transform(f), [shift, 0.0]))
    b = G.translate(f, [shift, 0.0])
    return [
        _le("transform-roundtrip", "grid: inverse(forward f) = f", _rel(back.values, f.values), 1e-13),
        _le("parseval", "grid: ||f^|| = (2 pi)^{n/2} ||f||", parseval, 1e-13),
        _le("translate-sides-agree", "grid: translation in space equals modulation in frequency", _rel(a.values, b.values), 1e-12),
    ]


def _estimator_checks(seed: int) -> list[Check]:
    p = builtin_phase("schrodinger")
    g = G.make_grid(1, 64, 8 * np.pi)
    cls = InputClass.annulus(g, 1.0)
    tg = TimeGrid.uniform(4, 1.0)
    iso = linearized_opnorm(TimeField.constant(g, 0.0), tg, p, cls, G.Region.everything(), seed=seed)
    ball = linearized_opnorm(TimeField.constant(g, 0.0), tg, p, cls, G.Region.ball(1.0), tol=1e-12, max_iter=1000, seed=seed)
    rng = np.random.default_rng(seed)
    idx = rng.integers(1, 5, size=int(G.Region.ball(1.0).mask(g).sum()))
    op = LinearizedOperator(cls, G.Region.ball(1.0), tg, p, idx)
    pr = power_iteration(op.apply, op.adjoint, cls.random(rng), tol=0, max_iter=40)
    drops = float(np.max(-np.diff(pr.history))) if len(pr.history) > 1 else 0.0
    return [
        _le("isometry-norm", "estimator: t = 0 on the whole torus gives norm 1", abs(iso.value - 1), 1e-8),
        _le("ball-contraction", "estimator: restriction to B(0,1) gives norm < 1", ball.value, 1 - 1e-6),
        _le("witness-recompute", "estimator: value reproduced from the witness", abs(recompute_value(ball) / ball.value - 1), 1e-8),
        _le("power-monotone", "estimator: Rayleigh quotients non-decreasing", drops, 1e-12 * pr.value),
    ]


SUITE: list[Callable[[int], list[Check]]] = [
    _phase_checks,
    lambda s: _lp_checks(),
    _propagator_checks,
    _norm_checks,
    _grid_checks,
    _estimator_checks,
]


def run_verify_suite(seed: int = 0) -> list[Check]:
    checks: list[Check] = []
    for fn in SUITE:
        checks.extend(fn(seed))
    for c in checks:
        log.info("%-24s %s  value=%.3e threshold=%.3e", c.name, "PASS" if c.passed else "FAIL", c.value, c.threshold)
    return checks
