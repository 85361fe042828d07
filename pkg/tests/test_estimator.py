import numpy as np
import pytest

from dispersive_lab import estimator as E
from dispersive_lab import grid as G
from dispersive_lab.phase import builtin_phase
from dispersive_lab.propagator import TimeField, TimeGrid, apply_T_linearized, maximal_function

from conftest import brute_force_maximal

SCHR = builtin_phase("schrodinger")


def _toy(N=16, L=2 * np.pi, R=2.0, dim=1):
    g = G.make_grid(dim, N, L)
    return g, E.InputClass.annulus(g, R)


def test_input_class_roundtrip(rng):
    g, cls = _toy(64, 8 * np.pi, 2.0)
    c = cls.random(rng)
    f = cls.embed(c)
    assert np.linalg.norm(c) == pytest.approx(1.0)
    assert G.to_space(f).l2norm() == pytest.approx(1.0, rel=1e-12)
    assert np.allclose(cls.coefficients(f), c)
    assert np.all(np.abs(cls.xi[:, 0]) >= 1.0) and np.all(np.abs(cls.xi[:, 0]) <= 4.0)
    band = E.InputClass.band(g, 2)
    assert band.size > 0 and np.all(np.abs(band.xi) < 8) and np.all(np.abs(band.xi) > 2)


def test_power_iteration_on_known_matrix(rng):
    U, _ = np.linalg.qr(rng.standard_normal((20, 20)))
    V, _ = np.linalg.qr(rng.standard_normal((8, 8)))
    s = np.array([5.0, 3.0, 2.0, 1.0, 0.5, 0.4, 0.2, 0.1])
    A = U[:, :8] * s @ V.T
    pr = E.power_iteration(lambda x: A @ x, lambda y: A.conj().T @ y, rng.standard_normal(8), tol=1e-12, max_iter=500)
    assert pr.converged
    assert pr.value == pytest.approx(5.0, rel=1e-10)
    assert all(b >= a - 1e-12 for a, b in zip(pr.history, pr.history[1:]))


def _adjoint_gap(op, rng):
    x = op.cls.random(rng)
    y = rng.standard_normal(op.apply(x).shape) + 0j
    return abs(np.vdot(op.apply(x), y) - np.vdot(x, op.adjoint(y))) / (np.linalg.norm(x) * np.linalg.norm(y))


@pytest.mark.parametrize("dim", [1, 2])
@pytest.mark.parametrize("region", [G.Region.ball(1.0), G.Region.everything()])
@pytest.mark.parametrize("small_limits", [False, True])
def test_operator_adjoint_and_apply(rng, monkeypatch, dim, region, small_limits):
    if small_limits:
        monkeypatch.setattr(E, "_DENSE_LIMIT", 50)
        monkeypatch.setattr(E, "_BATCH_LIMIT", 1)
    g = G.make_grid(dim, 32, 4 * np.pi)
    cls = E.InputClass.annulus(g, 2.0)
    p = builtin_phase("schrodinger", dim)
    tg = TimeGrid.uniform(6, 1.0)
    n = int(region.mask(g).sum())
    idx = rng.integers(0, 7, size=g.shape if region.kind == "all" else n)
    op = E.LinearizedOperator(cls, region, tg, p, idx, weight=rng.uniform(0.5, 1.0, cls.size))
    assert _adjoint_gap(op, rng) < 1e-12
    # apply agrees with the propagator on the embedded data
    c = cls.random(rng)
    full = np.zeros(g.shape, dtype=int)
    if region.kind == "all":
        full = idx
    else:
        full[region.mask(g)] = idx
    u = apply_T_linearized(cls.embed(c * op.w), TimeField.from_indices(g, tg, full), tg, p)
    ref = u.values[region.mask(g)] * np.sqrt(g.cell_volume)
    assert np.allclose(op.apply(c), ref, atol=1e-12)


def test_operator_shape_errors():
    g, cls = _toy()
    tg = TimeGrid.uniform(2, 1.0)
    with pytest.raises(ValueError):
        E.LinearizedOperator(cls, G.Region.everything(), tg, SCHR, np.zeros(3, dtype=int))
    with pytest.raises(ValueError):
        E.LinearizedOperator(cls, G.Region.ball(1.0), tg, SCHR, np.zeros(g.shape, dtype=int))


@pytest.mark.parametrize("region", [G.Region.ball(2.0), G.Region.everything()])
def test_sup_evaluators_agree(rng, region):
    g = G.make_grid(1, 64, 8 * np.pi)
    cls = E.InputClass.annulus(g, 4.0)
    tg = TimeGrid.uniform(40, 1.0)
    c = cls.random(rng)
    S_d, a_d = E.sup_evaluate(cls, region, tg, SCHR, c, method="direct")
    S_n, a_n = E.sup_evaluate(cls, region, tg, SCHR, c, method="nufft")
    assert np.allclose(S_n, S_d, rtol=1e-10)
    if region.kind == "all":
        S_f, a_f = E.sup_evaluate(cls, region, tg, SCHR, c, method="fft")
        assert np.allclose(S_f, S_d, rtol=1e-12)
        mr = maximal_function(cls.embed(c), tg, SCHR)
        assert np.allclose(mr.sup_field.values.real.ravel(), S_d, rtol=1e-12)
        assert a_d.shape == g.shape
    else:
        with pytest.raises(ValueError):
            E.sup_evaluate(cls, region, tg, SCHR, c, method="fft")
    with pytest.raises(ValueError):
        E.sup_evaluate(cls, region, TimeGrid(np.array([0.1, 0.5]), 1.0), SCHR, c, method="nufft")


def test_linearized_opnorm_isometry_and_contraction():
    g = G.make_grid(1, 64, 8 * np.pi)
    cls = E.InputClass.annulus(g, 1.0)
    tg = TimeGrid.uniform(4, 1.0)
    tf = TimeField.from_indices(g, tg, np.full(g.shape, 2))
    iso = E.linearized_opnorm(tf, tg, SCHR, cls, G.Region.everything())
    assert iso.value == pytest.approx(1.0, rel=1e-10)
    ball = E.linearized_opnorm(tf, tg, SCHR, cls, G.Region.ball(1.0), tol=1e-12, max_iter=2000)
    assert ball.value < 1.0
    assert E.recompute_value(ball) == pytest.approx(ball.value, rel=1e-8)
    # top singular value of the explicit matrix
    op = E.LinearizedOperator(cls, G.Region.ball(1.0), tg, SCHR, np.full(int(G.Region.ball(1.0).mask(g).sum()), 2))
    assert ball.value == pytest.approx(np.linalg.norm(op.dense_matrix(), 2), rel=1e-6)


def test_linearized_opnorm_weighted_recompute():
    g = G.make_grid(1, 64, 8 * np.pi)
    cls = E.InputClass.annulus(g, 2.0)
    tg = TimeGrid.uniform(4, 1.0)
    rng = np.random.default_rng(3)
    tf = TimeField.from_indices(g, tg, rng.integers(0, 5, g.shape))
    est = E.linearized_opnorm(tf, tg, SCHR, cls, G.Region.everything(), weight_exponent=0.7)
    assert E.recompute_value(est) == pytest.approx(est.value, rel=1e-8)
    # a constant time-field gives exactly the largest weight, attained at |xi| = 1
    const = TimeField.from_indices(g, tg, np.full(g.shape, 3))
    iso = E.linearized_opnorm(const, tg, SCHR, cls, G.Region.everything(), weight_exponent=0.7, tol=1e-12)
    assert iso.value == pytest.approx(2.0**-0.35, rel=1e-6)


def test_linearized_opnorm_grid_mismatch():
    g, cls = _toy()
    tg = TimeGrid.uniform(2, 1.0)
    with pytest.raises(ValueError):
        E.linearized_opnorm(TimeField.constant(G.make_grid(1, 32, 1.0), 0.5), tg, SCHR, cls, G.Region.everything())


@pytest.mark.parametrize("name, T", [("schrodinger", 1.0), ("wave", 1.0), ("airy", 0.3)])
def test_maximal_opnorm_toy_brute_force(name, T):
    p = builtin_phase(name)
    g, cls = _toy()
    tg = TimeGrid.uniform(2, T)
    exact = brute_force_maximal(p, cls, tg)
    est = E.maximal_opnorm(2.0, p, T, G.Region.everything(), tg, restarts=4, grid=g, cls=cls)
    assert est.value <= exact * (1 + 1e-10)
    assert est.value >= exact * (1 - 5e-2)
    assert E.recompute_value(est) == pytest.approx(est.value, rel=1e-10)


def test_maximal_opnorm_objective_never_decreases():
    g = G.make_grid(1, 128, 8 * np.pi)
    tg = TimeGrid.uniform(16, 1.0)
    est = E.maximal_opnorm(4.0, SCHR, 1.0, G.Region.ball(1.0), tg, restarts=3, grid=g, seed=5, chirp_delays=())
    for h in est.history:
        assert all(b >= a * (1 - 1e-9) for a, b in zip(h, h[1:]))
    assert est.value == pytest.approx(max(h[-1] for h in est.history))
    assert E.recompute_value(est) == pytest.approx(est.value, rel=1e-8)
    assert est.describe()["kind"] == "torus"


def test_maximal_opnorm_validation():
    g, cls = _toy()
    with pytest.raises(ValueError):
        E.maximal_opnorm(2.0, SCHR, 0.5, G.Region.everything(), TimeGrid.uniform(2, 1.0), grid=g)
    with pytest.raises(ValueError, match="no frequency nodes"):
        E.maximal_opnorm(64.0, SCHR, 1.0, G.Region.everything(), TimeGrid.uniform(2, 1.0), grid=g)


def test_packet_opnorm_recompute():
    est = E.packet_opnorm(SCHR, 4.0)
    assert est.kind == "packet"
    assert E.recompute_value(est) == pytest.approx(est.value, rel=1e-10)


def test_fit_scaling_recovers_power_law():
    pts = [(R, 3.0 * R**0.37) for R in (4, 8, 16, 32)]
    fit = E.fit_scaling(pts)
    assert fit.slope == pytest.approx(0.37, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0))
    # the smallest R is dropped by default
    bent = [(2.0, 100.0)] + pts
    assert E.fit_scaling(bent).slope == pytest.approx(0.37)
    assert E.fit_scaling(bent, drop_smallest=False).slope < 0
    run = E.running_slopes(pts)
    assert np.isnan(run[0]) and run[-1] == pytest.approx(0.37)
    with pytest.raises(ValueError):
        E.fit_scaling([(4, 1.0)])


def test_transference_report():
    local = E.fit_scaling([(R, R**0.25) for R in (4, 8, 16)])
    good = E.fit_scaling([(R, R**0.5) for R in (4, 8, 16)])
    bad = E.fit_scaling([(R, R**0.8) for R in (4, 8, 16)])
    assert E.transference_report(local, good, 2.0).passed
    rep = E.transference_report(local, bad, 2.0)
    assert not rep.passed and rep.bound == pytest.approx(0.6)
    with pytest.raises(ValueError):
        E.transference_report(local, E.fit_scaling([(R, R) for R in (4, 8)]), 2.0)


def test_scaling_sweep_validation():
    with pytest.raises(ValueError):
        E.scaling_sweep(SCHR, 1, [4, 8], "sideways")
    with pytest.raises(ValueError):
        E.scaling_sweep(SCHR, 1, [8, 4], "local")
    with pytest.raises(ValueError):
        E.scaling_sweep(SCHR, 1, [4, 6], "local")
    with pytest.raises(ValueError):
        E.scaling_sweep(SCHR, 1, [4, 8], "local", method="packets")


def test_small_local_sweep():
    sweep = E.scaling_sweep(builtin_phase("wave"), 1, [2, 4, 8], "local", restarts=2, rounds=4)
    assert sweep.method == "torus"
    assert sweep.R_list == [2.0, 4.0, 8.0]
    vals = [v for _, v in sweep.fit.points]
    assert all(b > a for a, b in zip(vals, vals[1:]))
    assert set(sweep.settings["Nt"]) == {2.0, 4.0, 8.0}


def test_lp_summation_small():
    rep = E.lp_summation_check(SCHR, 0.25, 0.2, k_max=3, tgrid=TimeGrid.uniform(8, 1.0), trials=1, max_iter=20)
    assert rep.ks == [1, 2, 3]
    assert rep.exponent == pytest.approx(0.7)
    assert all(r > 0 for r in rep.ratios)
    with pytest.raises(ValueError):
        E.lp_summation_check(SCHR, 0.25, 0.0)
