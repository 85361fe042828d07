import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special

from dispersive_lab import grid as G
from dispersive_lab.lpdecomp import chi, chi_radial, lambda_fn
from dispersive_lab.phase import builtin_phase
from dispersive_lab.propagator import (
    AliasingBudgetError,
    TimeField,
    TimeGrid,
    TimeGridError,
    apply_R_lowfreq,
    apply_T,
    apply_T_linearized,
    apply_T_weighted,
    auto_grid,
    auto_time_count,
    check_aliasing_budget,
    evolve_many,
    kernel_quadrature,
    maximal_function,
    nonstationary_decay_probe,
    required_side_length,
)
from dispersive_lab.phase import phase_on_grid

from conftest import band_limited

SCHR = builtin_phase("schrodinger")


def _rel(a, b):
    return np.linalg.norm(a - b) / np.linalg.norm(b)


# ---------------------------------------------------------------- time grids

def test_uniform_time_grid():
    tg = TimeGrid.uniform(4, 2.0)
    assert np.allclose(tg.nodes, [0.5, 1.0, 1.5, 2.0])
    assert np.allclose(tg.time([0, 1, 4]), [0.0, 0.5, 2.0])
    assert np.array_equal(tg.index_of([0.0, 1.5]), [0, 3])
    assert np.allclose(tg.snap([0.2, 0.3, 1.9]), [0.0, 0.5, 2.0])
    assert np.allclose(tg.scaled(0.5).nodes, [0.25, 0.5, 0.75, 1.0])


@pytest.mark.parametrize("nodes, T", [([], 1.0), ([0.0, 0.5], 1.0), ([0.5, 0.4], 1.0), ([0.5, 1.5], 1.0), ([0.5], 0.0)])
def test_time_grid_validation(nodes, T):
    with pytest.raises(TimeGridError):
        TimeGrid(np.array(nodes), T)


def test_index_of_rejects_off_grid_values():
    with pytest.raises(TimeGridError):
        TimeGrid.uniform(4, 1.0).index_of([0.3])


def test_time_field_validation():
    g = G.make_grid(1, 16, 1.0)
    with pytest.raises(TimeGridError):
        TimeField(g, np.full(16, 2.0), 1.0)
    with pytest.raises(TimeGridError):
        TimeField(g, np.full(16, -0.1), 1.0)
    with pytest.raises(TimeGridError):
        TimeField(g, np.zeros(15), 1.0)
    assert TimeField.constant(g, 0.3).values.shape == (16,)


# ---------------------------------------------------------------- propagator identities

@settings(max_examples=20, deadline=None)
@given(t=st.floats(-50, 50), seed=st.integers(0, 2**31), dim=st.sampled_from([1, 2]))
def test_unitarity(t, seed, dim):
    g = G.make_grid(dim, 64, 16.0)
    f = band_limited(g, np.random.default_rng(seed), 10.0)
    for name in ("schrodinger", "wave"):
        u = apply_T(f, t, builtin_phase(name, dim))
        assert u.l2norm() == pytest.approx(G.to_space(f).l2norm(), rel=1e-10)


def test_identity_and_semigroup(rng):
    g = G.make_grid(1, 256, 32.0)
    f = G.to_space(band_limited(g, rng, 8.0))
    assert _rel(apply_T(f, 0.0, SCHR).values, f.values) < 1e-14
    assert _rel(apply_T(apply_T(f, 0.3, SCHR), -0.3, SCHR).values, f.values) < 1e-12
    assert _rel(apply_T(apply_T(f, 0.2, SCHR), 0.7, SCHR).values, apply_T(f, 0.9, SCHR).values) < 1e-12
    with pytest.raises(TimeGridError):
        apply_T(f, np.nan, SCHR)


def test_gaussian_oracle_1d():
    g = G.make_grid(1, 4096, 64 * np.pi)
    x = g.x[0]
    u = apply_T(G.Field.space(g, np.exp(-(x**2) / 2)), 0.5, SCHR)
    exact = (1 - 1j) ** -0.5 * np.exp(-(x**2) / (2 * (1 - 1j)))
    assert _rel(u.values, exact) < 1e-6


def test_gaussian_oracle_2d():
    g = G.make_grid(2, 256, 16 * np.pi)
    r2 = g.x_norm**2
    t = 0.25
    u = apply_T(G.Field.space(g, np.exp(-r2 / 2)), t, builtin_phase("schrodinger", 2))
    z = 1 - 2j * t
    assert _rel(u.values, np.exp(-r2 / (2 * z)) / z) < 1e-6


def test_wave_shifts_one_sided_data():
    # for data with positive frequencies only, e^{it|D|} is translation by t
    g = G.make_grid(1, 512, 64.0)
    F = np.where(g.xi[0] > 0, np.exp(-((g.xi[0] - 4) ** 2)), 0.0)
    f = G.Field.frequency(g, F)
    shift = 16 * g.spacing
    moved = apply_T(f, shift, builtin_phase("wave"))
    assert np.allclose(moved.values, G.translate(G.to_space(f), shift).values, atol=1e-12)


def test_linearized_constant_field_is_bitwise_apply_T(rng):
    g = G.make_grid(2, 32, 8.0)
    p = builtin_phase("schrodinger", 2)
    f = band_limited(g, rng, 5.0)
    tg = TimeGrid.uniform(8, 1.0)
    tf = TimeField.from_indices(g, tg, np.full(g.shape, 3))
    assert np.array_equal(apply_T_linearized(f, tf, tg, p).values, apply_T(f, tg.nodes[2], p).values)
    zero = TimeField.from_indices(g, tg, np.zeros(g.shape, dtype=int))
    assert np.array_equal(apply_T_linearized(f, zero, tg, p).values, G.to_space(f).values)


def test_linearized_gathers_pointwise(rng):
    g = G.make_grid(1, 64, 8.0)
    f = band_limited(g, rng, 10.0)
    tg = TimeGrid.uniform(5, 1.0)
    idx = rng.integers(0, 6, g.shape)
    out = apply_T_linearized(f, TimeField.from_indices(g, tg, idx), tg, SCHR).values
    for j in range(6):
        ref = apply_T(f, float(tg.time(j)), SCHR).values
        assert np.array_equal(out[idx == j], ref[idx == j])


def test_linearized_rejects_mismatched_grid(rng):
    g = G.make_grid(1, 64, 8.0)
    tg = TimeGrid.uniform(5, 1.0)
    tf = TimeField.constant(G.make_grid(1, 32, 8.0), 0.2)
    with pytest.raises(G.GridError):
        apply_T_linearized(band_limited(g, rng, 4.0), tf, tg, SCHR)


def test_maximal_function_argmax(rng):
    g = G.make_grid(1, 128, 16.0)
    f = band_limited(g, rng, 6.0)
    tg = TimeGrid.uniform(12, 1.0)
    mr = maximal_function(f, tg, SCHR)
    stack = np.stack([np.abs(apply_T(f, t, SCHR).values) for t in tg.nodes])
    assert np.array_equal(mr.sup_field.values.real, stack.max(axis=0))
    assert np.array_equal(mr.argmax_index, stack.argmax(axis=0) + 1)
    lin = apply_T_linearized(f, mr.argmax_tfield, tg, SCHR)
    assert np.array_equal(np.abs(lin.values), mr.sup_field.values.real)


def test_maximal_function_refinement_is_monotone(rng):
    g = G.make_grid(1, 128, 16.0)
    f = band_limited(g, rng, 6.0)
    coarse = maximal_function(f, TimeGrid.uniform(8, 1.0), SCHR).sup_field.values.real
    fine = maximal_function(f, TimeGrid.uniform(64, 1.0), SCHR).sup_field.values.real
    assert np.all(fine >= coarse)


def test_lowfreq_and_weighted_variants(rng):
    g = G.make_grid(1, 128, 16.0)
    f = band_limited(g, rng, 10.0)
    tg = TimeGrid.uniform(4, 1.0)
    tf = TimeField.from_indices(g, tg, rng.integers(0, 5, g.shape))
    low = apply_R_lowfreq(f, tf, tg, SCHR)
    expect = apply_T_linearized(f.with_values(f.values * chi(g.xi)), tf, tg, SCHR)
    assert np.allclose(low.values, expect.values, atol=1e-12)
    w = apply_T_weighted(f, tf, tg, SCHR, 0.5)
    expect = apply_T_linearized(f.with_values(f.values * (1 + g.xi[0] ** 2) ** -0.25), tf, tg, SCHR)
    assert np.allclose(w.values, expect.values, atol=1e-12)
    assert np.array_equal(apply_T_weighted(f, tf, tg, SCHR, 0).values, apply_T_linearized(f, tf, tg, SCHR).values)
    with pytest.raises(ValueError):
        apply_T_weighted(f, tf, tg, SCHR, -1)


def test_evolve_many_matches_apply_T(rng):
    g = G.make_grid(2, 32, 8.0)
    p = builtin_phase("wave", 2)
    f = band_limited(g, rng, 6.0)
    times = np.linspace(0.1, 2.0, 7)
    blocks = {}
    for s, block in evolve_many(f.values, times, phase_on_grid(p, g.xi), g, chunk=3):
        for i, u in enumerate(block):
            blocks[s + i] = u
    for i, t in enumerate(times):
        assert np.allclose(blocks[i], apply_T(f, t, p).values, atol=1e-12)


# ---------------------------------------------------------------- budgets

def test_required_side_length_formula():
    assert required_side_length(4, 2, 1.0) == pytest.approx(2 + 2 * 2 * 8 + 8)
    assert required_side_length(4, 1, 1.0) == pytest.approx(2 + 2 + 8)
    assert auto_time_count(4, 2, 1.0) == 8 * 64
    assert auto_time_count(4, 1, 1.0) == 64


@pytest.mark.parametrize("a, R", [(1, 8), (2, 4), (3, 2)])
def test_auto_grid_meets_its_budget(a, R):
    g = auto_grid(1, R, a, 1.0)
    assert check_aliasing_budget(g, R, a, 1.0) <= g.side_length


def test_budget_violation_reports_required_length():
    g = G.make_grid(1, 1024, 20.0)
    with pytest.raises(AliasingBudgetError) as err:
        check_aliasing_budget(g, 8, 2, 1.0)
    assert err.value.required_L == pytest.approx(required_side_length(8, 2, 1.0))
    assert check_aliasing_budget(g, 8, 2, 1.0, force=True) > 20.0
    with pytest.raises(AliasingBudgetError, match="Nyquist"):
        check_aliasing_budget(G.make_grid(1, 16, 100.0), 8, 1, 1.0)


# ---------------------------------------------------------------- kernels

@pytest.mark.parametrize("z, t", [(0.0, 0.0), (3.0, 1.0), (-7.5, 1.0), (20.0, 0.5)])
def test_kernel_1d_matches_adaptive_quad(z, t):
    def part(fn):
        return integrate.quad(lambda s: fn(chi_radial(abs(s)) * np.exp(1j * (z * s + t * s * s))), -2, 2,
                              points=[-1, 1], limit=400, epsabs=1e-13, epsrel=1e-12)[0]

    ref = (part(np.real) + 1j * part(np.imag)) / (2 * np.pi)
    assert kernel_quadrature(z, t, SCHR) == pytest.approx(ref, rel=1e-8, abs=1e-12)


def test_kernel_2d_is_radial_and_matches_hankel():
    p = builtin_phase("schrodinger", 2)
    r, t = 3.0, 1.0
    pts = np.array([[r, 0.0], [0.0, r], [r / np.sqrt(2), -r / np.sqrt(2)]])
    K = kernel_quadrature(pts, t, p)
    assert np.allclose(K, K[0], rtol=1e-8)

    def part(fn):
        return integrate.quad(lambda s: fn(chi_radial(s) * np.exp(1j * t * s * s)) * special.j0(r * s) * s,
                              0, 2, points=[1], limit=400, epsabs=1e-13)[0]

    ref = (part(np.real) + 1j * part(np.imag)) / (2 * np.pi)
    assert K[0] == pytest.approx(ref, rel=1e-7)


def test_kernel_t0_is_even():
    K = kernel_quadrature(np.array([5.0, -5.0]), 0.0, builtin_phase("wave"))
    assert K[0] == pytest.approx(K[1], rel=1e-12)
    assert abs(K[0].imag) < 1e-14


# ---------------------------------------------------------------- non-stationary phase

def test_nonstationary_probe_respects_bound():
    fam = lambda v: (lambda x: v * x, lambda x: np.full_like(x, v))
    rep = nonstationary_decay_probe(lambda_fn, fam, 2, [5.0, 10.0, 20.0, 40.0],
                                    support=(-2, -1, -0.5, 0.5, 1, 2), rhs_points=20001)
    assert np.all(rep.ratios <= 1.0)
    assert rep.exponent > 2.0
    assert np.allclose(rep.min_grad, rep.params)
    assert set(rep.as_dict()) >= {"k", "fitted_exponent", "bound"}


def test_nonstationary_probe_rejects_stationary_point():
    fam = lambda v: (lambda x: v * x**2, lambda x: 2 * v * x)
    with pytest.raises(ValueError, match="vanishes"):
        nonstationary_decay_probe(chi, fam, 1, [1.0], rhs_points=2001)
    with pytest.raises(ValueError):
        nonstationary_decay_probe(chi, fam, -1, [1.0])
