import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dispersive_lab import grid as G

from conftest import band_limited


def test_make_grid_rejects_bad_shapes():
    with pytest.raises(G.GridError):
        G.make_grid(1, 8, 1.0)
    with pytest.raises(G.GridError):
        G.make_grid(1, 48, 1.0)
    with pytest.raises(G.GridError):
        G.make_grid(3, 16, 1.0)
    with pytest.raises(G.GridError):
        G.make_grid(1, 16, 0.0)


def test_axes_are_in_fft_order():
    g = G.make_grid(1, 16, 8.0)
    assert g.x_axis[0] == 0.0
    assert g.x_axis[8] == pytest.approx(-4.0)
    assert g.xi_axis[1] == pytest.approx(2 * np.pi / 8.0)
    assert g.nyquist == pytest.approx(np.pi / g.spacing)
    assert np.allclose(np.sort(g.x_axis), np.arange(-8, 8) * 0.5)


def test_gaussian_transform_matches_closed_form():
    g = G.make_grid(1, 1024, 64.0)
    x = g.x[0]
    F = G.forward_transform(G.Field.space(g, np.exp(-(x**2) / 2)))
    exact = np.sqrt(2 * np.pi) * np.exp(-(g.xi[0] ** 2) / 2)
    assert np.max(np.abs(F.values - exact)) < 1e-12


def test_gaussian_transform_2d():
    g = G.make_grid(2, 128, 32.0)
    f = G.Field.space(g, np.exp(-(g.x_norm**2) / 2))
    exact = 2 * np.pi * np.exp(-(g.xi_norm**2) / 2)
    assert np.max(np.abs(G.forward_transform(f).values - exact)) < 1e-12


@settings(max_examples=25, deadline=None)
@given(
    dim=st.sampled_from([1, 2]),
    log_n=st.integers(4, 6),
    L=st.floats(0.5, 100.0),
    seed=st.integers(0, 2**31),
)
def test_roundtrip_and_parseval(dim, log_n, L, seed):
    g = G.make_grid(dim, 2**log_n, L)
    r = np.random.default_rng(seed)
    f = G.Field.space(g, r.standard_normal(g.shape) + 1j * r.standard_normal(g.shape))
    F = G.forward_transform(f)
    assert np.allclose(G.inverse_transform(F).values, f.values, atol=1e-12 * np.abs(f.values).max())
    assert F.l2norm() == pytest.approx((2 * np.pi) ** (dim / 2) * f.l2norm(), rel=1e-12)


def test_side_checks():
    g = G.make_grid(1, 16, 1.0)
    f = G.Field.space(g, np.ones(16))
    with pytest.raises(G.GridError):
        G.inverse_transform(f)
    with pytest.raises(G.GridError):
        G.forward_transform(G.forward_transform(f))
    with pytest.raises(G.GridError):
        f + G.forward_transform(f)
    with pytest.raises(G.GridError):
        G.Field.space(g, np.ones(15))
    assert G.to_space(f) is f


def test_field_values_are_read_only():
    g = G.make_grid(1, 16, 1.0)
    f = G.Field.space(g, np.zeros(16))
    with pytest.raises(ValueError):
        f.values[0] = 1.0


def test_dilate_keeps_samples_and_scales_the_spectrum(rng):
    g = G.make_grid(1, 256, 32 * np.pi)
    f = G.to_space(band_limited(g, rng, g.nyquist / 4))
    f2 = G.dilate(f, 2)
    assert f2.grid.side_length == pytest.approx(16 * np.pi)
    assert np.array_equal(f2.values, f.values)
    # f_2^(xi) = f^(xi / 2) / 2 on the coarser frequency lattice
    assert np.allclose(G.forward_transform(f2).values, G.forward_transform(f).values / 2)


def test_dilate_rejects_aliasing_and_non_dyadic(rng):
    g = G.make_grid(1, 64, 8.0)
    f = G.to_space(band_limited(g, rng, g.nyquist))
    with pytest.raises(G.GridError, match="band-limited"):
        G.dilate(f, 2)
    with pytest.raises(G.GridError, match="power of two"):
        G.dilate(f, 3)
    assert G.dilate(f, 0.5).grid.side_length == pytest.approx(16.0)


@pytest.mark.parametrize("dim", [1, 2])
def test_translate_space_and_frequency_agree(rng, dim):
    g = G.make_grid(dim, 32, 8.0)
    f = G.Field.space(g, rng.standard_normal(g.shape))
    h = [5 * g.spacing] + [-3 * g.spacing] * (dim - 1)
    a = G.translate(f, h)
    b = G.to_space(G.translate(G.forward_transform(f), h))
    assert np.allclose(a.values, b.values, atol=1e-12)
    # tau_h f(x) = f(x + h)
    assert a.values.ravel()[0] == f.values[(5,) + (29,) * (dim - 1)]


def test_translate_rejects_off_lattice_shift():
    g = G.make_grid(1, 32, 8.0)
    with pytest.raises(G.GridError):
        G.translate(G.Field.space(g, np.ones(32)), 0.1)


def test_ball_mask_is_periodic():
    g = G.make_grid(1, 32, 8.0)
    m = G.Region.ball(1.0, center=3.75).mask(g)
    assert m.sum() == 9  # 3.75 +- 1 wraps past 4 = -4
    assert m[np.isclose(g.x[0], -3.5)].all()
    with pytest.raises(G.GridError):
        G.Region.ball(5.0).mask(g)


def test_region_validation():
    with pytest.raises(G.GridError):
        G.Region.ball(0.0)
    with pytest.raises(G.GridError):
        G.Region.annulus(2.0, 1.0)
    with pytest.raises(G.GridError):
        G.Region("square")
    r = G.Region.dyadic(4.0)
    assert (r.inner, r.outer) == (2.0, 8.0)


def test_frequency_annulus_mask():
    g = G.make_grid(1, 64, 2 * np.pi)
    m = G.Region.dyadic(4.0).mask(g, G.Side.FREQUENCY)
    assert np.allclose(np.sort(np.abs(g.xi[0][m])), np.repeat(np.arange(2.0, 9.0), 2))


def test_restrict_norm():
    g = G.make_grid(1, 64, 8.0)
    f = G.Field.space(g, np.ones(64) * 2.0)
    assert G.restrict_norm(f, G.Region.everything()) == pytest.approx(2 * np.sqrt(8.0))
    assert G.restrict_norm(f, G.Region.ball(1.0), np.inf) == 2.0
    assert G.restrict_norm(f, G.Region.ball(1.0), 1) == pytest.approx(2 * 17 * g.spacing)
    with pytest.raises(G.GridError):
        G.restrict_norm(f, G.Region.everything(), 0.5)
