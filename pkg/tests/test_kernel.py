import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fracspde.errors import ResolutionInsufficient, SymbolNotIntegrable
from fracspde.kernel import (KernelGrid, build_gradient, build_kernel, fit_scaling_slope, fourier_symbol,
                             integrability_threshold, lattice_symbol, lp_norm, scaling_exponent,
                             scaling_norms, tail_exponent_check)
from fracspde.params import LatticeSpec, ModelParams, diffusion_length

HEAT = ModelParams(2.0, 1.0, 0.0)


def fixed_lattice(params, t_max=2.0):
    m = 1024 if params.dim == 1 else 512
    return LatticeSpec(10.0 * diffusion_length(params, t_max), m)


def mirror(values):
    # x -> -x on the grid -L + j dx is j -> (M - j) mod M along every axis
    out = values
    for ax in range(values.ndim):
        out = np.roll(np.flip(out, axis=ax), 1, axis=ax)
    return out


# ------------------------------------------------------------------ symbols

def test_symbol_heat_at_zero():
    assert fourier_symbol(HEAT, "Y", 1.0, 0.0) == 1.0


def test_symbol_heat_decay():
    assert fourier_symbol(HEAT, "Y", 1.0, 2.0) == pytest.approx(math.exp(-2.0), abs=1e-14)


def test_symbol_z_second_order_at_zero():
    prm = ModelParams(1.5, 1.5, 0.2)
    assert fourier_symbol(prm, "Z", 1.0, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_symbol_zstar_at_zero():
    prm = ModelParams(1.5, 1.5, 0.2)
    assert fourier_symbol(prm, "Zstar", 0.7, 0.0) == pytest.approx(1.0, abs=1e-15)


def test_symbol_y_at_zero_is_power_over_gamma():
    prm = ModelParams(1.8, 0.9, 0.3)
    t = 1.7
    ref = t ** 0.2 / math.gamma(1.2)
    assert fourier_symbol(prm, "Y", t, 0.0) == pytest.approx(ref, rel=1e-14)


# ------------------------------------------------------------------ kernels

def test_heat_kernel_matches_gaussian():
    lat = LatticeSpec(20.0, 1024)
    k = build_kernel(HEAT, lat, "Y", 1.0)
    x = lat.coords()
    g = np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(k.values - g)) <= 1e-6
    assert k.values[512] == pytest.approx(1 / math.sqrt(2 * math.pi), abs=1e-12)


def test_fractional_mass_identity():
    prm = ModelParams(1.8, 0.9, 0.3)
    k = build_kernel(prm, None, "Y", 1.0)
    mass = k.lattice.dx * np.sum(k.values)
    assert mass == pytest.approx(1 / math.gamma(1.2), abs=1e-10)
    assert 1 / math.gamma(1.2) == pytest.approx(1.08912, abs=1e-5)


@pytest.mark.parametrize("prm", [ModelParams(1.5, 0.7, 0.4), ModelParams(1.9, 1.3, 0.0),
                                 ModelParams(2.0, 0.6, 0.2, dim=2, p=1.5)])
def test_mass_identity_and_symmetry(prm):
    t = 1.3
    k = build_kernel(prm, None, "Y", t)
    mass = k.lattice.dx ** prm.dim * np.sum(k.values)
    ref = t ** (prm.beta + prm.gamma - 1) / math.gamma(prm.beta + prm.gamma)
    assert mass == pytest.approx(ref, rel=1e-10)
    scale = np.max(np.abs(k.values))
    assert np.max(np.abs(k.values - mirror(k.values))) <= 1e-10 * scale


def test_z_kernel_of_second_order_has_mass_t():
    prm = ModelParams(1.8, 1.4, 0.0)
    k = build_kernel(prm, None, "Z", 0.8)
    assert k.lattice.dx * np.sum(k.values) == pytest.approx(0.8, rel=1e-10)


def test_gradient_matches_gaussian_derivative():
    lat = LatticeSpec(20.0, 1024)
    g = build_gradient(HEAT, lat, 1.0, 0)
    x = lat.coords()
    ref = -x * np.exp(-x * x / 2) / math.sqrt(2 * math.pi)
    assert np.max(np.abs(g.values - ref)) <= 1e-6
    assert g.label == "GradY_0"


@pytest.mark.parametrize("prm", [ModelParams(1.8, 0.9, 0.3, p=1.5), ModelParams(1.6, 1.2, 0.0),
                                 ModelParams(2.0, 0.8, 0.0, dim=2, p=1.2)])
def test_gradient_antisymmetry_and_zero_mean(prm):
    g = build_gradient(prm, fixed_lattice(prm), 1.0, 0)
    scale = np.max(np.abs(g.values))
    assert np.max(np.abs(g.values + mirror(g.values))) <= 1e-10 * scale
    centre = (g.lattice.points_per_axis // 2,) * prm.dim
    assert abs(g.values[centre]) <= 1e-12 * scale
    assert abs(g.lattice.dx ** prm.dim * np.sum(g.values)) <= 1e-9


def test_gradient_norm_ratio_example():
    prm = ModelParams(1.8, 0.9, 0.3, p=1.5)
    lat = fixed_lattice(prm)
    n1, n2 = scaling_norms(prm, lat, 1.5, "gradient", [1.0, 2.0])
    ref = 2.0 ** scaling_exponent(prm, 1.5, "gradient")
    assert n2 / n1 == pytest.approx(ref, rel=0.02)


def test_lp_norm_examples():
    lat = LatticeSpec(20.0, 1024)
    k = build_kernel(HEAT, lat, "Y", 1.0)
    assert lp_norm(k, 2.0) == pytest.approx((4 * math.pi) ** -0.5, rel=1e-12)
    assert lp_norm(k, 1.0) == pytest.approx(fourier_symbol(HEAT, "Y", 1.0, 0.0), rel=1e-12)
    zero = type(k)(1.0, np.zeros_like(k.values), "Y", HEAT, lat)
    assert lp_norm(zero, 1.5) == 0.0


def test_lp_norm_translation_invariant():
    prm = ModelParams(1.7, 0.8, 0.1)
    k = build_kernel(prm, None, "Y", 1.0)
    shifted = type(k)(1.0, np.roll(k.values, 37), "Y", prm, k.lattice)
    assert lp_norm(shifted, 1.5) == lp_norm(k, 1.5)


def test_scaling_exponent_examples():
    assert scaling_exponent(HEAT, 2.0, "kernel") == -0.5
    assert scaling_exponent(HEAT, 2.0, "gradient") == -1.5
    prm = ModelParams(1.3, 0.7, 0.45, dim=2)
    assert scaling_exponent(prm, 1.0, "kernel") == pytest.approx(0.7 + 0.45 - 1.0, abs=1e-15)
    with pytest.raises(ValueError):
        scaling_exponent(prm, 1.0, "other")


def test_fit_slope_heat():
    slope = fit_scaling_slope(HEAT, LatticeSpec(20.0, 1024), 2.0, "kernel", [0.5, 1.0, 2.0])
    assert slope == pytest.approx(-0.5, rel=0.02)


def test_fit_slope_mass_case():
    prm = ModelParams(1.5, 0.8, 0.0, p=1.0)
    slope = fit_scaling_slope(prm, fixed_lattice(prm), 1.0, "kernel", [0.5, 0.7, 1.0, 1.4, 2.0])
    assert slope == pytest.approx(-0.2, rel=0.02)


def test_fit_slope_fractional_example():
    prm = ModelParams(1.8, 0.9, 0.3, p=1.5)
    slope = fit_scaling_slope(prm, fixed_lattice(prm), 1.5, "kernel", [0.5, 0.7, 1.0, 1.4, 2.0])
    assert slope == pytest.approx(scaling_exponent(prm, 1.5), rel=0.02)


def test_fit_slope_needs_three_times():
    with pytest.raises(ValueError):
        fit_scaling_slope(HEAT, None, 2.0, "kernel", [1.0, 1.0, 2.0])


def test_tail_exponent_fractional():
    prm = ModelParams(1.5, 1.0, 0.0)
    k = build_kernel(prm, LatticeSpec(100.0, 1024), "Y", 1.0)
    slope = tail_exponent_check(k)
    assert slope <= -(1 + 1.5) + 0.5
    assert slope == pytest.approx(-2.5, abs=0.1)


def test_tail_exponent_gradient():
    prm = ModelParams(1.5, 1.0, 0.0)
    g = build_gradient(prm, LatticeSpec(100.0, 1024), 1.0, 0)
    assert tail_exponent_check(g) <= -(1 + 1.5 + 1) + 0.5


def test_tail_refused_for_gaussian():
    k = build_kernel(HEAT, LatticeSpec(20.0, 256), "Y", 1.0)
    with pytest.raises(ValueError):
        tail_exponent_check(k)


def test_tail_below_noise_floor():
    # a profile that has already fallen below 1e-13 of its peak in the window
    prm = ModelParams(1.5, 1.0, 0.0)
    lat = LatticeSpec(50.0, 256)
    x = lat.coords()
    grid = KernelGrid(1.0, np.exp(-x * x), "Y", prm, lat)
    with pytest.raises(ResolutionInsufficient):
        tail_exponent_check(grid)


def test_non_integrable_symbol_refused():
    prm = ModelParams(0.5, 1.0, 0.5, dim=2, p=2.0)
    assert integrability_threshold(prm, False) == 1.0
    with pytest.raises(SymbolNotIntegrable):
        build_kernel(prm, LatticeSpec(10.0, 64), "Y", 1.0, nyquist_tol=1.0)


def test_coarse_lattice_refused():
    prm = ModelParams(1.5, 0.9, 0.3)
    with pytest.raises(ResolutionInsufficient):
        build_kernel(prm, LatticeSpec(10.0, 64), "Y", 1.0, nyquist_tol=1e-6)


def test_bad_arguments():
    with pytest.raises(ValueError):
        build_kernel(HEAT, None, "Y", 0.0)
    with pytest.raises(ValueError):
        build_gradient(HEAT, None, 1.0, axis=1)
    with pytest.raises(ValueError):
        build_kernel(HEAT, None, "W", 1.0)


def test_lattice_symbol_real_and_fft_ordered():
    lat = LatticeSpec(5.0, 16)
    s = lattice_symbol(HEAT, lat, "Y", 1.0)
    xi = lat.wavenumbers()
    assert np.allclose(s, np.exp(-0.5 * xi * xi), rtol=1e-12, atol=0)


# ------------------------------------------------------------------ properties

@settings(max_examples=15, deadline=None)
@given(alpha=st.floats(1.2, 2.0), beta=st.floats(0.3, 1.0), gamma=st.floats(0.0, 0.6),
       t=st.floats(0.3, 3.0))
def test_symmetry_and_mass_property(alpha, beta, gamma, t):
    prm = ModelParams(alpha, beta, gamma)
    lat = LatticeSpec(10.0 * diffusion_length(prm, t), 1024)
    k = build_kernel(prm, lat, "Y", t, nyquist_tol=1.0)
    scale = np.max(np.abs(k.values))
    assert np.max(np.abs(k.values - mirror(k.values))) <= 1e-10 * scale
    ref = t ** (beta + gamma - 1) / math.gamma(beta + gamma)
    assert lat.dx * np.sum(k.values) == pytest.approx(ref, rel=1e-9)


SELF_SIMILAR = [
    (ModelParams(1.8, 0.6, 0.3, p=1.5), "kernel"),
    (ModelParams(1.5, 1.4, 0.0, p=2.0), "kernel"),
    (ModelParams(2.0, 1.0, 0.0, p=1.5), "gradient"),
    (ModelParams(1.8, 1.0, 0.3, p=1.5), "gradient"),
]


@pytest.mark.parametrize("prm,kind", SELF_SIMILAR)
def test_self_similarity(prm, kind):
    lat = fixed_lattice(prm, 2.0)
    n1, n2 = scaling_norms(prm, lat, prm.p, kind, [0.8, 1.6])
    assert n2 / n1 == pytest.approx(2.0 ** scaling_exponent(prm, prm.p, kind), rel=0.02)
