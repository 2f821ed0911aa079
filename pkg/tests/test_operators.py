import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from grushin.discretization import (Discretization, GridFunction, SpectralField, backward, band_projection,
                                    forward, load_field, save_field)
from grushin.hermite import eval_scaled_hermite
from grushin.identities import compact_symbols, sparse_test_elements
from grushin.operators import (CompiledOperator, FourierQuadrature, apply_grushin_pseudo, apply_hermite_pseudo,
                               apply_joint_pseudo, apply_multiplier, apply_pseudo, apply_via_fourier_inversion,
                               bessel_sobolev_check, compute_kernel, heat_apply, heat_kernel,
                               sobolev_extremal_ratio)
from grushin.symbols import SymbolFn, constant, power_decay, sinusoidal_x


def plane_mode(disc, nu, k_index):
    """``Phi_nu^lam(x') exp(-i lam x'')`` for the lattice point ``k_index``."""
    lam = disc.lattice[k_index]
    mag = float(np.linalg.norm(lam))
    xp = disc.xp_points()
    phi = np.array([eval_scaled_hermite(nu, mag, p) for p in xp])
    wave = np.exp(-1j * disc.xpp_points() @ lam)
    return GridFunction(disc, phi[:, None] * wave[None, :])


def random_band(disc, rng, size=()):
    return GridFunction(disc, disc.backward_array(disc.random_coeffs(rng, size=size)))


def rel(a, b):
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


@pytest.fixture(scope="module")
def hermite_disc():
    return Discretization(1, 0, K=16)


# -- transforms ---------------------------------------------------------------


@pytest.mark.parametrize("nu, k_index", [((0,), 0), ((3,), 2), ((7,), 5)])
def test_plane_mode_has_unit_coefficient(small_disc, nu, k_index):
    c = forward(plane_mode(small_disc, nu, k_index)).coeffs
    expected = np.zeros_like(c)
    expected[k_index, small_disc.mu.index(nu)] = 1.0
    assert np.max(np.abs(c - expected)) <= 1e-8


def test_roundtrip_is_idempotent(small_disc, rng):
    f = GridFunction(small_disc, rng.standard_normal(small_disc.grid_shape))
    p1 = band_projection(f)
    p2 = band_projection(p1)
    assert rel(p2.values, p1.values) <= 1e-8


def test_parseval_on_band(mid_disc, rng):
    F = SpectralField(mid_disc, mid_disc.random_coeffs(rng))
    assert abs(F.norm() - backward(F).norm()) <= 1e-8 * F.norm()


def test_forward_reports_out_of_band_mass(small_disc, rng):
    band = random_band(small_disc, rng)
    assert forward(band).meta["out_of_band_fraction"] <= 1e-12
    rough = GridFunction(small_disc, rng.standard_normal(small_disc.grid_shape))
    assert forward(rough).meta["out_of_band_fraction"] > 0.1


def test_grid_shape_is_checked(small_disc):
    with pytest.raises(ValueError):
        GridFunction(small_disc, np.zeros((3, 3)))


def test_save_load_roundtrip(small_disc, rng, tmp_path):
    f = random_band(small_disc, rng)
    path = tmp_path / "f.bin"
    save_field(path, f)
    g = load_field(path)
    assert g.disc.params() == small_disc.params()
    assert np.array_equal(g.values, f.values)
    F = forward(f)
    save_field(tmp_path / "F.bin", F)
    G = load_field(tmp_path / "F.bin", small_disc)
    assert np.array_equal(G.coeffs, F.coeffs)


def test_load_rejects_other_discretization(small_disc, mid_disc, rng, tmp_path):
    save_field(tmp_path / "f.bin", random_band(small_disc, rng))
    with pytest.raises(ValueError):
        load_field(tmp_path / "f.bin", mid_disc)
    (tmp_path / "junk.bin").write_bytes(b"not a field")
    with pytest.raises(ValueError):
        load_field(tmp_path / "junk.bin")


# -- pseudo-multipliers -------------------------------------------------------


def test_identity_symbol_is_band_projection(small_disc, rng):
    f = GridFunction(small_disc, rng.standard_normal(small_disc.grid_shape))
    out = apply_grushin_pseudo(constant(1.0), f)
    assert np.max(np.abs(out.values - band_projection(f).values)) <= 1e-12 * np.max(np.abs(out.values))
    twice = apply_grushin_pseudo(constant(1.0), out)
    assert np.max(np.abs(twice.values - out.values)) <= 1e-12 * np.max(np.abs(out.values))
    joint = apply_joint_pseudo(constant(1.0, joint=True), f)
    assert rel(joint.values, out.values) <= 1e-12


def test_eta_squared_eigen_relation(hermite_disc):
    m = SymbolFn("eta", lambda x, eta: eta ** 2, 1, 0)
    xp = hermite_disc.xp_points()
    for k in (0, 3, 9):
        phi = np.array([eval_scaled_hermite((k,), 1.0, p) for p in xp])[:, None]
        out = apply_hermite_pseudo(m, GridFunction(hermite_disc, phi))
        assert rel(out.values, (2 * k + 1) * phi) <= 1e-8


def test_hermite_cutoff_drops_high_degrees(hermite_disc, rng):
    f = random_band(hermite_disc, rng)
    out = apply_hermite_pseudo(constant(1.0, n2=0), f, K=4)
    c = forward(out).coeffs
    assert np.max(np.abs(c[:, hermite_disc.degree > 4])) <= 1e-12
    assert rel(c[:, hermite_disc.degree <= 4], forward(f).coeffs[:, hermite_disc.degree <= 4]) <= 1e-10
    with pytest.raises(ValueError):
        apply_hermite_pseudo(constant(1.0), random_band(Discretization(1, 1, 4, 2, 8, 8.0), rng))


def test_spatial_symbol_multiplies_pointwise(small_disc, rng):
    m = SymbolFn("x_eta", lambda x, eta: np.cos(x[..., 0]) + 0 * eta, 1, 1)
    f = GridFunction(small_disc, rng.standard_normal(small_disc.grid_shape))
    out = apply_grushin_pseudo(m, f)
    expected = np.cos(small_disc.points()[..., 0]) * band_projection(f).values
    assert rel(out.values, expected) <= 1e-12


def test_kappa_symbol_on_plane_wave(small_disc):
    k_index = 6
    lam = small_disc.lattice[k_index, 0]
    f = plane_mode(small_disc, (2,), k_index)
    m = SymbolFn("tau_kappa", lambda x, tau, kappa: kappa[..., 0], 1, 1)
    out = apply_joint_pseudo(m, f)
    assert rel(out.values, -lam * band_projection(f).values) <= 1e-10


def test_joint_l1_symbol_matches_G_mode(small_disc, rng):
    F = power_decay(0.7)
    m = SymbolFn("tau_kappa", lambda x, tau, kappa: (1 + tau.sum(axis=-1)) ** -0.7, 1, 1)
    f = random_band(small_disc, rng)
    assert rel(apply_joint_pseudo(m, f).values, apply_grushin_pseudo(F, f, "G").values) <= 1e-12


def test_x_independent_symbol_equals_coefficient_multiplier(small_disc, rng):
    m = power_decay(0.5)
    f = random_band(small_disc, rng)
    op = CompiledOperator(m, small_disc, "sqrtG", force_shells=True)
    direct = apply_multiplier(op.multiplier(), f)
    assert rel(op(f).values, direct.values) <= 1e-10


def test_separable_and_shell_paths_agree(small_disc, rng):
    m = sinusoidal_x(0.3)
    assert m.terms is not None
    f = random_band(small_disc, rng)
    fast = apply_grushin_pseudo(m, f, "G")
    slow = apply_grushin_pseudo(m, f, "G", force_shells=True)
    assert rel(fast.values, slow.values) <= 1e-10


def test_shell_bump_extracts_one_shell(small_disc):
    k0, i0 = 2, 3
    target = small_disc.eta()[i0, k0]
    f = GridFunction(small_disc, plane_mode(small_disc, (k0,), i0).values
                     + plane_mode(small_disc, (k0 + 3,), i0).values)
    m = SymbolFn("eta", lambda x, eta: np.exp(-((eta - target) / 1e-3) ** 2), 1, 1)
    out = forward(apply_grushin_pseudo(m, f, "G")).coeffs
    others = np.ones_like(out, dtype=bool)
    others[small_disc.eta() == target] = False
    assert abs(out[i0, k0] - 1) <= 1e-8
    assert np.max(np.abs(out[others])) <= 1e-8


@pytest.mark.parametrize("mode", ["sqrtG", "G"])
def test_adjoint_relation(small_disc, rng, mode):
    op = CompiledOperator(sinusoidal_x(0.2), small_disc, mode, force_shells=True)
    f, g = random_band(small_disc, rng), random_band(small_disc, rng)
    lhs = small_disc.inner(op.apply_array(f.values), g.values)
    rhs = small_disc.inner(f.values, op.adjoint_array(g.values))
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)


def test_mode_and_arity_must_match(small_disc, rng):
    f = random_band(small_disc, rng)
    with pytest.raises(ValueError):
        apply_joint_pseudo(constant(1.0), f)
    with pytest.raises(ValueError):
        apply_pseudo(constant(1.0), f, "bogus")


@given(st.floats(0.1, 5.0), st.floats(-2.0, 2.0))
def test_linearity(small_disc, a, b):
    r = np.random.default_rng(7)
    f, g = random_band(small_disc, r), random_band(small_disc, r)
    m = sinusoidal_x(0.4)
    lhs = apply_grushin_pseudo(m, GridFunction(small_disc, a * f.values + b * g.values)).values
    rhs = a * apply_grushin_pseudo(m, f).values + b * apply_grushin_pseudo(m, g).values
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * (1 + np.max(np.abs(rhs)))


# -- Fourier-inversion route --------------------------------------------------


def test_fourier_route_on_eigenfunction(hermite_disc):
    R = 6.0
    bump = SymbolFn("eta", lambda x, eta: np.where(np.abs(eta) < R, np.exp(-eta ** 2 / 2) *
                                                   np.exp(1 - 1 / np.clip(1 - (eta / R) ** 2, 1e-300, None)),
                                                   0.0), 1, 0)
    xp = hermite_disc.xp_points()
    for k in (0, 2, 5):
        phi = np.array([eval_scaled_hermite((k,), 1.0, p) for p in xp])[:, None]
        out = apply_via_fourier_inversion(bump, GridFunction(hermite_disc, phi), R)
        expected = float(bump(None, np.sqrt(2 * k + 1))) * phi
        assert np.max(np.abs(out.values - expected)) <= 1e-6


def test_fourier_route_agrees_with_spectral_route(small_disc):
    R = 4.0
    fs = sparse_test_elements(small_disc, 3, seed=5, eta_max=(1.5 * R) ** 2)
    for m in compact_symbols(R):
        for f in fs:
            a = apply_grushin_pseudo(m, f)
            b = apply_via_fourier_inversion(m, f, R)
            assert small_disc.norm(a.values - b.values) <= 1e-4 * f.norm()


def test_fourier_route_rejects_wide_support(small_disc, rng):
    with pytest.raises(ValueError):
        apply_via_fourier_inversion(power_decay(1.0), random_band(small_disc, rng), 4.0)
    with pytest.raises(ValueError):
        apply_via_fourier_inversion(compact_symbols(4.0)[0], random_band(small_disc, rng), 4.0,
                                    FourierQuadrature(omega=100.0, n_xi=21))


# -- kernels and heat ---------------------------------------------------------


@pytest.fixture(scope="module")
def kernel_setup(small_disc):
    F = SymbolFn("tau_kappa", lambda x, tau, kappa: np.exp(-0.3 * tau.sum(axis=-1)) * np.cos(kappa[..., 0]),
                 1, 1)
    return F, small_disc


def test_kernel_row_reproduces_apply(kernel_setup, rng):
    F, disc = kernel_setup
    f = random_band(disc, rng)
    out = apply_joint_pseudo(F, f).values
    for idx in [(disc.Np // 2, 3), (disc.Np // 3, 11)]:
        row = compute_kernel(F, disc, x_index=idx)
        assert abs(row.apply(f) - out[idx]) <= 1e-6 * np.max(np.abs(out))


def test_kernel_is_hermitian(kernel_setup):
    F, disc = kernel_setup
    a, b = (disc.Np // 2, 3), (disc.Np // 2 + 7, 9)
    kab = compute_kernel(F, disc, x_index=a).values[b]
    kba = compute_kernel(F, disc, x_index=b).values[a]
    assert abs(kab - np.conj(kba)) <= 1e-10 * max(abs(kab), 1e-300)


def test_kernel_translation_in_second_variable(kernel_setup):
    F, disc = kernel_setup
    p = disc.Np // 2
    r0 = compute_kernel(F, disc, x_index=(p, 0)).values
    r5 = compute_kernel(F, disc, x_index=(p, 5)).values
    assert np.max(np.abs(np.roll(r0, 5, axis=1) - r5)) <= 1e-12 * np.max(np.abs(r0))


def test_kernel_at_point_matches_grid_index(kernel_setup):
    F, disc = kernel_setup
    idx = (disc.Np // 2 + 1, 4)
    a = compute_kernel(F, disc, x_index=idx).values
    b = compute_kernel(F, disc, point=disc.points()[idx]).values
    assert np.max(np.abs(a - b)) <= 1e-9 * np.max(np.abs(a))


def test_heat_semigroup(mid_disc, rng):
    f = random_band(mid_disc, rng)
    two = heat_apply(0.5, heat_apply(1.5, f))
    one = heat_apply(2.0, f)
    assert mid_disc.norm(two.values - one.values) <= 1e-8 * f.norm()
    with pytest.raises(ValueError):
        heat_apply(0.0, f)


def test_heat_kernel_positive_near_diagonal(mid_disc):
    p = mid_disc.Np // 2
    row = heat_kernel(1.0, mid_disc, x_index=(p, 0)).values
    pts = mid_disc.points()
    near = np.abs(pts[..., 0] - pts[p, 0, 0]) + np.abs(pts[..., 1] - pts[p, 0, 1]) <= 1.0
    assert np.all(row[near].real > 0)
    assert np.max(np.abs(row.imag)) <= 1e-10 * np.max(np.abs(row))


# -- Sobolev embedding --------------------------------------------------------


def test_sobolev_ratio_scale_invariant(small_disc, rng):
    f = random_band(small_disc, rng)
    r1 = bessel_sobolev_check(2.5, f).ratio
    r2 = bessel_sobolev_check(2.5, GridFunction(small_disc, 7.3 * f.values)).ratio
    assert abs(r1 - r2) <= 1e-12 * r1


def test_sobolev_ratio_on_single_mode(small_disc):
    rep = bessel_sobolev_check(2.5, plane_mode(small_disc, (1,), 3))
    assert 0 < rep.ratio < math.inf


def test_sobolev_threshold_sweep():
    Q = 3
    above, below = [], []
    for K, Lam in [(4, 2), (8, 4), (16, 8), (32, 16)]:
        disc = Discretization(1, 1, K, Lam, 4 * Lam, 5 * math.pi)
        above.append(sobolev_extremal_ratio(disc, Q / 2 + 1))
        below.append(sobolev_extremal_ratio(disc, Q / 4))
    # s > Q/2: increments shrink as the band doubles; s < Q/2: geometric growth
    inc = np.diff(above)
    assert np.all(inc[1:] < inc[:-1])
    growth = np.array(below[1:]) / np.array(below[:-1])
    assert np.all(growth > 1.3)
    assert np.all(np.diff(below) > inc)
