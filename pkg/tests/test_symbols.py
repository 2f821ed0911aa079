import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from grushin.symbols import (SymbolClassParams, SymbolFn, apply_vector_fields, bump, check_cancellation, constant,
                             dyadic_piece, expand_vector_fields, finite_difference, kappa_cutoff,
                             make_littlewood_paley, make_probes, make_symbol, power_decay, seminorm,
                             sin_kappa_power, sinusoidal_x, smooth_step, symbol_from_expr, vector_field_count)

LP = make_littlewood_paley()


def test_builtin_registry():
    assert make_symbol("power-decay", a=0.5).name == "power_decay(0.5)"
    with pytest.raises(KeyError):
        make_symbol("nope")


def test_constant_seminorm_is_its_value():
    m = constant(2.0)
    assert float(seminorm(m, SymbolClassParams(0, 1, 0, 3), make_probes())) == pytest.approx(2.0)


def test_power_decay_seminorm_matches_closed_form():
    # |d^l (1+eta)^-1| (1+eta)^(1+l-1) = l!, largest at l = N
    m = power_decay(1.0)
    for N in (1, 2, 3):
        val = float(seminorm(m, SymbolClassParams(-2, 1, 0, N), make_probes()))
        assert val == pytest.approx(math.factorial(N))


def test_growing_symbol_is_outside_class():
    m = power_decay(-0.25)
    params = SymbolClassParams(0, 1, 0, 1)
    small = float(seminorm(m, params, make_probes(spec_max=2.0 ** 8)))
    large = float(seminorm(m, params, make_probes(spec_max=2.0 ** 16)))
    # (1 + eta)^(1/4) grows by 2^(8/4) between the two probe caps
    assert large / small == pytest.approx(4.0, rel=0.01)


def test_analytic_derivative_matches_finite_difference():
    x1, eta = sp.symbols("x1 eta")
    m = symbol_from_expr(sp.exp(-eta / 7) * sp.cos(3 * eta), "x_eta", spatial_expr=sp.sin(x1) + 2)
    x = np.array([[0.3, 1.0], [-1.1, 2.0]])
    e = np.array([0.5, 4.0])
    for order in [(1, 0, 0), (0, 0, 1), (1, 0, 2), (2, 0, 1)]:
        a = m.partial(order, x, e)
        b = finite_difference(m, order, x, e)
        assert np.allclose(a, b, rtol=1e-5, atol=1e-6)


def test_separable_terms_reproduce_function():
    m = sinusoidal_x(0.2)
    x = np.array([[0.4, -1.0]])
    e = np.array([3.0])
    (a, b), = m.terms
    assert np.allclose(a(x) * b(e), m(x, e))


def test_vector_field_expansion_grushin_field():
    # X_{1,1} = x'_1 d/dx''_1 ; X_1 X_{1,1} = x'_1 d_x'_1 d_x''_1 + d_x''_1
    assert vector_field_count(1, 1) == 2
    op = expand_vector_fields((1, 1), 1, 1)
    assert op[(1, 1)] == {(1,): 1.0}
    assert op[(0, 1)] == {(0,): 1.0}
    x1, y1, eta = sp.symbols("x1 y1 eta")
    m = symbol_from_expr(sp.Integer(1) / (1 + eta), "x_eta", spatial_expr=sp.sin(x1) * sp.cos(y1))
    x = np.array([0.7, 0.2])
    got = apply_vector_fields(m, (1, 1), (0,), x, np.array(1.0))
    want = (-(0.7 * np.cos(0.7) + np.sin(0.7)) * np.sin(0.2)) / 2
    assert float(got) == pytest.approx(want, rel=1e-10)


@given(st.floats(1e-6, 1e6))
def test_dyadic_psi_sum_to_one(s):
    total = sum(LP.psi1(s * 2.0 ** j) for j in range(-40, 40))
    assert float(total) == pytest.approx(1.0, abs=1e-12)


@given(st.integers(1, 8), st.floats(0, 1e3))
def test_partial_sums_telescope(L, eta):
    assert float(LP.partial_sum(L, eta)) == pytest.approx(float(smooth_step(2.0 ** (1 - L) * eta)), abs=1e-12)


def test_partition_is_exactly_one_below_top():
    eta = np.linspace(0, 2.0 ** 5, 200)
    assert np.allclose(LP.partial_sum(6, eta), 1.0, atol=1e-14)


@given(st.floats(1e-5, 10.0), st.integers(0, 6))
def test_zeta_telescopes(s, S):
    direct = sum(LP.psi1(2.0 ** j * s) for j in range(-60, S + 1))
    assert float(LP.zeta(s, S)) == pytest.approx(float(direct), abs=1e-12)


def test_dyadic_pieces_reconstruct_symbol():
    m = sin_kappa_power(2, 0.5)
    tau = np.geomspace(0.01, 30, 50)[:, None]
    kappa = np.full((50, 1), 0.7)
    total = sum(dyadic_piece(m, l, LP)(None, tau, kappa) for l in range(8))
    assert np.allclose(total, m(None, tau, kappa), atol=1e-14)
    with pytest.raises(ValueError):
        dyadic_piece(m, 0, LP, variant="eta")


def test_kappa_cutoff_support():
    m = constant(1.0, joint=True)
    cut = kappa_cutoff(m, 2, LP)
    tau = np.ones((3, 1))
    kappa = np.array([[1e-4], [0.05], [10.0]])
    vals = cut(None, tau, kappa)
    # zeta^S keeps |kappa| >= 2^-S and removes a neighbourhood of 0
    assert vals[0] == 0.0
    assert vals[2] == pytest.approx(1.0)


def test_cancellation_detected():
    assert check_cancellation(sin_kappa_power(4), 3).passed
    assert not check_cancellation(constant(1.0, joint=True), 0).passed


def test_bump_support():
    t = np.array([-1.0, -0.5, 0.0, 0.99, 1.0, 2.0])
    b = bump(t)
    assert b[0] == b[4] == b[5] == 0.0
    assert b[2] == pytest.approx(np.exp(-1.0))


def test_bad_class_params():
    with pytest.raises(ValueError):
        SymbolClassParams(0, 1.5, 0, 2)
    with pytest.raises(ValueError):
        SymbolFn("nope", lambda x, e: e)
