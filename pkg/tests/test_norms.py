import numpy as np
import pytest

from grushin.discretization import GridFunction
from grushin.norms import OpHandle, cv_experiment, operator_norm, refinement_ladder
from grushin.operators import CompiledOperator
from grushin.symbols import SymbolClassParams, constant, make_probes, power_decay, sinusoidal_x


def band(disc, rng):
    return GridFunction(disc, disc.backward_array(disc.random_coeffs(rng)))


@pytest.mark.parametrize("method", ["power", "lanczos"])
def test_identity_has_norm_one(small_disc, method):
    rep = operator_norm(OpHandle.identity(small_disc), method=method)
    assert abs(rep.estimate - 1) <= 1e-8


@pytest.mark.parametrize("method", ["power", "lanczos"])
def test_multiplier_norm_is_max_symbol(small_disc, method):
    op = CompiledOperator(power_decay(0.5), small_disc, "G")
    expected = float(np.max(np.abs(op.multiplier())))
    rep = operator_norm(OpHandle.from_operator(op), method=method)
    assert abs(rep.estimate - expected) <= 1e-8


def test_rank_one_norm(small_disc, rng):
    g, h = band(small_disc, rng), band(small_disc, rng)
    rep = operator_norm(OpHandle.rank_one(small_disc, g, h))
    assert abs(rep.estimate - g.norm() * h.norm()) <= 1e-6 * g.norm() * h.norm()


def test_projection_does_not_increase_norm(small_disc):
    T = OpHandle.from_operator(CompiledOperator(sinusoidal_x(0.2), small_disc, "G"))
    P = OpHandle.from_operator(CompiledOperator(constant(1.0), small_disc, "G", degree_cutoff=3))
    full = operator_norm(T, method="lanczos").estimate
    cut = operator_norm(P.compose(T), method="lanczos").estimate
    assert cut <= full * (1 + 1e-8)


def test_power_and_lanczos_agree(small_disc):
    T = OpHandle.from_operator(CompiledOperator(sinusoidal_x(0.2), small_disc, "G"))
    a = operator_norm(T, tol=1e-12, max_iter=2000).estimate
    b = operator_norm(T, tol=1e-12, method="lanczos").estimate
    assert a <= b * (1 + 1e-8)
    assert abs(a - b) <= 1e-4 * b


def test_norm_is_seed_deterministic(small_disc):
    T = OpHandle.from_operator(CompiledOperator(sinusoidal_x(0.2), small_disc, "G"))
    for method in ("power", "lanczos"):
        assert operator_norm(T, seed=3, method=method).estimate == operator_norm(T, seed=3, method=method).estimate


def test_unknown_method(small_disc):
    with pytest.raises(ValueError):
        operator_norm(OpHandle.identity(small_disc), method="qr")


def test_adjoint_and_total_handles(small_disc, rng):
    T = OpHandle.from_operator(CompiledOperator(sinusoidal_x(0.2), small_disc, "G"))
    f, g = band(small_disc, rng), band(small_disc, rng)
    lhs = small_disc.inner(T.apply(f).values, g.values)
    rhs = small_disc.inner(f.values, T.adjoint().apply(g).values)
    assert abs(lhs - rhs) <= 1e-10 * abs(lhs)
    two = OpHandle.total([T, T])
    assert np.allclose(two.apply(f).values, 2 * T.apply(f).values, rtol=0, atol=1e-12)


def test_identity_symbol_ratio_is_one():
    ladder = refinement_ladder(start=(4, 2), steps=1)
    rep = cv_experiment(constant(1.0), SymbolClassParams(0, 1, 0, 2), ladder, make_probes(spec_max=64.0))
    assert rep.seminorm == pytest.approx(1.0)
    assert all(abs(r - 1) <= 1e-8 for r in rep.ratios)
    assert rep.verdict == "PASS"


def test_positive_order_control_grows():
    ladder = refinement_ladder(start=(4, 2), steps=2)
    m = power_decay(-0.25)
    probes = make_probes(spec_max=2.0 ** 8)
    rep = cv_experiment(m, SymbolClassParams(0, 1, 0, 2), ladder, probes)
    assert all(b > a for a, b in zip(rep.ratios, rep.ratios[1:]))
    assert rep.verdict == "FAIL"
