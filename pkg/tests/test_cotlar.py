import numpy as np
import pytest

from grushin import cotlar as C
from grushin.symbols import SymbolFn, kappa_cutoff, make_littlewood_paley


@pytest.fixture(scope="module")
def setup(small_disc):
    C0 = C.quasi_constant(1, 20000, 0)
    part = C.line_partition(C0, 9, period=small_disc.L2)
    m = SymbolFn("x_tau_kappa",
                 lambda x, tau, kappa: np.cos(x[..., 0]) * np.exp(-0.1 * tau.sum(-1)) * np.sin(kappa[..., 0]) ** 2,
                 1, 1)
    lp = make_littlewood_paley()
    pieces = C.build_pieces(m, small_disc, part, lp, range(5), S=2)
    return small_disc, C0, part, m, lp, pieces


def test_piece_index_validation():
    with pytest.raises(ValueError):
        C.PieceIndex(-1, 0, 0)


def test_line_partition_has_requested_size(setup):
    _, _, part, *_ = setup
    assert len(part) == 9


def test_pieces_reconstruct_localised_operator(setup):
    disc, _, part, m, lp, pieces = setup
    J = 4
    keys = [k for k in pieces if k.J == J]
    A = C.sum_matrix(pieces, keys)
    rows = np.unique(np.concatenate([pieces[k].rows for k in keys]))
    modes = np.unique(np.concatenate([pieces[k].modes for k in keys]))
    # l = 0..4 covers |tau|_1 <= 2^3, which holds on part of the band only
    tau = disc.tau().reshape(-1, 1)[modes, 0]
    inner = modes[tau < 2.0 ** 3]
    full = C.piece_matrix(kappa_cutoff(m, 2, lp, chi=part.elements[J]), disc, rows, inner)
    sub = A[:, np.searchsorted(modes, inner)]
    assert np.max(np.abs(sub - full)) <= 1e-8 * np.max(np.abs(full))


def test_piece_support_inside_double_ball(setup):
    disc, _, part, _, _, pieces = setup
    pts = disc.points().reshape(-1, 2)
    for k, p in pieces.items():
        d = part._d(part.centers[k.J], pts[p.rows])
        assert np.all(d < 2.0)


def test_exact_vanishing_and_cotlar_stein(setup):
    _, C0, part, _, _, pieces = setup
    rep = C.analyse(pieces, part, C0)
    assert rep.n_m2_far > 0 and rep.n_m1_far > 0
    assert rep.m2_far_max <= 1e-12
    assert rep.m1_far_max <= 1e-12
    assert rep.vanishing_pass
    assert rep.total_norm <= rep.cotlar_stein_bound
    assert rep.cotlar_stein_pass


def test_matrices_are_symmetric_and_nonnegative(setup):
    *_, pieces = setup
    keys, M1, M2 = C.cotlar_matrices(pieces)
    assert keys == sorted(pieces)
    for M in (M1, M2):
        assert np.array_equal(M, M.T)
        assert np.all(M >= 0)


def test_exact_entries_against_power_iteration(setup):
    *_, pieces = setup
    ks = sorted(pieces)
    for row in C.power_check(pieces, [(ks[0], ks[1]), (ks[2], ks[7])]):
        assert abs(row["M1_power"] - row["M1_exact"]) <= 1e-6 * row["M1_exact"]
        # the band-restricted power iteration only sees part of the domain of T_a T_b*
        assert row["M2_power"] <= row["M2_exact"] * (1 + 1e-8)


def test_freeze_constants_are_finite(setup):
    disc, _, part, m, _, pieces = setup
    rows = C.freeze_constants(m, pieces, part, disc, Q=3, n_spec=16)
    assert len(rows) == len(part)
    assert all(0 <= r["C"] < np.inf for r in rows)
