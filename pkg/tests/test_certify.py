import math

import numpy as np
import pytest

from gamecert.certify import (
    CertStatus,
    certify_concave,
    certify_monotone,
    min_admissible_level,
    run_hierarchy,
)
from gamecert.games import PolynomialGame, SemialgebraicSet, box_set, regularize
from gamecert.oracles import jacobi_eigenvalues
from gamecert.polynomials import Polynomial


def quadratic_game_from_matrix(M, box=(-1.0, 1.0)):
    """One variable per player with payoffs u_i = (1/2) M_ii x_i^2 +
    sum_{j != i} M_ij x_i x_j, so the symmetrized Jacobian is exactly M."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    payoffs = []
    for i in range(n):
        terms = {}
        e = [0] * n
        e[i] = 2
        terms[tuple(e)] = 0.5 * M[i, i]
        for j in range(n):
            if j == i:
                continue
            e = [0] * n
            e[i] += 1
            e[j] += 1
            terms[tuple(e)] = terms.get(tuple(e), 0.0) + M[i, j]
        payoffs.append(Polynomial(n, terms))
    return PolynomialGame((1,) * n, tuple(payoffs), box_set([box] * n))


def test_driver_monotone(driver_game):
    result = certify_monotone(driver_game, 2)
    assert result.status == CertStatus.STRICTLY_CERTIFIED
    assert result.lam == pytest.approx(-6.0, abs=1e-4)
    assert result.certificate.identity_residual <= 1e-6


def test_fig1_monotone(fig1_game):
    result = certify_monotone(fig1_game, 2)
    assert result.status == CertStatus.INCONCLUSIVE
    assert result.lam == pytest.approx(10.0, abs=1e-3)


def test_driver_concave_equals_monotone(driver_game):
    # single player: the own-block Hessian is the symmetrized Jacobian
    result = certify_concave(driver_game, 2)
    assert result.lam == pytest.approx(-6.0, abs=1e-4)
    assert result.status == CertStatus.STRICTLY_CERTIFIED
    assert result.per_player == [(0, pytest.approx(-6.0, abs=1e-4))]


def test_zero_game_concave_certified():
    zero = PolynomialGame((1, 1), (Polynomial.zero(2),) * 2, box_set([(0, 1)] * 2))
    result = certify_concave(zero, 2)
    assert result.status == CertStatus.CERTIFIED
    assert abs(result.lam) <= 1e-6


def test_fig1_concave_per_player(fig1_game):
    result = certify_concave(fig1_game, 2)
    assert result.status == CertStatus.INCONCLUSIVE
    assert result.lam == pytest.approx(10.0, abs=1e-3)
    players = dict(result.per_player)
    assert players[0] == pytest.approx(10.0, abs=1e-3)
    assert abs(players[1]) <= 1e-6


def test_hierarchy_flat_for_constant_jacobian(driver_game, fig1_game):
    for game, value in ((driver_game, -6.0), (fig1_game, 10.0)):
        results = run_hierarchy(game, range(2, 5), kind="monotone")
        lams = [r.lam for r in results]
        assert all(l == pytest.approx(value, abs=1e-3) for l in lams)
        for a, b in zip(lams, lams[1:]):
            assert b <= a + 1e-6


def test_constant_jacobian_exactness():
    rng = np.random.default_rng(19)
    for _ in range(5):
        n = int(rng.integers(2, 4))
        A = rng.standard_normal((n, n))
        M = -(A @ A.T) - 0.1 * np.eye(n)
        game = quadratic_game_from_matrix(M)
        level = min_admissible_level(game)
        result = certify_monotone(game, level)
        oracle = float(jacobi_eigenvalues(M)[-1])
        assert result.lam == pytest.approx(oracle, abs=1e-6)
        assert result.status == CertStatus.STRICTLY_CERTIFIED


def test_regularize_shift_and_strictification(fig1_game):
    base = certify_monotone(fig1_game, 2)
    shifted = certify_monotone(regularize(fig1_game, 0.1), 2)
    assert shifted.lam == pytest.approx(base.lam - 0.1, abs=1e-6)

    zero = PolynomialGame((1, 1), (Polynomial.zero(2),) * 2, box_set([(0, 1)] * 2))
    certified = certify_monotone(zero, 2)
    assert certified.status == CertStatus.CERTIFIED
    eps = 1e-3  # > 2 * strict_tol
    strict = certify_monotone(regularize(zero, eps), 2)
    assert strict.status == CertStatus.STRICTLY_CERTIFIED
    assert strict.lam == pytest.approx(certified.lam - eps, abs=1e-6)


def test_level_below_target_degree_rejected(fig1_game):
    with pytest.raises(ValueError):
        certify_monotone(fig1_game, 1)


def test_run_hierarchy_records_level_errors(fig1_game):
    results = run_hierarchy(fig1_game, [1, 2], kind="monotone")
    assert results[0].status == CertStatus.INCONCLUSIVE
    assert "failed" in results[0].diagnostic
    assert results[1].status == CertStatus.INCONCLUSIVE
    assert results[1].lam == pytest.approx(10.0, abs=1e-3)


def test_run_hierarchy_stop_on_strict(driver_game):
    results = run_hierarchy(driver_game, range(2, 7), stop_on_strict=True)
    assert len(results) == 1
    assert results[0].status == CertStatus.STRICTLY_CERTIFIED


def test_upper_bound_property_sampling(fig1_game, driver_game):
    from gamecert.oracles import sample_max_eigenvalue

    for game, level in ((fig1_game, 2), (driver_game, 2)):
        result = certify_monotone(game, level)
        report = sample_max_eigenvalue(game, n_samples=2000)
        assert result.lam + 1e-6 >= report.max_value


def test_min_admissible_level(driver_game, fig1_game, deg4_game):
    assert min_admissible_level(driver_game) == 2
    assert min_admissible_level(fig1_game) == 2
    assert min_admissible_level(deg4_game) == 4
