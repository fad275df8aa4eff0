import numpy as np
import pytest

from gamecert.certify import extended_domain, monotone_target
from gamecert.games import SemialgebraicSet, add_ball_constraint
from gamecert.polynomials import Polynomial
from gamecert.sdp import SdpSolution, SdpStatus, solve
from gamecert.sos import (
    CertificateRejected,
    CompileError,
    compile_program,
    extract_certificate,
    gram_basis,
    membership_problem,
)


def driver_membership(level=2):
    """lam + 6 y^2 over [0,1] x sphere: the one-player quadratic example."""
    # extended space (x, y); target base = -y^T(-6)y = 6 y^2
    base = Polynomial(2, {(0, 2): 6.0})
    x = Polynomial.variable(2, 0)
    one = Polynomial.constant(2, 1.0)
    sphere = Polynomial(2, {(0, 0): 1.0, (0, 2): -1.0})
    domain = SemialgebraicSet(2, (x, one - x), (sphere,))
    return membership_problem(
        base, domain, level,
        param_polys=[("lam", Polynomial.constant(2, 1.0))],
        objective=[("lam", 1.0)],
    )


def test_gram_basis_examples():
    assert gram_basis(2, 0, 1) == [(0,), (1,)]
    assert gram_basis(2, 2, 1) == [(0,)]
    assert gram_basis(4, 0, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    with pytest.warns(UserWarning):
        assert gram_basis(1, 2, 1) == []


def test_gram_basis_monotone_in_level():
    sizes = [len(gram_basis(l, 1, 3)) for l in range(1, 9)]
    assert sizes == sorted(sizes)


def test_driver_membership_minimum():
    problem, comp = compile_program(driver_membership())
    sol = solve(problem)
    assert sol.status == SdpStatus.OPTIMAL
    lam = float(sol.free_values[comp.param_index("lam")])
    assert lam == pytest.approx(-6.0, abs=1e-6)
    cert = extract_certificate(comp, sol)
    assert cert.identity_residual <= 1e-8


def test_constant_one_is_member():
    domain = SemialgebraicSet(1, (Polynomial.variable(1, 0),), ())
    program = membership_problem(Polynomial.constant(1, 1.0), domain, 2)
    problem, comp = compile_program(program)
    sol = solve(problem)
    assert sol.status == SdpStatus.OPTIMAL
    cert = extract_certificate(comp, sol)
    assert cert.identity_residual <= 1e-8


def test_negative_constant_not_member():
    # -1 over the ball set has no decomposition: nothing in the module is
    # negative at the center
    ball = add_ball_constraint(SemialgebraicSet(1, (), ()), 1.0)
    program = membership_problem(Polynomial.constant(1, -1.0), ball, 2)
    problem, _ = compile_program(program)
    sol = solve(problem)
    assert sol.status == SdpStatus.PRIMAL_INFEASIBLE


def test_certificate_from_hand_built_solution():
    # lam = -6 with sigma_0 = 0, multiplier p0 = -6 solves the driver
    # identity exactly: lam + 6y^2 = (-6)(1 - y^2)
    problem, comp = compile_program(driver_membership())
    free = np.zeros(problem.n_free)
    p0 = next(m for m in comp.multipliers if m.equality == 0)
    const_pos = p0.basis.index((0, 0))
    free[p0.offset + const_pos] = -6.0
    free[comp.param_index("lam")] = -6.0
    fake = SdpSolution(
        status=SdpStatus.OPTIMAL,
        primal_blocks=[np.zeros((d, d)) for d in problem.block_dims],
        free_values=free,
    )
    cert = extract_certificate(comp, fake)
    assert cert.identity_residual == 0.0
    assert cert.params["lam"] == -6.0


def test_corrupted_gram_rejected():
    problem, comp = compile_program(driver_membership())
    sol = solve(problem)
    sol.primal_blocks[0][0, 0] += 1e-2
    with pytest.raises(CertificateRejected):
        extract_certificate(comp, sol)


def test_soundness_random_points(fig1_game):
    from gamecert.certify import certify_monotone
    from gamecert.sos import reconstruct_expansion

    result = certify_monotone(fig1_game, 2)
    base = monotone_target(fig1_game)
    target = Polynomial.constant(base.n_vars, result.lam) + base
    mem = result.certificate.memberships[0]
    expansion = reconstruct_expansion(_comp_for(fig1_game), mem, 0)
    # the symbolic residual is below tolerance; check again by evaluation
    rng = np.random.default_rng(41)
    scale = 1 + target.max_abs_coeff()
    for _ in range(100):
        pt = rng.uniform(-1, 1, 6)
        assert abs(target.evaluate(pt) - expansion.evaluate(pt)) <= 1e-5 * scale


def _comp_for(game):
    base = monotone_target(game)
    dom = extended_domain(game.domain, game.n_vars)
    program = membership_problem(
        base, dom, 2,
        param_polys=[("lam", Polynomial.constant(dom.n_vars, 1.0))],
        objective=[("lam", 1.0)],
    )
    _, comp = compile_program(program)
    return comp


def test_nonnegativity_witness(fig1_game):
    from gamecert.certify import certify_monotone
    from gamecert.games import symmetrized_jacobian

    result = certify_monotone(fig1_game, 2)
    js = symmetrized_jacobian(fig1_game)
    rng = np.random.default_rng(7)
    for _ in range(1000):
        x = rng.uniform(0, 1, 3)
        y = rng.standard_normal(3)
        y /= np.linalg.norm(y)
        value = result.lam - y @ js.evaluate(x) @ y
        assert value >= -1e-6


def test_compile_rejects_overdegree_target():
    domain = SemialgebraicSet(1, (Polynomial.variable(1, 0),), ())
    with pytest.raises(ValueError):
        membership_problem(Polynomial(1, {(4,): 1.0}), domain, 2)


def test_compile_unmatchable_monomial():
    # degree-3 target over a constraint-free domain at level 3: the cubic
    # monomial cannot be reached by squares alone
    domain = SemialgebraicSet(1, (), ())
    program = membership_problem(Polynomial(1, {(3,): 1.0}), domain, 3)
    with pytest.raises(CompileError):
        compile_program(program)
