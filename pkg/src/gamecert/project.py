"""Closest certified game under the max-coefficient game norm, and the
gauge deviation measure.

The projection searches over candidate payoff coefficient vectors (one per
player, over the reference game's monomial support or the full bounded-
degree basis) for the game of minimal distance

    max_i || coeffs(u_i) - coeffs(u*_i) ||_inf

whose monotonicity (or per-player concavity) quadratic form admits a
level-l decomposition.  Because the symmetrized Jacobian and the Hessians
are linear in the payoff coefficients, the decomposition constraint is
affine in them, and the whole search is a single SDP: the distance enters
through epigraph rows +-(c - c*) <= t.

The gauge of a game is the smallest eps >= 0 such that adding eps times
the quadratic game with payoffs -||x_i||^2 makes the game certified at
level l; it is again a single SDP since that addition shifts the
symmetrized Jacobian by -2*eps*I.
"""

from __future__ import annotations

from dataclasses import dataclass

from .certify import CertifyOptions, extended_domain, usable_solution
from .games import PolynomialGame, player_hessian, quadratic_form, symmetrized_jacobian
from .polynomials import Monomial, Polynomial, grevlex_key, monomials_upto
from .sdp import SdpStatus, solve
from .sos import (
    Certificate,
    SosMembership,
    SosProgram,
    compile_program,
    extract_certificate,
)


class ProjectionInfeasible(Exception):
    """No candidate game satisfies the membership and side constraints at
    the requested level."""


class ProjectionFailed(Exception):
    """The SDP solver stopped without an optimal solution."""


@dataclass(frozen=True)
class ProjectionSpec:
    game: PolynomialGame
    level: int
    kind: str = "monotone"  # or "concave"
    zero_sum: bool = False
    preserve_support: bool = False
    frozen: tuple[tuple[int, Monomial], ...] = ()

    def __post_init__(self):
        if self.kind not in ("monotone", "concave"):
            raise ValueError(f"unknown kind {self.kind!r}")
        if self.zero_sum and self.game.n_players != 2:
            raise ValueError("zero_sum projection requires exactly 2 players")
        object.__setattr__(
            self,
            "frozen",
            tuple((int(i), tuple(m)) for i, m in self.frozen),
        )


@dataclass
class ProjectionResult:
    game: PolynomialGame
    distance: float
    level: int
    kind: str
    certificate: Certificate
    epigraph_value: float
    payoff_deltas: list[float]
    solver_iterations: int


def _param_name(player: int, mono: Monomial) -> str:
    return f"u{player}[" + ",".join(str(e) for e in mono) + "]"


def _unit_game(game: PolynomialGame, player: int, mono: Monomial) -> PolynomialGame:
    payoffs = [Polynomial.zero(game.n_vars) for _ in range(game.n_players)]
    payoffs[player] = Polynomial.monomial(game.n_vars, mono, 1.0)
    return PolynomialGame(game.block_sizes, tuple(payoffs), game.domain)


def _candidate_supports(spec: ProjectionSpec) -> list[list[Monomial]]:
    game = spec.game
    if spec.preserve_support:
        supports = [
            sorted(u.terms.keys(), key=grevlex_key) for u in game.payoffs
        ]
    else:
        basis = monomials_upto(game.n_vars, game.degree)
        supports = [list(basis) for _ in game.payoffs]
    if spec.zero_sum:
        # coefficients outside a player's support are pinned at zero, so the
        # counterpart coefficient must be present to be forced to zero too
        union = sorted(set(supports[0]) | set(supports[1]), key=grevlex_key)
        supports = [list(union), list(union)]
        if spec.preserve_support:
            # keep only monomials present in either reference payoff
            pass
    return supports


def project(spec: ProjectionSpec, options: CertifyOptions | None = None) -> ProjectionResult:
    """Solve the single-SDP projection and return the modified game, its
    distance to the reference, and the validated certificate."""
    opts = options or CertifyOptions()
    game = spec.game
    m = game.n_vars
    frozen = set(spec.frozen)
    supports = _candidate_supports(spec)

    params: list[str] = ["dist"]
    param_meta: list[tuple[int, Monomial]] = []
    for i, support in enumerate(supports):
        for mono in support:
            if (i, mono) in frozen:
                continue
            params.append(_param_name(i, mono))
            param_meta.append((i, mono))

    # membership targets, affine in the candidate coefficients
    def target_polys(kind_player: int | None):
        """kind_player None -> monotone target; else that player's Hessian
        target.  Returns (base, [(param, poly), ...])."""
        sphere_dim = m if kind_player is None else game.block_sizes[kind_player]

        def form(g: PolynomialGame) -> Polynomial:
            if kind_player is None:
                return -quadratic_form(symmetrized_jacobian(g), m)
            return -quadratic_form(player_hessian(g, kind_player), m)

        zero_payoffs = tuple(Polynomial.zero(m) for _ in range(game.n_players))
        base_game = PolynomialGame(game.block_sizes, zero_payoffs, game.domain)
        base = form(base_game)
        for i, mono in frozen:
            coeff = game.payoffs[i].coeff(mono)
            if coeff:
                base = base + form(_unit_game(game, i, mono)).scale(coeff)
        pairs = []
        for i, mono in param_meta:
            contrib = form(_unit_game(game, i, mono))
            if not contrib.is_zero():
                pairs.append((_param_name(i, mono), contrib))
        return base, pairs, sphere_dim

    memberships = []
    if spec.kind == "monotone":
        base, pairs, sdim = target_polys(None)
        dom = extended_domain(game.domain, sdim)
        memberships.append(
            SosMembership(base.lift(dom.n_vars) if base.n_vars != dom.n_vars else base,
                          dom, spec.level,
                          tuple((n, p) for n, p in pairs), label="monotone")
        )
    else:
        for p in range(game.n_players):
            if game.block_sizes[p] == 0:
                continue
            base, pairs, sdim = target_polys(p)
            dom = extended_domain(game.domain, sdim)
            memberships.append(
                SosMembership(base, dom, spec.level,
                              tuple((n, q) for n, q in pairs), label=f"player {p}")
            )

    inequalities = []
    for i, mono in param_meta:
        name = _param_name(i, mono)
        ref = game.payoffs[i].coeff(mono)
        inequalities.append(((((name, 1.0), ("dist", -1.0))), ref))
        inequalities.append(((((name, -1.0), ("dist", -1.0))), -ref))

    equalities = []
    if spec.zero_sum:
        for mono in supports[0]:
            combo = []
            rhs = 0.0
            for i in (0, 1):
                if (i, mono) in frozen:
                    rhs -= game.payoffs[i].coeff(mono)
                else:
                    combo.append((_param_name(i, mono), 1.0))
            if combo:
                equalities.append((tuple(combo), rhs))

    program = SosProgram(
        memberships=tuple(memberships),
        params=tuple(params),
        objective=(("dist", 1.0),),
        param_equalities=tuple(equalities),
        param_inequalities=tuple(inequalities),
    )
    problem, comp = compile_program(program)
    sol = solve(problem, opts.solver)
    if sol.status == SdpStatus.PRIMAL_INFEASIBLE:
        raise ProjectionInfeasible(
            f"no {spec.kind} candidate at level {spec.level} meets the side constraints"
        )
    if not usable_solution(sol, opts):
        raise ProjectionFailed(f"solver stopped with status {sol.status.value}: {sol.message}")

    cert = extract_certificate(
        comp, sol, residual_tol=opts.residual_tol, psd_slack=opts.psd_slack
    )

    payoffs = []
    for i in range(game.n_players):
        terms = {}
        for mono in supports[i]:
            if (i, mono) in frozen:
                c = game.payoffs[i].coeff(mono)
            else:
                c = cert.params[_param_name(i, mono)]
            terms[mono] = c
        payoffs.append(Polynomial(m, terms))
    projected = PolynomialGame(game.block_sizes, tuple(payoffs), game.domain)
    distance, deltas = game_distance(projected, game)
    return ProjectionResult(
        game=projected,
        distance=distance,
        level=spec.level,
        kind=spec.kind,
        certificate=cert,
        epigraph_value=float(cert.params["dist"]),
        payoff_deltas=deltas,
        solver_iterations=sol.iterations,
    )


def game_distance(a: PolynomialGame, b: PolynomialGame) -> tuple[float, list[float]]:
    """Game norm of the payoff difference: max over players of the
    max-abs coefficient gap on the full bounded-degree basis."""
    if a.block_sizes != b.block_sizes:
        raise ValueError("games must share player blocks")
    deltas = []
    for u, v in zip(a.payoffs, b.payoffs):
        deltas.append((u - v).max_abs_coeff())
    return (max(deltas) if deltas else 0.0), deltas


class GaugeInfeasible(Exception):
    pass


def gauge(game: PolynomialGame, level: int, options: CertifyOptions | None = None) -> float:
    """Smallest eps >= 0 making the game certified at ``level`` after adding
    eps times the quadratic game (payoffs -||x_i||^2)."""
    opts = options or CertifyOptions()
    m = game.n_vars
    base = -quadratic_form(symmetrized_jacobian(game), m)
    dom = extended_domain(game.domain, m)
    # the quadratic game's symmetrized Jacobian is -2I, so its contribution
    # to -y^T Js y is +2 eps ||y||^2
    terms = {}
    for k in range(m):
        e = [0] * dom.n_vars
        e[m + k] = 2
        terms[tuple(e)] = 2.0
    eps_poly = Polynomial(dom.n_vars, terms)
    program = SosProgram(
        memberships=(
            SosMembership(base, dom, level, (("eps", eps_poly),), label="gauge"),
        ),
        params=("eps",),
        objective=(("eps", 1.0),),
        param_inequalities=(((("eps", -1.0),), 0.0),),
    )
    problem, comp = compile_program(program)
    sol = solve(problem, opts.solver)
    if sol.status == SdpStatus.PRIMAL_INFEASIBLE:
        raise GaugeInfeasible(
            f"no shift makes the game certified at level {level}; "
            "an Archimedean description (ball constraint) may be missing"
        )
    if not usable_solution(sol, opts):
        raise ProjectionFailed(f"solver stopped with status {sol.status.value}: {sol.message}")
    return float(sol.free_values[comp.param_index("eps")])
