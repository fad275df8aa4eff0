"""Compile quadratic-module membership queries into block SDPs.

A membership query asks for a Putinar-type decomposition

    target(x) = s_0(x) + sum_j g_j(x) s_j(x) + sum_j h_j(x) p_j(x)

with each s_j a sum of squares, each p_j free, and every summand of total
degree at most the level.  The target may be affine in named scalar
decision parameters (a bound, game coefficients, a shift), and a program
may carry several membership constraints sharing those parameters plus
extra linear constraints and a linear objective over them.

Compilation produces one PSD Gram block per SOS multiplier, free scalars
for the p_j coefficients and the parameters, and one linear equality per
monomial of degree <= level in the ambient space, matching coefficients
between the target and the decomposition.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .games import SemialgebraicSet
from .polynomials import Monomial, Polynomial, monomials_upto
from .sdp import SdpConstraint, SdpProblem, SdpSolution


def gram_basis(level: int, constraint_degree: int, n_vars: int) -> list[Monomial]:
    """Monomial basis for the Gram matrix of an SOS multiplier attached to a
    constraint of the given degree: all monomials of total degree at most
    floor((level - constraint_degree) / 2), grevlex ordered."""
    if level < constraint_degree:
        warnings.warn(
            f"level {level} below constraint degree {constraint_degree}; empty Gram basis",
            stacklevel=2,
        )
        return []
    return monomials_upto(n_vars, (level - constraint_degree) // 2)


LinearCombo = tuple[tuple[str, float], ...]  # sum of coeff * parameter


@dataclass(frozen=True)
class SosMembership:
    """One decomposition requirement: base + sum_k theta_k * param_polys[k]
    must lie in the level-truncated quadratic module of ``domain``."""

    base: Polynomial
    domain: SemialgebraicSet
    level: int
    param_polys: tuple[tuple[str, Polynomial], ...] = ()
    label: str = ""

    def __post_init__(self):
        n = self.domain.n_vars
        if self.base.n_vars != n:
            raise ValueError("target and domain disagree on variable count")
        for name, poly in self.param_polys:
            if poly.n_vars != n:
                raise ValueError(f"parameter polynomial {name} has wrong variable count")
        deg = max([self.base.degree] + [p.degree for _, p in self.param_polys])
        if deg > self.level:
            raise ValueError(
                f"target degree {deg} exceeds level {self.level}"
            )


@dataclass(frozen=True)
class SosProgram:
    """Membership constraints plus a linear program over the shared
    decision parameters (minimization)."""

    memberships: tuple[SosMembership, ...]
    params: tuple[str, ...] = ()
    objective: LinearCombo = ()
    param_equalities: tuple[tuple[LinearCombo, float], ...] = ()
    param_inequalities: tuple[tuple[LinearCombo, float], ...] = ()  # combo <= rhs

    def __post_init__(self):
        known = set(self.params)
        used = set()
        for mem in self.memberships:
            used.update(name for name, _ in mem.param_polys)
        for combo, _ in self.param_equalities + self.param_inequalities:
            used.update(name for name, _ in combo)
        used.update(name for name, _ in self.objective)
        unknown = used - known
        if unknown:
            raise ValueError(f"undeclared parameters: {sorted(unknown)}")


def membership_problem(
    base: Polynomial,
    domain: SemialgebraicSet,
    level: int,
    param_polys: Sequence[tuple[str, Polynomial]] = (),
    objective: Sequence[tuple[str, float]] = (),
    param_inequalities: Sequence[tuple[Sequence[tuple[str, float]], float]] = (),
) -> SosProgram:
    """Single-membership program; the common case."""
    params = tuple(name for name, _ in param_polys)
    extra = [n for combo, _ in param_inequalities for n, _ in combo if n not in params]
    return SosProgram(
        memberships=(SosMembership(base, domain, level, tuple(param_polys)),),
        params=params + tuple(dict.fromkeys(extra)),
        objective=tuple(objective),
        param_inequalities=tuple(
            (tuple(combo), float(rhs)) for combo, rhs in param_inequalities
        ),
    )


@dataclass(frozen=True)
class GramBlockInfo:
    membership: int
    multiplier: str          # "sigma_0" or "sigma_<j>" for inequality j
    constraint: Polynomial | None  # g_j, or None for sigma_0
    basis: tuple[Monomial, ...]


@dataclass(frozen=True)
class MultiplierInfo:
    membership: int
    equality: int            # index into domain.equalities
    basis: tuple[Monomial, ...]
    offset: int              # first free-variable index of this coefficient run


@dataclass
class Compilation:
    """Layout bookkeeping tying SDP variables back to the program."""

    program: SosProgram
    gram_blocks: list[GramBlockInfo]
    multipliers: list[MultiplierInfo]
    param_offset: int        # free index of the first parameter
    row_monomials: list[tuple[int, Monomial]]
    row_scales: list[float]
    n_param_rows: int

    def param_index(self, name: str) -> int:
        return self.param_offset + self.program.params.index(name)


class CompileError(ValueError):
    pass


def compile_program(program: SosProgram) -> tuple[SdpProblem, Compilation]:
    """Build the block SDP whose feasible points are exactly the degree-
    bounded decompositions of every membership constraint."""
    gram_blocks: list[GramBlockInfo] = []
    multipliers: list[MultiplierInfo] = []
    block_dims: list[int] = []
    n_mult = 0
    for mi, mem in enumerate(program.memberships):
        n = mem.domain.n_vars
        basis0 = gram_basis(mem.level, 0, n)
        if basis0:
            gram_blocks.append(GramBlockInfo(mi, "sigma_0", None, tuple(basis0)))
            block_dims.append(len(basis0))
        for j, g in enumerate(mem.domain.inequalities):
            basis = gram_basis(mem.level, g.degree, n)
            if basis:
                gram_blocks.append(GramBlockInfo(mi, f"sigma_{j + 1}", g, tuple(basis)))
                block_dims.append(len(basis))
        for j, h in enumerate(mem.domain.equalities):
            if mem.level < h.degree:
                warnings.warn(
                    f"level {mem.level} below equality degree {h.degree}; multiplier dropped",
                    stacklevel=2,
                )
                continue
            basis = monomials_upto(n, mem.level - h.degree)
            multipliers.append(MultiplierInfo(mi, j, tuple(basis), n_mult))
            n_mult += len(basis)

    param_offset = n_mult
    n_free = n_mult + len(program.params)
    param_col = {name: param_offset + k for k, name in enumerate(program.params)}

    # accumulate rows: (membership, monomial) -> {("B", blk, i, j) | ("F", k): coeff}
    rows: dict[tuple[int, Monomial], dict] = {}
    for mi, mem in enumerate(program.memberships):
        for mono in monomials_upto(mem.domain.n_vars, mem.level):
            rows[(mi, mono)] = {}

    def add(mi, mono, key, value):
        row = rows.get((mi, mono))
        if row is None:
            raise CompileError(
                f"monomial {mono} of degree {sum(mono)} exceeds level in membership {mi}"
            )
        row[key] = row.get(key, 0.0) + value

    for blk, info in enumerate(gram_blocks):
        mem = program.memberships[info.membership]
        g_terms = (
            list(info.constraint.terms.items())
            if info.constraint is not None
            else [((0,) * mem.domain.n_vars, 1.0)]
        )
        basis = info.basis
        for a in range(len(basis)):
            for b in range(a, len(basis)):
                pair = tuple(x + y for x, y in zip(basis[a], basis[b]))
                for gt, gc in g_terms:
                    mono = tuple(x + y for x, y in zip(pair, gt))
                    add(info.membership, mono, ("B", blk, a, b), gc)

    for info in multipliers:
        mem = program.memberships[info.membership]
        h = mem.domain.equalities[info.equality]
        for c, mono_c in enumerate(info.basis):
            col = info.offset + c
            for ht, hc in h.terms.items():
                mono = tuple(x + y for x, y in zip(mono_c, ht))
                add(info.membership, mono, ("F", col), hc)

    rhs: dict[tuple[int, Monomial], float] = {}
    for mi, mem in enumerate(program.memberships):
        for mono, coeff in mem.base.terms.items():
            rhs[(mi, mono)] = coeff
        for name, poly in mem.param_polys:
            col = param_col[name]
            for mono, coeff in poly.terms.items():
                add(mi, mono, ("F", col), -coeff)

    constraints: list[SdpConstraint] = []
    row_monomials: list[tuple[int, Monomial]] = []
    row_scales: list[float] = []
    for mi, mem in enumerate(program.memberships):
        for mono in monomials_upto(mem.domain.n_vars, mem.level):
            entries = rows[(mi, mono)]
            target = rhs.get((mi, mono), 0.0)
            if not entries:
                if abs(target) > 1e-12:
                    raise CompileError(
                        f"target monomial {mono} in membership {mi} cannot be matched "
                        f"by any decomposition term at level {mem.level}"
                    )
                continue
            scale = max(abs(v) for v in entries.values())
            blocks: dict[int, list] = {}
            free: list = []
            for key, value in entries.items():
                if key[0] == "B":
                    _, blk, i, j = key
                    blocks.setdefault(blk, []).append((i, j, value / scale))
                else:
                    free.append((key[1], value / scale))
            constraints.append(
                SdpConstraint(tuple(blocks.items()), tuple(free), target / scale, "=")
            )
            row_monomials.append((mi, mono))
            row_scales.append(scale)

    n_param_rows = 0
    for combo, value, rel in [(c, v, "=") for c, v in program.param_equalities] + [
        (c, v, "<=") for c, v in program.param_inequalities
    ]:
        if not combo:
            raise CompileError("empty linear parameter constraint")
        scale = max(abs(w) for _, w in combo)
        free = tuple((param_col[name], w / scale) for name, w in combo)
        constraints.append(SdpConstraint((), free, value / scale, rel))
        n_param_rows += 1

    objective_free = tuple(
        (param_col[name], w) for name, w in program.objective
    )
    problem = SdpProblem(
        tuple(block_dims), n_free, (), objective_free, tuple(constraints)
    )
    comp = Compilation(
        program=program,
        gram_blocks=gram_blocks,
        multipliers=multipliers,
        param_offset=param_offset,
        row_monomials=row_monomials,
        row_scales=row_scales,
        n_param_rows=n_param_rows,
    )
    return problem, comp


# ---------------------------------------------------------------------------
# certificates


class CertificateRejected(Exception):
    def __init__(self, residual: float, detail: str = ""):
        super().__init__(
            f"decomposition identity residual {residual:.3e} exceeds tolerance"
            + (f" ({detail})" if detail else "")
        )
        self.residual = residual


@dataclass
class MembershipCertificate:
    label: str
    level: int
    gram_matrices: list[tuple[str, tuple[Monomial, ...], np.ndarray]]
    free_multipliers: list[tuple[int, Polynomial]]
    identity_residual: float

    def multiplier_polynomial(self, which: int) -> Polynomial:
        """Expand Gram block ``which`` of this membership into its SOS
        multiplier polynomial."""
        _, basis, G = self.gram_matrices[which]
        n = len(basis[0]) if basis else 0
        terms: dict = {}
        for a in range(len(basis)):
            for b in range(a, len(basis)):
                mono = tuple(x + y for x, y in zip(basis[a], basis[b]))
                factor = 1.0 if a == b else 2.0
                terms[mono] = terms.get(mono, 0.0) + factor * G[a, b]
        return Polynomial(n, terms)


@dataclass
class Certificate:
    """Validated decomposition data recovered from an SDP solution."""

    level: int
    optimum: float
    params: dict[str, float]
    memberships: list[MembershipCertificate]

    @property
    def identity_residual(self) -> float:
        return max(m.identity_residual for m in self.memberships)

    @property
    def gram_matrices(self):
        return self.memberships[0].gram_matrices

    @property
    def free_multipliers(self):
        return self.memberships[0].free_multipliers


def reconstruct_expansion(
    comp: Compilation, cert_mem: MembershipCertificate, membership_index: int
) -> Polynomial:
    """Symbolically rebuild s_0 + sum g_j s_j + sum h_j p_j."""
    mem = comp.program.memberships[membership_index]
    n = mem.domain.n_vars
    total = Polynomial.zero(n)
    gram_of_mem = [
        (k, info) for k, info in enumerate(comp.gram_blocks) if info.membership == membership_index
    ]
    for local, (_, info) in enumerate(gram_of_mem):
        sigma = cert_mem.multiplier_polynomial(local)
        total = total + (sigma if info.constraint is None else info.constraint * sigma)
    for eq_index, p in cert_mem.free_multipliers:
        total = total + mem.domain.equalities[eq_index] * p
    return total


def extract_certificate(
    comp: Compilation,
    solution: SdpSolution,
    residual_tol: float = 1e-6,
    psd_slack: float = 1e-7,
) -> Certificate:
    """Read Gram matrices and multipliers back from an optimal solution,
    rebuild the decomposition identity, and reject it if the worst
    coefficient mismatch exceeds ``residual_tol``."""
    program = comp.program
    params = {
        name: float(solution.free_values[comp.param_offset + k])
        for k, name in enumerate(program.params)
    }
    mem_certs: list[MembershipCertificate] = []
    for mi, mem in enumerate(program.memberships):
        grams = []
        for blk, info in enumerate(comp.gram_blocks):
            if info.membership != mi:
                continue
            G = np.asarray(solution.primal_blocks[blk])
            grams.append((info.multiplier, info.basis, G))
            min_eig = float(np.linalg.eigvalsh(0.5 * (G + G.T))[0])
            if min_eig < -psd_slack:
                raise CertificateRejected(
                    -min_eig, f"Gram block {info.multiplier} has eigenvalue {min_eig:.3e}"
                )
        mults = []
        for info in comp.multipliers:
            if info.membership != mi:
                continue
            coeffs = solution.free_values[info.offset : info.offset + len(info.basis)]
            terms = {mono: float(c) for mono, c in zip(info.basis, coeffs)}
            mults.append((info.equality, Polynomial(mem.domain.n_vars, terms)))
        cert_mem = MembershipCertificate(
            label=mem.label,
            level=mem.level,
            gram_matrices=grams,
            free_multipliers=mults,
            identity_residual=0.0,
        )
        target = mem.base
        for name, poly in mem.param_polys:
            target = target + poly.scale(params[name])
        expansion = reconstruct_expansion(comp, cert_mem, mi)
        residual = (target - expansion).max_abs_coeff()
        cert_mem.identity_residual = residual
        if residual > residual_tol:
            raise CertificateRejected(residual, mem.label or f"membership {mi}")
        mem_certs.append(cert_mem)
    optimum = sum(w * params[name] for name, w in program.objective)
    level = max(mem.level for mem in program.memberships)
    return Certificate(level=level, optimum=optimum, params=params, memberships=mem_certs)
