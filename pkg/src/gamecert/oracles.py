"""Independent numerical verification: sampling bounds and a
self-contained eigensolver.

Everything here deliberately avoids the symbolic certification path: the
eigensolver is cyclic Jacobi (not the SDP), derivatives are checked by
central finite differences, and membership certificates are audited by
pointwise evaluation.  Sampling is reproducible: the stream for attempt i
is derived from (seed, i), so results do not depend on chunking or
parallelism.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .games import PolynomialGame, SemialgebraicSet, player_hessian, pseudogradient, symmetrized_jacobian
from .polynomials import Polynomial

DEFAULT_SEED = 0x5EED


def jacobi_eigenvalues(matrix: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a symmetric matrix by cyclic Jacobi rotations,
    ascending.  Deterministic and dependency-free on purpose: this is the
    reference the SDP route is checked against."""
    A = np.array(matrix, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("jacobi_eigenvalues needs a square matrix")
    if np.max(np.abs(A - A.T)) > 1e-10 * (1.0 + np.max(np.abs(A))):
        raise ValueError("matrix is not symmetric")
    A = 0.5 * (A + A.T)
    n = A.shape[0]
    if n == 1:
        return A[0].copy()
    scale = np.max(np.abs(A)) or 1.0
    for _ in range(max_sweeps):
        off = math.sqrt(max(0.0, (A * A).sum() - (np.diag(A) ** 2).sum()))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 1.0 / (2.0 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot_p = c * A[:, p] - s * A[:, q]
                rot_q = s * A[:, p] + c * A[:, q]
                A[:, p], A[:, q] = rot_p, rot_q
                rot_p = c * A[p, :] - s * A[q, :]
                rot_q = s * A[p, :] + c * A[q, :]
                A[p, :], A[q, :] = rot_p, rot_q
                A[p, q] = A[q, p] = 0.0
    return np.sort(np.diag(A))


def infer_bounding_box(domain: SemialgebraicSet) -> list[tuple[float, float]] | None:
    """Derive per-variable bounds from linear inequalities.

    Handles single-variable bounds (a0 + a*x_i >= 0) and simplex-style rows
    (a0 - sum_j x_j >= 0 with nonnegative lower bounds on the x_j).
    Returns None when some variable stays unbounded.
    """
    n = domain.n_vars
    lo = [-math.inf] * n
    hi = [math.inf] * n
    linear = []
    for g in domain.inequalities:
        if g.degree > 1:
            continue
        a0 = g.coeff((0,) * n)
        coeffs = {}
        for exps, c in g.terms.items():
            if sum(exps) == 1:
                coeffs[exps.index(1)] = c
        linear.append((a0, coeffs))
        if len(coeffs) == 1:
            ((i, a),) = coeffs.items()
            bound = -a0 / a
            if a > 0:
                lo[i] = max(lo[i], bound)
            else:
                hi[i] = min(hi[i], bound)
    for a0, coeffs in linear:
        if len(coeffs) < 2 or a0 <= 0:
            continue
        if all(a < 0 for a in coeffs.values()) and all(lo[i] >= 0 for i in coeffs):
            for i, a in coeffs.items():
                hi[i] = min(hi[i], a0 / -a)
    if any(math.isinf(v) for v in lo + hi):
        return None
    return list(zip(lo, hi))


@dataclass
class SampleReport:
    kind: str
    samples: int
    max_value: float
    argmax_point: np.ndarray | None
    acceptance_rate: float

    def __repr__(self):
        return (
            f"SampleReport(kind={self.kind!r}, samples={self.samples}, "
            f"max={self.max_value:.6g}, acceptance={self.acceptance_rate:.3f})"
        )


def _attempt_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng([seed & 0xFFFFFFFF, index])


def sample_domain_points(
    domain: SemialgebraicSet,
    n_samples: int,
    bounding_box=None,
    seed: int = DEFAULT_SEED,
    min_acceptance: float = 1e-4,
) -> tuple[np.ndarray, float]:
    """Rejection-sample points of the set from its bounding box.

    Returns the accepted points and the acceptance rate; aborts when the
    rate stays under ``min_acceptance``.
    """
    box = bounding_box if bounding_box is not None else infer_bounding_box(domain)
    if box is None:
        raise ValueError(
            "no bounding box could be inferred; pass one explicitly"
        )
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    accepted: list[np.ndarray] = []
    attempts = 0
    max_attempts = max(200_000, 50 * n_samples)
    while len(accepted) < n_samples:
        if attempts >= max_attempts:
            rate = len(accepted) / attempts
            if rate < min_acceptance:
                raise RuntimeError(
                    f"rejection sampling acceptance rate {rate:.2e} below {min_acceptance:.0e}; "
                    "supply a tighter bounding box"
                )
            max_attempts *= 2
        rng = _attempt_stream(seed, attempts)
        point = lo + rng.random(domain.n_vars) * (hi - lo)
        attempts += 1
        if domain.contains(point):
            accepted.append(point)
    return np.array(accepted), len(accepted) / attempts


def sample_max_eigenvalue(
    game: PolynomialGame,
    kind: str = "monotone",
    n_samples: int = 10_000,
    bounding_box=None,
    seed: int = DEFAULT_SEED,
) -> SampleReport:
    """Lower-bound max_x lambda_max by sampling the domain and running the
    Jacobi eigensolver on the evaluated matrix (symmetrized Jacobian, or
    the worst per-player Hessian)."""
    points, rate = sample_domain_points(game.domain, n_samples, bounding_box, seed)
    if kind == "monotone":
        matrices = [symmetrized_jacobian(game)]
    elif kind == "concave":
        matrices = [player_hessian(game, i) for i in range(game.n_players) if game.block_sizes[i]]
    else:
        raise ValueError(f"unknown kind {kind!r}")
    best = -math.inf
    best_point = None
    for M in matrices:
        values = M.evaluate_many(points)
        for idx in range(points.shape[0]):
            lam = float(jacobi_eigenvalues(values[idx])[-1])
            if lam > best:
                best = lam
                best_point = points[idx]
    return SampleReport(
        kind=kind,
        samples=points.shape[0],
        max_value=best,
        argmax_point=best_point,
        acceptance_rate=rate,
    )


def _split_sphere_equalities(domain: SemialgebraicSet):
    """Recognize equalities of the form c*(1 - sum_{i in S} x_i^2) and
    return (sphere var groups, remaining domain over the other variables)."""
    n = domain.n_vars
    spheres: list[tuple[int, ...]] = []
    sphere_vars: set[int] = set()
    leftover_eqs = []
    for h in domain.equalities:
        const = h.coeff((0,) * n)
        group = []
        ok = const != 0.0
        if ok:
            for exps, c in h.terms.items():
                if sum(exps) == 0:
                    continue
                if sum(exps) == 2 and max(exps) == 2 and abs(c + const) <= 1e-12 * abs(const):
                    group.append(exps.index(2))
                else:
                    ok = False
                    break
        if ok and group:
            spheres.append(tuple(sorted(group)))
            sphere_vars.update(group)
        else:
            leftover_eqs.append(h)
    return spheres, sphere_vars, leftover_eqs


def sample_extended_points(
    domain: SemialgebraicSet,
    n_samples: int,
    bounding_box=None,
    seed: int = DEFAULT_SEED,
) -> np.ndarray:
    """Sample a set built as (base semialgebraic part) x (unit spheres).

    Sphere-shaped equalities are sampled uniformly on their spheres; the
    remaining variables are rejection-sampled against the remaining
    inequality constraints.
    """
    spheres, sphere_vars, leftover_eqs = _split_sphere_equalities(domain)
    if leftover_eqs:
        raise ValueError("cannot sample equalities other than unit spheres")
    n = domain.n_vars
    base_vars = [i for i in range(n) if i not in sphere_vars]
    base_ineqs = []
    for g in domain.inequalities:
        if any(exps[i] for exps in g.terms for i in sphere_vars):
            raise ValueError("inequality mixes sphere variables with the base set")
        squeezed = {
            tuple(exps[i] for i in base_vars): c for exps, c in g.terms.items()
        }
        base_ineqs.append(Polynomial(len(base_vars), squeezed))
    base = SemialgebraicSet(len(base_vars), tuple(base_ineqs), ())
    if bounding_box is not None and len(bounding_box) == n:
        bounding_box = [bounding_box[i] for i in base_vars]
    if base_vars:
        base_points, _ = sample_domain_points(base, n_samples, bounding_box, seed)
    else:
        base_points = np.zeros((n_samples, 0))
    out = np.zeros((n_samples, n))
    out[:, base_vars] = base_points
    for group in spheres:
        for row in range(n_samples):
            rng = _attempt_stream(seed ^ 0x53D, row * len(spheres) + hash(group) % 7919)
            vec = rng.standard_normal(len(group))
            norm = np.linalg.norm(vec)
            while norm < 1e-12:
                vec = rng.standard_normal(len(group))
                norm = np.linalg.norm(vec)
            out[row, list(group)] = vec / norm
    return out


def check_certificate_sampled(
    certificate,
    target: Polynomial,
    domain: SemialgebraicSet,
    n_samples: int = 1000,
    seed: int = DEFAULT_SEED,
    mismatch_tol: float = 1e-5,
    psd_slack: float = 1e-7,
) -> tuple[bool, float]:
    """Audit a decomposition numerically: evaluate the identity mismatch at
    sampled points of the extended set and check every Gram block stays PSD
    up to slack.  Returns (ok, worst violation)."""
    from .sos import MembershipCertificate  # local import to avoid a cycle

    mem = certificate.memberships[0] if hasattr(certificate, "memberships") else certificate
    assert isinstance(mem, MembershipCertificate)
    worst = 0.0
    for _, _, G in mem.gram_matrices:
        min_eig = float(jacobi_eigenvalues(0.5 * (G + G.T))[0])
        if min_eig < 0:
            worst = max(worst, -min_eig)
    if worst > psd_slack:
        return False, worst
    points = sample_extended_points(domain, n_samples, seed=seed)
    expansion = _expansion_values(mem, domain, points)
    mismatch = np.abs(target.evaluate_many(points) - expansion)
    worst = max(worst, float(np.max(mismatch)) if mismatch.size else 0.0)
    return worst <= mismatch_tol, worst


def _expansion_values(mem, domain: SemialgebraicSet, points: np.ndarray) -> np.ndarray:
    from .polynomials import Polynomial as P

    n = domain.n_vars
    total = np.zeros(points.shape[0])
    ineq_values = [g.evaluate_many(points) for g in domain.inequalities]
    eq_values = [h.evaluate_many(points) for h in domain.equalities]
    for which, (name, basis, G) in enumerate(mem.gram_matrices):
        Z = np.empty((points.shape[0], len(basis)))
        for col, mono in enumerate(basis):
            Z[:, col] = P.monomial(n, mono).evaluate_many(points)
        sigma = np.einsum("ni,ij,nj->n", Z, G, Z)
        if name == "sigma_0":
            total += sigma
        else:
            total += ineq_values[int(name.split("_")[1]) - 1] * sigma
    for eq_index, p in mem.free_multipliers:
        total += eq_values[eq_index] * p.evaluate_many(points)
    return total


def finite_difference_audit(
    game: PolynomialGame,
    n_points: int = 20,
    step: float = 1e-6,
    seed: int = DEFAULT_SEED,
    bounding_box=None,
) -> float:
    """Worst deviation between the symbolic pseudogradient and a central
    finite-difference gradient of the payoffs."""
    box = bounding_box or infer_bounding_box(game.domain) or [(-1.0, 1.0)] * game.n_vars
    lo = np.array([b[0] for b in box])
    hi = np.array([b[1] for b in box])
    v = pseudogradient(game)
    worst = 0.0
    for idx in range(n_points):
        rng = _attempt_stream(seed + 1, idx)
        point = lo + rng.random(game.n_vars) * (hi - lo)
        row = 0
        for i, u in enumerate(game.payoffs):
            for k in game.block_range(i):
                shifted_up = point.copy()
                shifted_dn = point.copy()
                shifted_up[k] += step
                shifted_dn[k] -= step
                fd = (u.evaluate(shifted_up) - u.evaluate(shifted_dn)) / (2 * step)
                worst = max(worst, abs(fd - v[row].evaluate(point)))
                row += 1
    return worst
