"""Certification of concavity and monotonicity for polynomial games via
sum-of-squares programming, projection onto certified game classes, and
conversion of extensive-form games with imperfect recall."""

__version__ = "0.1.0"

from .polynomials import Polynomial, PolyMatrix, Monomial
from .games import (
    PolynomialGame,
    SemialgebraicSet,
    add_ball_constraint,
    box_set,
    player_hessian,
    pseudogradient,
    quadratic_form,
    regularize,
    sphere_set,
    symmetrized_jacobian,
)

__all__ = [
    "Polynomial",
    "PolyMatrix",
    "Monomial",
    "PolynomialGame",
    "SemialgebraicSet",
    "add_ball_constraint",
    "box_set",
    "player_hessian",
    "pseudogradient",
    "quadratic_form",
    "regularize",
    "sphere_set",
    "symmetrized_jacobian",
    "__version__",
]
