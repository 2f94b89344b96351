"""Dilation generator G, directional derivatives, scaling maps and the virial commutator."""

from __future__ import annotations

import random
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .opalg import (
    GaussianRational,
    Kind,
    OperatorExpr,
    ScalarCoeff,
    commutator,
    i_hbar,
    one,
    p,
    scale,
    x,
    zero,
)


class MixedKindError(ValueError):
    """Expression contains factors of a kind the operation does not accept."""


class DimsError(ValueError):
    pass


@dataclass(frozen=True)
class GeneratorSpec:
    n_particles: int
    dims: int = 3

    def __post_init__(self):
        if self.n_particles < 1:
            raise ValueError("n_particles must be >= 1")
        if self.dims not in (1, 3):
            raise DimsError("dims must be 1 or 3")


@dataclass(frozen=True)
class HamiltonianSpec:
    kinetic: OperatorExpr
    potential: OperatorExpr
    constant: ScalarCoeff = ScalarCoeff(GaussianRational(0))

    def __post_init__(self):
        if Kind.POSITION in self.kinetic.kinds():
            raise MixedKindError("kinetic term contains position factors")
        if Kind.MOMENTUM in self.potential.kinds():
            raise MixedKindError("potential term contains momentum factors")

    @property
    def hamiltonian(self) -> OperatorExpr:
        return self.kinetic + self.potential + OperatorExpr.scalar(self.constant)


def build_G(spec: GeneratorSpec) -> OperatorExpr:
    """Symmetrized generator (1/2) sum_i (r_i.p_i + p_i.r_i)."""
    half = Fraction(1, 2)
    g = zero()
    for i in range(1, spec.n_particles + 1):
        for a in range(1, spec.dims + 1):
            g = g + scale(half, x(i, a) * p(i, a) + p(i, a) * x(i, a))
    return g


def _angular(spec: GeneratorSpec, a: int, b: int) -> OperatorExpr:
    if spec.dims != 3:
        raise DimsError("angular momentum needs dims=3")
    out = zero()
    for i in range(1, spec.n_particles + 1):
        out = out + x(i, a) * p(i, b) - x(i, b) * p(i, a)
    return out


def build_Lz(spec: GeneratorSpec) -> OperatorExpr:
    return _angular(spec, 1, 2)


def build_Lx(spec: GeneratorSpec) -> OperatorExpr:
    return _angular(spec, 2, 3)


def build_Ly(spec: GeneratorSpec) -> OperatorExpr:
    return _angular(spec, 3, 1)


def total_momentum(n_particles: int, axis: int) -> OperatorExpr:
    out = zero()
    for i in range(1, n_particles + 1):
        out = out + p(i, axis)
    return out


def p_monomial(axes: Sequence[int], n_particles: int) -> OperatorExpr:
    """Product P_a P_b ... of total-momentum components."""
    out = one()
    for a in axes:
        out = out * total_momentum(n_particles, a)
    return out


def p_monomial_commutator(axes: Sequence[int], spec: GeneratorSpec) -> OperatorExpr:
    """[G, P_a P_b ...]; equals i*hbar*len(axes) times the monomial."""
    return commutator(build_G(spec), p_monomial(axes, spec.n_particles))


def _require_kind(f: OperatorExpr, kind: Kind):
    other = Kind.MOMENTUM if kind is Kind.POSITION else Kind.POSITION
    if other in f.kinds():
        raise MixedKindError(f"expected only {kind.name.lower()} factors")


def directional_derivative(f: OperatorExpr, kind: Kind) -> OperatorExpr:
    """Euler operator r.d/dr (or p.d/dp): each monomial of degree d maps to d times itself."""
    kind = Kind(kind)
    _require_kind(f, kind)
    col = 2 if kind is Kind.POSITION else 3
    terms = {}
    for key, v in f.terms.items():
        d = sum(m[col] for m in key[0])
        if d:
            terms[key] = v * d
    return OperatorExpr(terms)


def dilate(e: OperatorExpr) -> OperatorExpr:
    """Conjugation by the dilation: positions pick up lam, momenta lam^-1."""
    terms = {}
    for (mono, h, l), v in e.terms.items():
        shift = sum(nx - np_ for _, _, nx, np_ in mono)
        terms[(mono, h, l + shift)] = v
    return OperatorExpr(terms)


def euler_degree(v: OperatorExpr) -> int | None:
    """Homogeneity degree of a position polynomial, or None if inhomogeneous (or zero)."""
    _require_kind(v, Kind.POSITION)
    if v.is_zero():
        return None
    first = next(iter(v.terms))
    deg = sum(m[2] for m in first[0])
    if directional_derivative(v, Kind.POSITION) == scale(deg, v):
        return deg
    return None


def virial_commutator(h: HamiltonianSpec) -> OperatorExpr:
    """i*hbar*(p.dT/dp - r.dV/dr), which equals [G, T + V + K]."""
    dt = directional_derivative(h.kinetic, Kind.MOMENTUM)
    dv = directional_derivative(h.potential, Kind.POSITION)
    return scale(i_hbar(), dt - dv)


def rotational_invariant(n_particles: int, pairs: Sequence[tuple[int, int]], coeffs: Sequence[int] | None = None) -> OperatorExpr:
    """Sum of c_k (r_i . r_j) over the given particle pairs."""
    out = zero()
    coeffs = coeffs or [1] * len(pairs)
    for (i, j), c in zip(pairs, coeffs):
        dot = zero()
        for a in (1, 2, 3):
            dot = dot + x(i, a) * x(j, a)
        out = out + scale(c, dot)
    return out


def random_polynomial(
    rng: random.Random,
    kind: Kind,
    n_particles: int,
    dims: int,
    max_degree: int = 6,
    max_terms: int = 4,
) -> OperatorExpr:
    """Random polynomial in one kind of factor with small rational coefficients."""
    make = x if Kind(kind) is Kind.POSITION else p
    out = zero()
    for _ in range(rng.randint(1, max_terms)):
        term = OperatorExpr.scalar(Fraction(rng.randint(-5, 5) or 1, rng.randint(1, 3)))
        for _ in range(rng.randint(0, max_degree)):
            term = term * make(rng.randint(1, n_particles), rng.randint(1, dims))
        out = out + term
    return out
