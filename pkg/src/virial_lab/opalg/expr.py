"""Normal-ordered polynomials in canonical position and momentum operators.

Every :class:`OperatorExpr` is stored in canonical form: each monomial has all
position factors to the left of all momentum factors, and within each group the
factors are sorted by ``(particle, axis)``.  Equality of canonical forms is
equality in the algebra, so identities are checked exactly.
"""

from __future__ import annotations

import enum
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass
from fractions import Fraction
from itertools import product
from math import comb, factorial
from numbers import Rational

from .scalar import MINUS_I_POWERS, GaussianRational, ScalarCoeff, format_rational

DEFAULT_CAP = 10**6
MAX_AXIS = 3


class ExpressionBlowup(RuntimeError):
    """Raised when rewriting would produce more monomials than the configured cap."""


class Kind(enum.IntEnum):
    POSITION = 0
    MOMENTUM = 1


@dataclass(frozen=True, order=True)
class CanonicalFactor:
    kind: Kind
    particle: int
    axis: int

    def __post_init__(self):
        if self.particle < 1:
            raise IndexError(f"particle index must be >= 1, got {self.particle}")
        if not 1 <= self.axis <= MAX_AXIS:
            raise IndexError(f"axis must be in 1..{MAX_AXIS}, got {self.axis}")
        object.__setattr__(self, "kind", Kind(self.kind))

    def __str__(self):
        name = "x" if self.kind is Kind.POSITION else "p"
        return f"{name}[{self.particle},{self.axis}]"


@dataclass(frozen=True)
class Monomial:
    coeff: ScalarCoeff
    factors: tuple[CanonicalFactor, ...]

    @property
    def degree(self) -> int:
        return len(self.factors)


# Internal monomial key: tuple of (particle, axis, x_exponent, p_exponent)
# sorted by (particle, axis); together with the hbar and lam exponents it
# identifies one term of an expression.
Mode = tuple[int, int, int, int]
Key = tuple[tuple[Mode, ...], int, int]


def _key_factors(mono: tuple[Mode, ...]) -> tuple[CanonicalFactor, ...]:
    xs = []
    ps = []
    for particle, axis, nx, np_ in mono:
        xs.extend([CanonicalFactor(Kind.POSITION, particle, axis)] * nx)
        ps.extend([CanonicalFactor(Kind.MOMENTUM, particle, axis)] * np_)
    return tuple(xs + ps)


def _factors_key(factors: Iterable[CanonicalFactor]) -> tuple[Mode, ...]:
    """Key of an already normal-ordered factor sequence (order is not checked)."""
    counts: dict[tuple[int, int], list[int]] = {}
    for f in factors:
        c = counts.setdefault((f.particle, f.axis), [0, 0])
        c[f.kind] += 1
    return tuple((i, a, c[0], c[1]) for (i, a), c in sorted(counts.items()))


class OperatorExpr:
    """Immutable exact sum of normal-ordered monomials."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Key, GaussianRational] | None = None):
        self._terms = {k: v for k, v in (terms or {}).items() if v}
        self._hash = None

    # -- constructors ------------------------------------------------------
    @classmethod
    def scalar(cls, c) -> "OperatorExpr":
        if not isinstance(c, ScalarCoeff):
            c = ScalarCoeff.of(c)
        return cls({((), c.hbar_power, c.lambda_power): c.value})

    @classmethod
    def factor(cls, f: CanonicalFactor) -> "OperatorExpr":
        return cls({(_factors_key([f]), 0, 0): GaussianRational(1)})

    @classmethod
    def from_monomials(cls, monomials: Iterable[Monomial]) -> "OperatorExpr":
        out = zero()
        for m in monomials:
            out = out + scale(m.coeff, normal_order(list(m.factors)))
        return out

    # -- inspection --------------------------------------------------------
    @property
    def terms(self) -> Mapping[Key, GaussianRational]:
        return dict(self._terms)

    def __len__(self):
        return len(self._terms)

    def __bool__(self):
        return bool(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def monomials(self) -> Iterator[Monomial]:
        for mono, h, l in sorted(self._terms, key=_print_order):
            yield Monomial(ScalarCoeff(self._terms[(mono, h, l)], h, l), _key_factors(mono))

    def kinds(self) -> set[Kind]:
        out = set()
        for mono, _, _ in self._terms:
            for _, _, nx, np_ in mono:
                if nx:
                    out.add(Kind.POSITION)
                if np_:
                    out.add(Kind.MOMENTUM)
        return out

    def max_particle(self) -> int:
        return max((m[0] for mono, _, _ in self._terms for m in mono), default=0)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other):
        return add(self, _as_expr(other))

    def __radd__(self, other):
        return add(_as_expr(other), self)

    def __sub__(self, other):
        return add(self, -_as_expr(other))

    def __rsub__(self, other):
        return add(_as_expr(other), -self)

    def __neg__(self):
        return OperatorExpr({k: -v for k, v in self._terms.items()})

    def __mul__(self, other):
        return mul(self, _as_expr(other))

    def __rmul__(self, other):
        return mul(_as_expr(other), self)

    def __pow__(self, n: int):
        if n < 0:
            raise ValueError("operator powers must be non-negative")
        out = one()
        for _ in range(n):
            out = mul(out, self)
        return out

    def __eq__(self, other):
        if not isinstance(other, OperatorExpr):
            try:
                other = _as_expr(other)
            except TypeError:
                return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(frozenset(self._terms.items()))
        return self._hash

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"OperatorExpr({to_string(self)!r})"


def _as_expr(obj) -> OperatorExpr:
    if isinstance(obj, OperatorExpr):
        return obj
    if isinstance(obj, CanonicalFactor):
        return OperatorExpr.factor(obj)
    if isinstance(obj, (ScalarCoeff, GaussianRational, int, Rational)):
        return OperatorExpr.scalar(obj)
    raise TypeError(f"cannot interpret {obj!r} as an operator expression")


def zero() -> OperatorExpr:
    return OperatorExpr()


def one() -> OperatorExpr:
    return OperatorExpr.scalar(1)


def x(particle: int, axis: int = 1) -> OperatorExpr:
    return OperatorExpr.factor(CanonicalFactor(Kind.POSITION, particle, axis))


def p(particle: int, axis: int = 1) -> OperatorExpr:
    return OperatorExpr.factor(CanonicalFactor(Kind.MOMENTUM, particle, axis))


def hbar() -> OperatorExpr:
    return OperatorExpr.scalar(ScalarCoeff(GaussianRational(1), 1, 0))


def lam() -> OperatorExpr:
    return OperatorExpr.scalar(ScalarCoeff(GaussianRational(1), 0, 1))


def imag_unit() -> OperatorExpr:
    return OperatorExpr.scalar(GaussianRational(0, 1))


# -- ring operations --------------------------------------------------------


def add(a: OperatorExpr, b: OperatorExpr) -> OperatorExpr:
    terms = dict(a._terms)
    for k, v in b._terms.items():
        s = terms.get(k)
        terms[k] = v if s is None else s + v
    return OperatorExpr(terms)


def scale(c, a: OperatorExpr) -> OperatorExpr:
    if not isinstance(c, ScalarCoeff):
        c = ScalarCoeff.of(c)
    if c.is_zero():
        return zero()
    return OperatorExpr(
        {(mono, h + c.hbar_power, l + c.lambda_power): c.value * v for (mono, h, l), v in a._terms.items()}
    )


def _reorder_options(s: int, t: int) -> list[tuple[int, int]]:
    """p^s x^t = sum_k C(s,k) C(t,k) k! (-i hbar)^k x^(t-k) p^(s-k); returns (k, weight)."""
    return [(k, comb(s, k) * comb(t, k) * factorial(k)) for k in range(min(s, t) + 1)]


def _mul_mono(left: tuple[Mode, ...], right: tuple[Mode, ...]):
    """Yield (mono, hbar_extra, coeff) for the normal-ordered product left*right."""
    lm = {(i, a): (nx, np_) for i, a, nx, np_ in left}
    rm = {(i, a): (nx, np_) for i, a, nx, np_ in right}
    modes = sorted(set(lm) | set(rm))
    base = []
    choices = []
    for mode in modes:
        lx, lp = lm.get(mode, (0, 0))
        rx, rp = rm.get(mode, (0, 0))
        base.append((mode, lx + rx, lp + rp))
        # only the left momenta passing the right positions generate terms
        choices.append(_reorder_options(lp, rx) if lp and rx else [(0, 1)])
    for combo in product(*choices):
        ktot = 0
        weight = 1
        mono = []
        for (mode, nx, np_), (k, w) in zip(base, combo):
            ktot += k
            weight *= w
            if nx - k or np_ - k:
                mono.append((mode[0], mode[1], nx - k, np_ - k))
        yield tuple(mono), ktot, MINUS_I_POWERS[ktot % 4] * weight


def mul(a: OperatorExpr, b: OperatorExpr, cap: int | None = None) -> OperatorExpr:
    """Product a*b brought to normal order."""
    cap = DEFAULT_CAP if cap is None else cap
    terms: dict[Key, GaussianRational] = {}
    for (ma, ha, la), va in a._terms.items():
        for (mb, hb, lb), vb in b._terms.items():
            v = va * vb
            for mono, k, w in _mul_mono(ma, mb):
                key = (mono, ha + hb + k, la + lb)
                s = terms.get(key)
                terms[key] = v * w if s is None else s + v * w
                if len(terms) > cap:
                    raise ExpressionBlowup(f"intermediate monomial count exceeded cap {cap}")
    return OperatorExpr(terms)


def commutator(a: OperatorExpr, b: OperatorExpr, cap: int | None = None) -> OperatorExpr:
    return add(mul(a, b, cap), -mul(b, a, cap))


def adjoint(a: OperatorExpr) -> OperatorExpr:
    """Hermitian conjugate: reverse each monomial, conjugate coefficients, reorder."""
    out = zero()
    for (mono, h, l), v in a._terms.items():
        # (X P)^dagger = P X
        ps = tuple((i, ax, 0, np_) for i, ax, _, np_ in mono if np_)
        xs = tuple((i, ax, nx, 0) for i, ax, nx, _ in mono if nx)
        left = OperatorExpr({(ps, h, l): v.conjugate()})
        out = add(out, mul(left, OperatorExpr({(xs, 0, 0): GaussianRational(1)})))
    return out


def equals(a: OperatorExpr, b: OperatorExpr) -> bool:
    return a._terms == b._terms


def normal_order(tree) -> OperatorExpr:
    """Canonical form of a product/sum tree.

    Accepts an :class:`OperatorExpr`, a single factor or scalar, a list/tuple
    read as an ordered product (a "word"), or a parse tree node from
    :func:`virial_lab.opalg.parser.parse_tree`.
    """
    if isinstance(tree, OperatorExpr):
        return tree
    if isinstance(tree, (list, tuple)):
        out = one()
        for item in tree:
            out = mul(out, normal_order(item))
        return out
    if hasattr(tree, "evaluate"):
        return tree.evaluate()
    return _as_expr(tree)


# -- printing ----------------------------------------------------------------


def _print_order(key: Key):
    mono, h, l = key
    deg = sum(nx + np_ for _, _, nx, np_ in mono)
    return (-deg, mono, h, l)


def _factor_string(mono: tuple[Mode, ...]) -> str:
    parts = []
    for kind, name in ((2, "x"), (3, "p")):
        for m in mono:
            n = m[kind]
            if n:
                s = f"{name}[{m[0]},{m[1]}]"
                parts.append(s if n == 1 else f"{s}^{n}")
    return "*".join(parts)


def _coeff_parts(v: GaussianRational, h: int, l: int) -> tuple[bool, list[str]]:
    """(negative, multiplicative parts) of a coefficient; empty parts means unit."""
    parts: list[str] = []
    negative = False
    if v.re and v.im:
        sign = "-" if v.im < 0 else "+"
        parts.append(f"({format_rational(v.re)} {sign} {format_rational(abs(v.im))}*i)")
    else:
        num = v.re if v.re else v.im
        negative = num < 0
        mag = abs(num)
        if mag != 1:
            parts.append(format_rational(mag))
        if v.im:
            parts.append("i")
    if h:
        parts.append("hbar" if h == 1 else f"hbar^{h}")
    if l:
        parts.append("lam" if l == 1 else f"lam^{l}")
    return negative, parts


def to_string(e: OperatorExpr) -> str:
    """Serialize to the input grammar; ``parse(to_string(e)) == e``."""
    if not e._terms:
        return "0"
    out = []
    for idx, key in enumerate(sorted(e._terms, key=_print_order)):
        mono, h, l = key
        negative, parts = _coeff_parts(e._terms[key], h, l)
        coeff = "*".join(parts)
        if len(parts) > 1 or "/" in coeff:
            coeff = f"({coeff})"
        fac = _factor_string(mono)
        if fac and coeff:
            body = f"{coeff}*{fac}"
        else:
            body = fac or coeff or "1"
        if idx == 0:
            out.append(f"-{body}" if negative else body)
        else:
            out.append(f" - {body}" if negative else f" + {body}")
    return "".join(out)


def rational(num: int, den: int = 1) -> OperatorExpr:
    return OperatorExpr.scalar(Fraction(num, den))
