import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from virial_lab.dilation import (
    DimsError,
    GeneratorSpec,
    HamiltonianSpec,
    MixedKindError,
    build_G,
    build_Lx,
    build_Ly,
    build_Lz,
    dilate,
    directional_derivative,
    euler_degree,
    p_monomial,
    p_monomial_commutator,
    random_polynomial,
    rotational_invariant,
    total_momentum,
    virial_commutator,
)
from virial_lab.opalg import (
    Kind,
    OperatorExpr,
    ScalarCoeff,
    adjoint,
    commutator,
    i_hbar,
    parse,
    scale,
    x,
)


def test_G_one_dimension_one_particle():
    assert build_G(GeneratorSpec(1, 1)) == parse("x[1,1]*p[1,1] - 1/2*i*hbar")
    assert str(build_G(GeneratorSpec(1, 1))) == "x[1,1]*p[1,1] - (1/2*i*hbar)"


def test_G_three_dimensions():
    expected = parse("x[1,1]*p[1,1] + x[1,2]*p[1,2] + x[1,3]*p[1,3] - 3/2*i*hbar")
    assert build_G(GeneratorSpec(1, 3)) == expected


@pytest.mark.parametrize("n,dims", [(1, 1), (2, 3), (3, 1)])
def test_G_hermitian(n, dims):
    g = build_G(GeneratorSpec(n, dims))
    assert adjoint(g) == g


def test_generator_spec_validation():
    with pytest.raises(DimsError):
        GeneratorSpec(1, 2)
    with pytest.raises(ValueError):
        GeneratorSpec(0, 3)
    with pytest.raises(DimsError):
        build_Lz(GeneratorSpec(1, 1))


def test_G_commutes_with_angular_momentum():
    spec = GeneratorSpec(2, 3)
    g = build_G(spec)
    for build in (build_Lx, build_Ly, build_Lz):
        assert commutator(g, build(spec)).is_zero()


def test_Lz_brackets():
    spec = GeneratorSpec(2, 3)
    lz = build_Lz(spec)
    assert commutator(lz, total_momentum(2, 3)).is_zero()
    assert commutator(lz, total_momentum(2, 1)) == scale(i_hbar(), total_momentum(2, 2))


def test_Lz_commutes_with_rotational_invariant():
    spec = GeneratorSpec(3, 3)
    v = rotational_invariant(3, [(1, 1), (1, 2), (2, 3)], [1, -2, 5])
    v = v * v
    assert commutator(build_Lz(spec), v).is_zero()
    assert commutator(build_Lx(spec), v).is_zero()


def test_directional_derivative_examples():
    assert directional_derivative(parse("p[1,1]^2"), Kind.MOMENTUM) == parse("2*p[1,1]^2")
    assert directional_derivative(parse("x[1,1]*x[2,1]"), Kind.POSITION) == parse("2*x[1,1]*x[2,1]")
    assert directional_derivative(parse("7"), Kind.POSITION).is_zero()
    with pytest.raises(MixedKindError):
        directional_derivative(parse("x[1,1]*p[1,1]"), Kind.MOMENTUM)


def test_dilate_examples():
    assert dilate(parse("x[1,1]")) == parse("lam*x[1,1]")
    assert dilate(parse("p[1,1]")) == parse("lam^-1*p[1,1]")
    assert dilate(parse("x[1,1]*p[1,1]")) == parse("x[1,1]*p[1,1]")


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dilate_group_law(seed):
    rng = random.Random(seed)
    e = random_polynomial(rng, Kind.POSITION, 2, 3, 4) * random_polynomial(rng, Kind.MOMENTUM, 2, 3, 4)
    twice = dilate(dilate(e))
    # substituting lam -> lam^2 in a single dilation
    once = dilate(e)
    squared = OperatorExpr({(m, h, 2 * l): v for (m, h, l), v in once.terms.items()})
    assert twice == squared


def test_dilate_hamiltonian_exponents():
    t = parse("1/2*p[1,1]^2 + 1/2*p[2,1]^2")
    v = parse("x[1,1]^4 + 3*x[1,1]^2*x[2,1]^2")
    dh = dilate(t + v)
    for (_, _, l), _ in dilate(t).terms.items():
        assert l == -2
    for (_, _, l), _ in dilate(v).terms.items():
        assert l == 4
    assert dh == dilate(t) + dilate(v)


def test_euler_degree_examples():
    assert euler_degree(parse("x[1,1]^2 + x[2,1]^2")) == 2
    assert euler_degree(parse("x[1,1]^2 + x[1,1]")) is None
    assert euler_degree(parse("x[1,1]*x[2,1]^3")) == 4
    with pytest.raises(MixedKindError):
        euler_degree(parse("p[1,1]"))


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 6))
def test_euler_degree_matches_term_scan(seed, deg):
    rng = random.Random(seed)
    v = OperatorExpr()
    for _ in range(rng.randint(1, 4)):
        term = OperatorExpr.scalar(rng.randint(1, 9))
        for _ in range(deg):
            term = term * x(rng.randint(1, 3), rng.randint(1, 3))
        v = v + term
    degrees = {sum(m[2] for m in key[0]) for key in v.terms}
    expected = degrees.pop() if len(degrees) == 1 else None
    assert euler_degree(v) == expected


def test_virial_commutator_harmonic():
    h = HamiltonianSpec(parse("1/2*p[1,1]^2"), parse("1/2*x[1,1]^2"))
    assert virial_commutator(h) == parse("i*hbar*p[1,1]^2 - i*hbar*x[1,1]^2")


def test_virial_commutator_constant_drops():
    t = parse("p[1,1]^4 + p[1,2]*p[1,3]")
    h = HamiltonianSpec(t, OperatorExpr(), ScalarCoeff.of(7))
    assert virial_commutator(h) == scale(i_hbar(), directional_derivative(t, Kind.MOMENTUM))
    assert virial_commutator(h) == commutator(build_G(GeneratorSpec(1, 3)), h.hamiltonian)


def test_hamiltonian_spec_rejects_mixed_kinds():
    with pytest.raises(MixedKindError):
        HamiltonianSpec(parse("x[1,1]"), OperatorExpr())
    with pytest.raises(MixedKindError):
        HamiltonianSpec(OperatorExpr(), parse("p[1,1]"))


@pytest.mark.parametrize("axes,n", [([1], 1), ([1, 2], 2), ([1, 1, 1], 2), ([3, 1, 2, 2], 3)])
def test_p_monomial_commutator(axes, n):
    spec = GeneratorSpec(n, 3)
    expected = scale(i_hbar() * len(axes), p_monomial(axes, n))
    assert p_monomial_commutator(axes, spec) == expected


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3), st.sampled_from([1, 3]))
def test_generator_identities_random(seed, n, dims):
    rng = random.Random(seed)
    g = build_G(GeneratorSpec(n, dims))
    f = random_polynomial(rng, Kind.MOMENTUM, n, dims, 5)
    v = random_polynomial(rng, Kind.POSITION, n, dims, 5)
    assert commutator(g, f) == scale(i_hbar(), directional_derivative(f, Kind.MOMENTUM))
    assert commutator(g, v) == -scale(i_hbar(), directional_derivative(v, Kind.POSITION))
    h = HamiltonianSpec(f, v)
    assert virial_commutator(h) == commutator(g, h.hamiltonian)
