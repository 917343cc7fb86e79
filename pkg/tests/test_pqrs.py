import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from piegain.errors import BilinearProduct, ShapeMismatch
from piegain.pqrs import (PqrsOperator, adjoint, apply, apply_numeric, compose, op_add, op_equal,
                          op_scale)
from piegain.symbolic import AffineScalar, MatPoly, Poly
from support import (DOMAINS, adjoint_discrepancy, rand_matpoly, rand_operator, rand_state,
                     sample_points, sequential_discrepancy)


def test_identity_and_zero_apply(rng):
    x, z = rand_state(rng, 2, 3)
    f, g = apply(PqrsOperator.identity(2, 3), x, z)
    assert np.allclose(f, x) and g.equals(z)
    f, g = apply(PqrsOperator.zero((2, 3), (2, 3)), x, z)
    assert not np.any(f) and g.is_zero()


def test_q1_integrates():
    op = PqrsOperator.from_parts((0, 1), (1, 0), Q1=MatPoly.constant([[1.0]]))
    f, _ = apply(op, None, MatPoly.constant([[1.0]]))
    assert f == pytest.approx([1.0])


def test_apply_shape_mismatch(rng):
    op = rand_operator(rng, (2, 1), (1, 1), 1)
    with pytest.raises(ShapeMismatch):
        apply(op, np.ones(3), MatPoly.constant([[1.0]]))


def test_apply_numeric_matches_exact(rng):
    op = rand_operator(rng, (2, 2), (1, 3), 2, (-1.0, 1.0))
    x, z = rand_state(rng, 2, 2, 3, (-1.0, 1.0))
    f1, g1 = apply(op, x, z)
    f2, g2 = apply_numeric(op, x, z)
    s = sample_points(op.domain)
    assert np.allclose(f1, f2, atol=1e-10)
    assert np.allclose(g1.at(s=s)[..., 0], g2(s), atol=1e-10)


def test_compose_with_identity_is_exact(rng):
    op = rand_operator(rng, (2, 2), (1, 3), 2)
    assert op_equal(compose(PqrsOperator.identity(1, 3), op), op, 1e-12)
    assert op_equal(compose(op, PqrsOperator.identity(2, 2)), op, 1e-12)


def test_compose_multipliers(rng):
    D = rand_matpoly(rng, 2, 2, 2)
    S = rand_matpoly(rng, 2, 2, 2)
    A = PqrsOperator.from_parts((0, 2), (0, 2), S=D)
    B = PqrsOperator.from_parts((0, 2), (0, 2), S=S)
    C = compose(A, B)
    assert C.S.equals(D @ S, tol=1e-12)
    for part in (C.R1, C.R2, C.Q1, C.Q2, C.P):
        assert part.is_zero()


def test_compose_rejects_bilinear_and_bad_dims(rng):
    v = MatPoly.from_affine([[AffineScalar.variable("v")]])
    A = PqrsOperator.from_parts((1, 0), (1, 0), P=v)
    with pytest.raises(BilinearProduct):
        compose(A, A)
    with pytest.raises(ShapeMismatch):
        compose(rand_operator(rng, (1, 1), (1, 1), 1), rand_operator(rng, (1, 1), (2, 1), 1))


def test_adjoint_examples(rng):
    op = rand_operator(rng, (2, 1), (1, 3), 2)
    assert op_equal(adjoint(adjoint(op)), op, 0.0)
    P = rng.standard_normal((2, 2))
    Q = rand_matpoly(rng, 2, 1, 2)
    S = rand_matpoly(rng, 1, 1, 2)
    R1 = rand_matpoly(rng, 1, 1, 2, ("s", "theta"))
    R2 = R1.rename({"s": "theta", "theta": "s"}).T
    sym = PqrsOperator(MatPoly.constant(P + P.T), Q, Q.T, S, R1, R2)
    assert op_equal(adjoint(sym), sym, 1e-14)


def test_linear_space_ops(rng):
    op = rand_operator(rng, (2, 2), (2, 2), 2)
    assert op_add(op, op_scale(-1.0, op)).equals(PqrsOperator.zero((2, 2), (2, 2)), 1e-12)
    assert op_equal(op, op, 0.0)
    other = rand_operator(rng, (2, 2), (2, 2), 2)
    x, z = rand_state(rng, 2, 2)
    f, g = apply(op_add(op, other), x, z)
    f1, g1 = apply(op, x, z)
    f2, g2 = apply(other, x, z)
    assert np.allclose(f, f1 + f2, atol=1e-10) and g.equals(g1 + g2, tol=1e-10)
    with pytest.raises(ShapeMismatch):
        op_add(op, rand_operator(rng, (1, 2), (2, 2), 1))


def test_output_norm_is_finite(rng):
    op = rand_operator(rng, (2, 2), (2, 2), 2)
    x, z = rand_state(rng, 2, 2)
    f, g = apply(op, x, z)
    out = float(f @ f + (g.T @ g).integrate("s", "a", "b").evaluate()[0, 0])
    assert np.isfinite(out)


# -- properties ------------------------------------------------------------------

def _random_pair(rng, deg=None):
    dom = DOMAINS[int(rng.integers(len(DOMAINS)))]
    m, n, p = (int(v) for v in rng.integers(0, 4, size=3))
    q, r, u = (int(v) for v in rng.integers(1, 4, size=3))
    deg = int(rng.integers(0, 4)) if deg is None else deg
    B = rand_operator(rng, (m, q), (n, r), deg, dom)
    A = rand_operator(rng, (n, r), (p, u), deg, dom)
    return A, B, dom


seeds = st.integers(0, 2 ** 31 - 1)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_compose_matches_sequential_application(seed):
    rng = np.random.default_rng(seed)
    A, B, dom = _random_pair(rng)
    x, z = rand_state(rng, B.dims_in[0], B.dims_in[1], 3, dom)
    assert sequential_discrepancy(A, B, x, z) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_adjoint_identity(seed):
    rng = np.random.default_rng(seed)
    _, B, dom = _random_pair(rng)
    u = rand_state(rng, B.dims_in[0], B.dims_in[1], 3, dom)
    v = rand_state(rng, B.dims_out[0], B.dims_out[1], 3, dom)
    assert adjoint_discrepancy(B, u, v) <= 1e-8


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_composition_is_associative(seed):
    rng = np.random.default_rng(seed)
    dom = DOMAINS[seed % 3]
    C = rand_operator(rng, (1, 2), (2, 1), 2, dom)
    B = rand_operator(rng, (2, 1), (1, 2), 2, dom)
    A = rand_operator(rng, (1, 2), (2, 2), 2, dom)
    x, z = rand_state(rng, 1, 2, 3, dom)
    f1, g1 = apply(compose(compose(A, B), C), x, z)
    f2, g2 = apply(compose(A, compose(B, C)), x, z)
    s = sample_points(dom)
    assert np.allclose(f1, f2, atol=1e-8)
    assert np.allclose(g1.at(s=s), g2.at(s=s), atol=1e-8)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_adjoint_of_composition(seed):
    rng = np.random.default_rng(seed)
    A, B, _ = _random_pair(rng, deg=2)
    lhs = adjoint(compose(A, B))
    rhs = compose(adjoint(B), adjoint(A))
    scale = max(1.0, max(p.max_abs() for p in lhs.parts))
    assert op_equal(lhs, rhs, 1e-9 * scale)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_composed_degree_bound(seed):
    rng = np.random.default_rng(seed)
    A, B, _ = _random_pair(rng)
    dA = max(p.total_degree for p in A.parts)
    dB = max(p.total_degree for p in B.parts)
    C = compose(A, B)
    assert max(p.total_degree for p in C.parts) <= dA + dB + 1
