import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from piegain.errors import BilinearProduct, DomainMismatch, InvalidBound, ShapeMismatch, UnassignedVariable
from piegain.pqrs import gauss_integral
from piegain.symbolic import (AffineScalar, MatPoly, Monomial, Poly, evaluate, integrate, mat_mul,
                              poly_add, poly_mul, rename)
from support import rand_matpoly

s = Poly.var("s")
theta = Poly.var("theta")
eta = Poly.var("eta")


def test_affine_scalar_canonical_and_equality():
    a = AffineScalar(1.0, {"v": 0.0, "w": 2.0})
    assert a.terms == {"w": 2.0}
    assert a.equals(AffineScalar(1.0, {"w": 2.0 + 1e-14}))
    assert not a.equals(AffineScalar(1.0, {"w": 2.1}))


def test_monomial_graded_order():
    monos = sorted(Monomial(e) for e in [(0, 0, 1), (2, 0, 0), (0, 1, 0), (1, 0, 0), (0, 0, 0)])
    assert [m.exponents for m in monos][:4] == [(0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)]
    assert Monomial((1, 2, 3)).degree == 6


def test_poly_add_examples():
    assert poly_add(s + 1, -1.0 * s).equals(Poly.constant(1.0))
    p = 2 * s * theta + s * s
    assert poly_add(p, Poly.constant(0.0)).equals(p)
    assert poly_add(p, s * theta).equals(3 * s * theta + s * s)


def test_poly_add_domain_mismatch():
    with pytest.raises(DomainMismatch):
        poly_add(s, Poly.var("s", domain=(0.0, 2.0)))


def test_poly_mul_examples():
    assert poly_mul(s, theta).equals(s * theta)
    assert poly_mul(s, 1 - s).equals(s - s * s)
    v = Poly.constant(AffineScalar.variable("v1"))
    prod = poly_mul(v * s, 2 * theta)
    assert prod.evaluate({"s": 0.5, "theta": 2.0}, {"v1": 3.0}) == pytest.approx(6.0)


def test_poly_mul_bilinear_rejected():
    v = Poly.constant(AffineScalar.variable("v1"))
    w = Poly.constant(AffineScalar.variable("v2"))
    with pytest.raises(BilinearProduct):
        poly_mul(v, w)


def test_integrate_examples():
    assert integrate(Poly.constant(1.0), "s", "a", "b").evaluate() == pytest.approx(1.0)
    assert integrate(theta, "theta", 0.0, "s").equals(0.5 * s * s)
    assert integrate(theta, "theta", "eta", "s").equals(0.5 * s * s - 0.5 * eta * eta)


def test_integrate_invalid_bound():
    with pytest.raises(InvalidBound):
        integrate(s, "s", "a", "s")


def test_rename_examples():
    p = s * s * eta
    assert rename(p, {"s": "eta", "eta": "s"}).equals(eta * eta * s)
    assert rename(p, {}).equals(p)
    swap = {"s": "theta", "theta": "s"}
    assert rename(rename(p * theta, swap), swap).equals(p * theta)


def test_evaluate_examples():
    assert evaluate(0.5 * s * s, {"s": 1.0}) == pytest.approx(0.5)
    v = Poly.constant(AffineScalar.variable("v1")) * s
    assert evaluate(v, {"s": 2.0}, {"v1": 3.0}) == pytest.approx(6.0)
    with pytest.raises(UnassignedVariable):
        evaluate(v, {"s": 2.0})
    with pytest.raises(UnassignedVariable):
        evaluate(s)


def test_matrix_examples(rng):
    M = rand_matpoly(rng, 3, 2, 2, ("s", "theta"))
    N = rand_matpoly(rng, 2, 4, 2, ("s", "theta"))
    assert mat_mul(MatPoly.eye(3), M).equals(M)
    assert (MatPoly.zeros(4, 3) @ M).is_zero()
    lhs, rhs = (M @ N).T, N.T @ M.T
    for _ in range(5):
        pt = {"s": rng.uniform(), "theta": rng.uniform()}
        assert np.allclose(lhs.evaluate(pt), rhs.evaluate(pt), atol=1e-12)
    with pytest.raises(ShapeMismatch):
        M @ M


def test_integral_matches_quadrature(rng):
    for dom in [(0.0, 1.0), (-1.0, 2.0)]:
        p = rand_matpoly(rng, 2, 2, 4, ("s",), dom)
        exact = p.integrate("s", "a", "b").evaluate()
        quad = gauss_integral(lambda x: p.at(s=x).reshape(x.shape + (4,)), *dom).reshape(2, 2)
        assert np.allclose(exact, quad, atol=1e-10)


def test_symmetric_variable_names():
    X = MatPoly.symmetric_variable(2, "T")
    assert set(X.variables) == {"T[0,0]", "T[0,1]", "T[1,1]"}
    asg = {"T[0,0]": 1.0, "T[0,1]": 2.0, "T[1,1]": 3.0}
    assert np.allclose(X.evaluate(assignment=asg), [[1, 2], [2, 3]])


# -- properties ------------------------------------------------------------------

seeds = st.integers(0, 2 ** 31 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_ring_axioms(seed):
    rng = np.random.default_rng(seed)
    vs = ("s", "theta", "eta")
    p, q, r = (rand_matpoly(rng, 1, 1, 4, vs) for _ in range(3))
    assert ((p * q) * r).equals(p * (q * r), tol=1e-9)
    assert (p * (q + r)).equals(p * q + p * r, tol=1e-9)
    assert (p + q).equals(q + p, tol=0.0)
    assert (p * q).equals(q * p, tol=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_fundamental_theorem_of_calculus(seed):
    rng = np.random.default_rng(seed)
    p = rand_matpoly(rng, 1, 1, 4, ("s", "theta"))
    F = p.integrate("theta", 0.0, "s")
    x, h = rng.uniform(0.2, 0.8), 1e-5
    deriv = (F.evaluate({"s": x + h}) - F.evaluate({"s": x - h})) / (2 * h)
    # d/ds int_0^s p(s, theta) dtheta = p(s, s) + int_0^s dp/ds dtheta
    expect = p.evaluate({"s": x, "theta": x}) + p.diff("s").integrate("theta", 0.0, "s").evaluate({"s": x})
    assert np.allclose(deriv, expect, atol=1e-8)
    # the pure antiderivative: p independent of s
    q = rand_matpoly(rng, 1, 1, 4, ("theta",))
    G = q.integrate("theta", 0.0, "s")
    d2 = (G.evaluate({"s": x + h}) - G.evaluate({"s": x - h})) / (2 * h)
    assert np.allclose(d2, q.evaluate({"theta": x}), atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(seeds, st.permutations(["s", "theta", "eta"]))
def test_rename_inverse_is_identity(seed, perm):
    rng = np.random.default_rng(seed)
    p = rand_matpoly(rng, 2, 1, 3, ("s", "theta", "eta"))
    fwd = dict(zip(["s", "theta", "eta"], perm))
    inv = {v: k for k, v in fwd.items()}
    assert np.array_equal(p.rename(fwd).rename(inv).coef, p.coef)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_evaluate_is_homomorphism(seed):
    rng = np.random.default_rng(seed)
    vs = ("s", "theta", "eta")
    p, q = rand_matpoly(rng, 1, 1, 4, vs), rand_matpoly(rng, 1, 1, 4, vs)
    pt = dict(zip(vs, rng.uniform(-1, 1, 3)))
    lhs = float((p * q).evaluate(pt)[0, 0])
    rhs = float(p.evaluate(pt)[0, 0] * q.evaluate(pt)[0, 0])
    assert lhs == pytest.approx(rhs, rel=1e-12, abs=1e-12)
