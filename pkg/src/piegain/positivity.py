"""Positive PQRS operators from a PSD matrix and monomial bases.

With ``v(s) = [x; Z1(s) z(s); int_a^s Z2(s,t) z(t) dt; int_s^b Z2(s,t) z(t) dt]``
the quadratic form ``int_a^b g(s) v(s)' T v(s) ds`` is nonnegative whenever
``T >= 0`` and ``g >= 0``.  Expanding it gives an operator whose six parts are
affine in the entries of ``T``; :func:`param_positive` builds exactly that
operator.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeMismatch
from .pqrs import PqrsOperator
from .symbolic import MatPoly, Monomial, Poly

DEFAULT_EPS = 1e-4


class VarNamespace:
    """Hands out unique names for PSD blocks.  Not thread-safe."""

    def __init__(self, prefix=""):
        self.prefix = prefix
        self._used = {}

    def fresh(self, label):
        k = self._used.get(label, 0) + 1
        self._used[label] = k
        return "%s%s%d" % (self.prefix, label, k)


@dataclass(frozen=True)
class MonomialBasis:
    d: int
    n: int
    Z1: MatPoly
    Z2: MatPoly
    monomials2: tuple

    @property
    def size1(self):
        return self.Z1.rows

    @property
    def size2(self):
        return self.Z2.rows


@dataclass(frozen=True)
class PositivityCertificate:
    """The PSD matrix behind one positive operator."""

    name: str
    T: MatPoly
    block_sizes: tuple
    g: Poly
    basis: MonomialBasis

    @property
    def size(self):
        return self.T.rows


def make_basis(d, n, domain=(0.0, 1.0)):
    """Stacked monomial bases ``Z1 = [s^k I]`` and ``Z2 = [s^i theta^j I]``."""
    if d < 0 or n < 0:
        raise ValueError("need d >= 0 and n >= 0")
    eye = np.eye(n)
    terms1 = {}
    for k in range(d + 1):
        block = np.zeros(((d + 1) * n, n))
        block[k * n:(k + 1) * n] = eye
        terms1[(k, 0, 0)] = block
    mons = sorted(Monomial((i, j, 0)) for i in range(d + 1) for j in range(d + 1) if i + j <= d)
    terms2 = {}
    for idx, mon in enumerate(mons):
        block = np.zeros((len(mons) * n, n))
        block[idx * n:(idx + 1) * n] = eye
        terms2[mon.exponents] = block
    Z1 = MatPoly.from_terms(terms1, shape=((d + 1) * n, n), domain=domain)
    Z2 = MatPoly.from_terms(terms2, shape=(len(mons) * n, n), domain=domain)
    return MonomialBasis(d, n, Z1, Z2, tuple(mons))


def weight_one(domain=(0.0, 1.0)):
    return Poly.constant(1.0, domain)


def weight_interval(domain=(0.0, 1.0)):
    """``g(s) = (s - a)(b - s)``, nonnegative on the domain."""
    a, b = domain
    s = Poly.var("s", domain)
    return (s - a) * (b - s)


def _split(T, sizes):
    edges = np.concatenate([[0], np.cumsum(sizes)]).astype(int)
    return {(i + 1, j + 1): T[edges[i]:edges[i + 1], edges[j]:edges[j + 1]]
            for i in range(4) for j in range(4)}


def param_positive(m, n, d, g, namespace=None, domain=None, name=None):
    """Positive operator on ``R^m x L2^n`` parameterized by a PSD matrix ``T``.

    Returns ``(operator, certificate)``; every coefficient of the operator is
    affine in the entries of ``T``.
    """
    domain = tuple(g.domain) if domain is None else tuple(domain)
    if name is None:
        name = (namespace or VarNamespace()).fresh("T")
    basis = make_basis(d, n, domain)
    n1 = basis.size1 if n else 0
    n2 = basis.size2 if n else 0
    sizes = (m, n1, n2, n2)
    T = MatPoly.symmetric_variable(sum(sizes), name, domain)
    cert = PositivityCertificate(name, T, sizes, g, basis)
    B = _split(T, sizes)

    P = B[1, 1].scale(float(g.integrate("s", "a", "b").evaluate()))
    if n == 0:
        op = PqrsOperator.from_parts((m, 0), (m, 0), domain, P=P)
        return op, cert

    swap = {"s": "theta", "theta": "s"}
    Z1 = basis.Z1
    Z2 = basis.Z2                                         # Z2(s, theta)
    Z2_ts = Z2.rename(swap)                               # Z2(theta, s)
    Z2_te = Z2.rename({"s": "theta", "theta": "eta", "eta": "s"})   # Z2(theta, eta)
    Z2_se = Z2.rename({"theta": "eta", "eta": "theta"})   # Z2(s, eta)
    Z2_es = Z2.rename({"s": "eta", "theta": "s", "eta": "theta"})   # Z2(eta, s)
    Z1_e = Z1.rename({"s": "eta", "eta": "s"})
    g_t = g.rename(swap)
    g_e = g.rename({"s": "eta", "eta": "s"})

    Q1 = (B[1, 2] @ Z1) * g
    Q1 = Q1 + ((B[1, 3] @ Z2_ts) * g_t).integrate("theta", "s", "b")
    Q1 = Q1 + ((B[1, 4] @ Z2_ts) * g_t).integrate("theta", "a", "s")
    S = (Z1.T @ (B[2, 2] @ Z1)) * g

    def inner(block):
        return (Z2_ts.T @ (block @ Z2_te)) * g_t

    M33 = inner(B[3, 3])
    M44 = inner(B[4, 4])
    R1 = ((Z1.T @ (B[2, 3] @ Z2_se)) * g
          + (Z2_es.T @ (B[4, 2] @ Z1_e)) * g_e
          + M33.integrate("theta", "s", "b")
          + inner(B[4, 3]).integrate("theta", "eta", "s")
          + M44.integrate("theta", "a", "eta"))
    R2 = ((Z1.T @ (B[2, 4] @ Z2_se)) * g
          + (Z2_es.T @ (B[3, 2] @ Z1_e)) * g_e
          + M33.integrate("theta", "eta", "b")
          + inner(B[3, 4]).integrate("theta", "s", "eta")
          + M44.integrate("theta", "a", "s"))
    back = {"eta": "theta", "theta": "eta"}
    op = PqrsOperator(P, Q1, Q1.T, S, R1.rename(back), R2.rename(back))
    return op, cert


def phi_d(m, n, d, namespace=None, domain=(0.0, 1.0), label="T"):
    """Sum of two positive operators with weights ``1`` and ``(s-a)(b-s)``."""
    ns = namespace or VarNamespace()
    op1, c1 = param_positive(m, n, d, weight_one(domain), domain=domain, name=ns.fresh(label + "a"))
    op2, c2 = param_positive(m, n, d, weight_interval(domain), domain=domain, name=ns.fresh(label + "b"))
    return op1 + op2, (c1, c2)


def coerce_shift(op, eps):
    """Subtract ``eps`` from the diagonal of ``P`` and ``S``."""
    (m, q), (n, r) = op.dims_in, op.dims_out
    if m != n or q != r:
        raise ShapeMismatch("coerce_shift needs a square operator")
    shift = PqrsOperator.identity(m, q, op.domain)
    return op - shift * float(eps)


def membership_residual(target, phi_op):
    """Affine coefficients of ``target - phi_op``; all zero iff target is in the cone."""
    return target - phi_op
