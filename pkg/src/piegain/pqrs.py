"""Operators on R^m x L2^q[a, b] parameterized by six matrix polynomials.

An operator ``{P, Q1, Q2, S, R1, R2}`` maps ``(x, z)`` to::

    ( P x + int_a^b Q1(s) z(s) ds,
      Q2(s) x + S(s) z(s) + int_a^s R1(s,t) z(t) dt + int_s^b R2(s,t) z(t) dt )

P is constant, Q1/Q2/S depend on ``s`` only, R1/R2 on ``(s, theta)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BilinearProduct, DomainMismatch, ShapeMismatch
from .symbolic import AffineScalar, MatPoly

GAUSS_START = 32
GAUSS_MAX = 256
GAUSS_TOL = 1e-10

_SWAP_ST = {"s": "theta", "theta": "s"}
_PARTS = ("P", "Q1", "Q2", "S", "R1", "R2")


@dataclass(frozen=True)
class PqrsOperator:
    P: MatPoly
    Q1: MatPoly
    Q2: MatPoly
    S: MatPoly
    R1: MatPoly
    R2: MatPoly

    def __post_init__(self):
        n, m = self.P.shape
        r, q = self.S.shape
        expect = {"Q1": (n, q), "Q2": (r, m), "R1": (r, q), "R2": (r, q)}
        for name, shape in expect.items():
            if getattr(self, name).shape != shape:
                raise ShapeMismatch("%s has shape %s, expected %s"
                                    % (name, getattr(self, name).shape, shape))
        domains = {getattr(self, k).domain for k in _PARTS}
        if len(domains) != 1:
            raise DomainMismatch("all six parts must share one domain")
        if any(self.P.degree(v) for v in ("s", "theta", "eta")):
            raise ValueError("P must be constant")
        for name in ("Q1", "Q2", "S"):
            part = getattr(self, name)
            if part.degree("theta") or part.degree("eta"):
                raise ValueError("%s may only depend on s" % name)
        for name in ("R1", "R2"):
            if getattr(self, name).degree("eta"):
                raise ValueError("%s may only depend on (s, theta)" % name)

    # -- construction -------------------------------------------------------

    @classmethod
    def from_parts(cls, dims_in, dims_out, domain=(0.0, 1.0), **parts):
        """Build from any subset of the six parts; missing parts are zero."""
        (m, q), (n, r) = dims_in, dims_out
        shapes = {"P": (n, m), "Q1": (n, q), "Q2": (r, m), "S": (r, q), "R1": (r, q), "R2": (r, q)}
        kw = {}
        for name, shape in shapes.items():
            val = parts.pop(name, None)
            if val is None:
                val = MatPoly.zeros(*shape, domain=domain)
            elif not isinstance(val, MatPoly):
                val = MatPoly.constant(np.asarray(val, dtype=float).reshape(shape), domain)
            kw[name] = val
        if parts:
            raise TypeError("unknown operator parts: %s" % sorted(parts))
        return cls(**kw)

    @classmethod
    def zero(cls, dims_in, dims_out, domain=(0.0, 1.0)):
        return cls.from_parts(dims_in, dims_out, domain)

    @classmethod
    def identity(cls, m, q, domain=(0.0, 1.0)):
        return cls.from_parts((m, q), (m, q), domain,
                              P=MatPoly.eye(m, domain), S=MatPoly.eye(q, domain))

    # -- properties ---------------------------------------------------------

    @property
    def dims_in(self):
        return (self.P.cols, self.S.cols)

    @property
    def dims_out(self):
        return (self.P.rows, self.S.rows)

    @property
    def domain(self):
        return self.P.domain

    @property
    def parts(self):
        return tuple(getattr(self, k) for k in _PARTS)

    @property
    def variables(self):
        seen = []
        for p in self.parts:
            seen.extend(v for v in p.variables if v not in seen)
        return tuple(seen)

    @property
    def is_data(self):
        return all(p.is_data for p in self.parts)

    def __repr__(self):
        return "PqrsOperator(%s -> %s, nvars=%d)" % (self.dims_in, self.dims_out, len(self.variables))

    def map_parts(self, fn):
        return PqrsOperator(*(fn(p) for p in self.parts))

    def assign(self, assignment):
        return self.map_parts(lambda p: p.assign(assignment))

    # -- linear space -------------------------------------------------------

    def __add__(self, other):
        return op_add(self, other)

    def __sub__(self, other):
        return op_add(self, op_scale(-1.0, other))

    def __neg__(self):
        return op_scale(-1.0, self)

    def __mul__(self, c):
        return op_scale(c, self)

    __rmul__ = __mul__

    def __matmul__(self, other):
        return compose(self, other)

    @property
    def H(self):
        return adjoint(self)

    def equals(self, other, tol=None):
        return op_equal(self, other, tol)

    # -- application --------------------------------------------------------

    def apply(self, x, z):
        return apply(self, x, z)

    def apply_numeric(self, x, z):
        return apply_numeric(self, x, z)


# ---------------------------------------------------------------------------
# algebra
# ---------------------------------------------------------------------------

def op_add(A, B):
    if A.dims_in != B.dims_in or A.dims_out != B.dims_out:
        raise ShapeMismatch("cannot add %r and %r" % (A, B))
    return PqrsOperator(*(x + y for x, y in zip(A.parts, B.parts)))


def op_scale(c, op):
    if not isinstance(c, AffineScalar):
        c = float(c)
    return op.map_parts(lambda p: p.scale(c))


def op_equal(A, B, tol=None):
    if A.dims_in != B.dims_in or A.dims_out != B.dims_out:
        raise ShapeMismatch("cannot compare %r and %r" % (A, B))
    return all(x.equals(y, tol) for x, y in zip(A.parts, B.parts))


def adjoint(op):
    """Adjoint with respect to ``<(x,z),(u,v)> = x'u + int z'v``."""
    return PqrsOperator(
        P=op.P.T,
        Q1=op.Q2.T,
        Q2=op.Q1.T,
        S=op.S.T,
        R1=op.R2.rename(_SWAP_ST).T,
        R2=op.R1.rename(_SWAP_ST).T,
    )


def _st_to(M, first, second):
    """Kernel stored in (s, theta) re-expressed in (first, second)."""
    mapping = {"s": first, "theta": second}
    rest = ({"s", "theta", "eta"} - {first, second}).pop()
    mapping["eta"] = rest
    return M.rename(mapping)


def compose(A, B):
    """The operator ``A o B`` (apply ``B`` first)."""
    if B.dims_out != A.dims_in:
        raise ShapeMismatch("cannot compose %r after %r" % (A, B))
    if A.domain != B.domain:
        raise DomainMismatch("operators live on different domains")
    if not A.is_data and not B.is_data:
        raise BilinearProduct("both operators carry decision variables")
    Ap, B1, B2, D, C1, C2 = A.parts
    P, Q1, Q2, S, R1, R2 = B.parts

    # outer kernel C(s, theta) against inner kernel R(theta, eta)
    R1te = _st_to(R1, "theta", "eta")
    R2te = _st_to(R2, "theta", "eta")
    C1R1 = C1 @ R1te
    C1R2 = C1 @ R2te
    C2R1 = C2 @ R1te
    C2R2 = C2 @ R2te

    def back(M):
        # (s, eta) -> (s, theta)
        return M.rename({"eta": "theta", "theta": "eta"})

    P_hat = Ap @ P + (B1 @ Q2).integrate("s", "a", "b")

    B1t = B1.rename({"s": "theta", "theta": "s"})
    Q1_hat = (Ap @ Q1 + B1 @ S
              + (B1t @ _st_to(R1, "theta", "s")).integrate("theta", "s", "b")
              + (B1t @ _st_to(R2, "theta", "s")).integrate("theta", "a", "s"))

    Q2t = Q2.rename({"s": "theta", "theta": "s"})
    Q2_hat = (B2 @ P + D @ Q2
              + (C1 @ Q2t).integrate("theta", "a", "s")
              + (C2 @ Q2t).integrate("theta", "s", "b"))

    S_hat = D @ S

    Q1t = Q1.rename({"s": "theta", "theta": "s"})
    St = S.rename({"s": "theta", "theta": "s"})
    common = B2 @ Q1t
    R1_hat = (common + D @ R1 + C1 @ St
              + back(C1R2.integrate("theta", "a", "eta")
                     + C1R1.integrate("theta", "eta", "s")
                     + C2R1.integrate("theta", "s", "b")))
    R2_hat = (common + D @ R2 + C2 @ St
              + back(C1R2.integrate("theta", "a", "s")
                     + C2R2.integrate("theta", "s", "eta")
                     + C2R1.integrate("theta", "eta", "b")))
    return PqrsOperator(P_hat, Q1_hat, Q2_hat, S_hat, R1_hat, R2_hat)


# ---------------------------------------------------------------------------
# application
# ---------------------------------------------------------------------------

def _finite_vector(x, m):
    x = np.zeros(m) if x is None else np.asarray(x, dtype=float).reshape(-1)
    if x.shape != (m,):
        raise ShapeMismatch("finite input must have length %d" % m)
    return x


def apply(op, x, z):
    """Exact application to a polynomial ``z`` (a ``q x 1`` MatPoly in ``s``).

    Returns the finite part as an array and the distributed part as a MatPoly.
    """
    if not op.is_data:
        raise ValueError("assign decision variables before applying an operator")
    m, q = op.dims_in
    x = _finite_vector(x, m)
    if z is None:
        z = MatPoly.zeros(q, 1, op.domain)
    if z.shape != (q, 1):
        raise ShapeMismatch("distributed input must be %d x 1" % q)
    if z.degree("theta") or z.degree("eta"):
        raise ValueError("distributed input may only depend on s")
    xm = MatPoly.constant(x.reshape(m, 1), op.domain) if m else MatPoly.zeros(0, 1, op.domain)
    fin = op.P @ xm + (op.Q1 @ z).integrate("s", "a", "b")
    zt = z.rename({"s": "theta", "theta": "s"})
    dist = (op.Q2 @ xm + op.S @ z
            + (op.R1 @ zt).integrate("theta", "a", "s")
            + (op.R2 @ zt).integrate("theta", "s", "b"))
    return fin.evaluate().reshape(-1), dist


def gauss_integral(f, lo, hi, n_start=GAUSS_START, n_max=GAUSS_MAX, tol=GAUSS_TOL):
    """Integrate ``f(nodes) -> (..., len(nodes), k)`` over ``[lo, hi]``.

    ``lo`` and ``hi`` may be arrays (broadcast against each other); nodes are
    passed with a trailing node axis.  The node count doubles until two
    successive results agree to ``tol``.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    prev = None
    n = n_start
    while True:
        xg, wg = np.polynomial.legendre.leggauss(n)
        half = 0.5 * (hi - lo)
        mid = 0.5 * (hi + lo)
        nodes = mid[..., None] + half[..., None] * xg
        vals = f(nodes)
        res = np.einsum("...n,...nk->...k", half[..., None] * wg, vals)
        if prev is not None:
            scale = max(1.0, float(np.max(np.abs(res))) if res.size else 1.0)
            if np.max(np.abs(res - prev), initial=0.0) <= tol * scale or n >= n_max:
                return res
        if n >= n_max:
            return res
        prev = res
        n *= 2


def _as_function(z, q, domain):
    if isinstance(z, MatPoly):
        if z.shape != (q, 1):
            raise ShapeMismatch("distributed input must be %d x 1" % q)
        return lambda s: z.at(s=s)[..., 0]
    if z is None:
        return lambda s: np.zeros(np.shape(s) + (q,))
    return z


def apply_numeric(op, x, z):
    """Apply ``op`` to ``(x, z)`` with ``z`` any vectorized callable.

    ``z(s)`` must map an array of points to values of shape ``(*s.shape, q)``.
    Returns ``(finite_vector, g)`` where ``g`` is a callable of the same kind.
    All integrals use adaptive Gauss-Legendre quadrature.
    """
    if not op.is_data:
        raise ValueError("assign decision variables before applying an operator")
    m, q = op.dims_in
    n, r = op.dims_out
    a, b = op.domain
    x = _finite_vector(x, m)
    zf = _as_function(z, q, op.domain)
    fin = op.P.evaluate() @ x
    if q and n:
        fin = fin + gauss_integral(
            lambda s: np.einsum("...ij,...j->...i", op.Q1.at(s=s), zf(s)), a, b)
    Q2, S, R1, R2 = op.Q2, op.S, op.R1, op.R2

    def g(s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape + (r,))
        if r == 0:
            return out
        if m:
            out += np.einsum("...ij,j->...i", Q2.at(s=s), x)
        if q:
            out += np.einsum("...ij,...j->...i", S.at(s=s), zf(s))
            sb = s[..., None]
            out += gauss_integral(
                lambda t: np.einsum("...ij,...j->...i", R1.at(s=sb, theta=t), zf(t)), a, s)
            out += gauss_integral(
                lambda t: np.einsum("...ij,...j->...i", R2.at(s=sb, theta=t), zf(t)), s, b)
        return out

    return fin, g


def inner_product(u, v, domain, q):
    """``<(x,z),(y,w)>_X`` for pairs of finite vectors and callables."""
    (x, zf), (y, wf) = u, v
    a, b = domain
    val = float(np.dot(x, y))
    if q:
        val += float(gauss_integral(
            lambda s: np.sum(zf(s) * wf(s), axis=-1, keepdims=True), a, b)[0])
    return val
