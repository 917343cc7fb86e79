"""Matrix-valued polynomials in ``(s, theta, eta)`` with affine coefficients.

Every coefficient is an affine expression ``c0 + sum_k c_k v_k`` in named
decision variables ``v_k``.  A :class:`MatPoly` stores all of them in one dense
array of shape ``(rows, cols, Ds, Dt, De, 1 + nvars)``: the three middle axes
hold exponents of ``s``, ``theta`` and ``eta``, the last axis holds the
constant part followed by one slot per decision variable.

Products are allowed only when at most one factor carries decision variables,
so every object stays affine and can be matched coefficient-wise inside a
semidefinite program.
"""
from __future__ import annotations

import functools
import numbers
from dataclasses import dataclass

import numpy as np

from .errors import (BilinearProduct, DomainMismatch, InvalidBound,
                     ShapeMismatch, UnassignedVariable)

VARIABLES = ("s", "theta", "eta")
_ALIASES = {"s": "s", "theta": "theta", "eta": "eta", "θ": "theta", "η": "eta",
            "t": "theta", "th": "theta"}
_AXIS = {"s": 2, "theta": 3, "eta": 4}

COEF_TOL = 1e-12


def coef_tol(magnitude=0.0):
    """Zero threshold for coefficients of the given magnitude."""
    return COEF_TOL * max(1.0, float(magnitude))


def _var(name):
    try:
        return _ALIASES[name]
    except (KeyError, TypeError):
        raise ValueError("unknown polynomial variable %r" % (name,)) from None


# ---------------------------------------------------------------------------
# affine scalars and monomials
# ---------------------------------------------------------------------------

class AffineScalar:
    """A real constant plus a linear combination of decision variables."""

    __slots__ = ("constant", "terms")

    def __init__(self, constant=0.0, terms=None):
        self.constant = float(constant)
        self.terms = {k: float(v) for k, v in (terms or {}).items() if v != 0.0}

    @classmethod
    def variable(cls, name, coefficient=1.0):
        return cls(0.0, {name: coefficient})

    @property
    def is_constant(self):
        return not self.terms

    def _coerce(self, other):
        if isinstance(other, AffineScalar):
            return other
        if isinstance(other, numbers.Real):
            return AffineScalar(other)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0.0) + v
        return AffineScalar(self.constant + other.constant, terms)

    __radd__ = __add__

    def __neg__(self):
        return AffineScalar(-self.constant, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        if self.terms and other.terms:
            raise BilinearProduct("product of two expressions with decision variables")
        if other.terms:
            self, other = other, self
        c = other.constant
        return AffineScalar(self.constant * c, {k: v * c for k, v in self.terms.items()})

    __rmul__ = __mul__

    def evaluate(self, assignment=None):
        total = self.constant
        for k, v in self.terms.items():
            if assignment is None or k not in assignment:
                raise UnassignedVariable(k)
            total += v * float(assignment[k])
        return total

    def equals(self, other, tol=None):
        other = self._coerce(other)
        if other is NotImplemented:
            return False
        if tol is None:
            mags = [abs(self.constant), abs(other.constant)]
            mags += [abs(v) for v in self.terms.values()]
            mags += [abs(v) for v in other.terms.values()]
            tol = coef_tol(max(mags))
        diff = self - other
        return abs(diff.constant) <= tol and all(abs(v) <= tol for v in diff.terms.values())

    def __eq__(self, other):
        return self.equals(other)

    __hash__ = None

    def __repr__(self):
        parts = ["%.6g" % self.constant] if self.constant or not self.terms else []
        parts += ["%.6g*%s" % (v, k) for k, v in sorted(self.terms.items())]
        return "AffineScalar(" + " + ".join(parts) + ")"


@functools.total_ordering
@dataclass(frozen=True)
class Monomial:
    """Exponent triple ``(deg_s, deg_theta, deg_eta)``; graded-lex ordered."""

    exponents: tuple

    def __post_init__(self):
        e = tuple(int(x) for x in self.exponents)
        if len(e) != 3 or min(e) < 0:
            raise ValueError("a monomial needs three non-negative exponents")
        object.__setattr__(self, "exponents", e)

    @property
    def degree(self):
        return sum(self.exponents)

    def _key(self):
        ds, dt, de = self.exponents
        return (self.degree, de, dt, ds)

    def __lt__(self, other):
        return self._key() < other._key()

    def __str__(self):
        out = []
        for name, e in zip(("s", "θ", "η"), self.exponents):
            if e == 1:
                out.append(name)
            elif e > 1:
                out.append("%s^%d" % (name, e))
        return "*".join(out) or "1"


# ---------------------------------------------------------------------------
# array helpers
# ---------------------------------------------------------------------------

def _canonicalize(coef, variables):
    """Zero tiny entries, drop unused variables, trim trailing degrees."""
    if coef.size == 0:
        shape = coef.shape[:2] + (1, 1, 1, 1)
        return np.zeros(shape), ()
    mag = np.abs(coef).max()
    coef = np.where(np.abs(coef) <= coef_tol(mag), 0.0, coef)
    if variables:
        used = np.any(coef[..., 1:] != 0.0, axis=(0, 1, 2, 3, 4))
        if not used.all():
            keep = np.concatenate([[True], used])
            coef = coef[..., keep]
            variables = tuple(v for v, u in zip(variables, used) if u)
    nz = coef != 0.0
    sl = [slice(None), slice(None)]
    for ax in (2, 3, 4):
        other = tuple(a for a in range(6) if a != ax)
        hits = np.nonzero(np.any(nz, axis=other))[0]
        sl.append(slice(0, int(hits[-1]) + 1 if hits.size else 1))
    sl.append(slice(None))
    return np.ascontiguousarray(coef[tuple(sl)]), tuple(variables)


def _pad(coef, degs):
    """Zero-pad the three degree axes up to ``degs``."""
    cur = coef.shape[2:5]
    if tuple(cur) == tuple(degs):
        return coef
    widths = [(0, 0), (0, 0)] + [(0, d - c) for c, d in zip(cur, degs)] + [(0, 0)]
    return np.pad(coef, widths)


def _with_vars(coef, variables, target, index):
    """Re-express ``coef`` over the variable tuple ``target``."""
    if tuple(variables) == tuple(target):
        return coef
    out = np.zeros(coef.shape[:5] + (1 + len(target),))
    out[..., 0] = coef[..., 0]
    if variables:
        cols = [1 + index[v] for v in variables]
        out[..., cols] = coef[..., 1:]
    return out


def _union(va, vb):
    if va == vb or not vb:
        return va
    if not va:
        return vb
    seen = set(va)
    return va + tuple(v for v in vb if v not in seen)


def _at_bound(F, ax, bound):
    """Substitute the variable on axis ``ax`` by a number or another variable."""
    if isinstance(bound, str):
        bx = _AXIS[bound]
        if bx == ax:
            raise InvalidBound("bound may not be the integration variable")
        n = F.shape[ax]
        shape = list(F.shape)
        shape[ax] = 1
        shape[bx] = F.shape[bx] + n - 1
        out = np.zeros(shape)
        for k in range(n):
            src = [slice(None)] * 6
            src[ax] = slice(k, k + 1)
            dst = [slice(None)] * 6
            dst[ax] = slice(0, 1)
            dst[bx] = slice(k, k + F.shape[bx])
            out[tuple(dst)] += F[tuple(src)]
        return out
    powers = float(bound) ** np.arange(F.shape[ax])
    return np.expand_dims(np.tensordot(F, powers, axes=([ax], [0])), ax)


# ---------------------------------------------------------------------------
# matrix polynomials
# ---------------------------------------------------------------------------

class MatPoly:
    """Immutable matrix of polynomials in (s, theta, eta) on a domain [a, b]."""

    __slots__ = ("_coef", "_vars", "_index", "domain")

    def __init__(self, coef, variables=(), domain=(0.0, 1.0), _canonical=False):
        coef = np.asarray(coef, dtype=float)
        variables = tuple(variables)
        if coef.ndim != 6 or coef.shape[5] != 1 + len(variables):
            raise ValueError("coefficient array must have shape (r, c, Ds, Dt, De, 1+nvars)")
        if len(set(variables)) != len(variables):
            raise ValueError("duplicate decision variable names")
        if not _canonical:
            coef, variables = _canonicalize(coef, variables)
        coef.setflags(write=False)
        self._coef = coef
        self._vars = variables
        self._index = {v: i for i, v in enumerate(variables)}
        a, b = domain
        self.domain = (float(a), float(b))

    # -- constructors -------------------------------------------------------

    @classmethod
    def _make(cls, coef, variables, domain):
        return cls(coef, variables, domain)

    @classmethod
    def constant(cls, matrix, domain=(0.0, 1.0)):
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        return cls(m[:, :, None, None, None, None], (), domain)

    @classmethod
    def zeros(cls, rows, cols, domain=(0.0, 1.0)):
        return cls(np.zeros((rows, cols, 1, 1, 1, 1)), (), domain, _canonical=True)

    @classmethod
    def eye(cls, n, domain=(0.0, 1.0)):
        return cls.constant(np.eye(n), domain) if n else cls.zeros(0, 0, domain)

    @classmethod
    def from_terms(cls, terms, shape=None, domain=(0.0, 1.0)):
        """Build from ``{(ds, dt, de): matrix}``."""
        terms = {tuple(Monomial(k).exponents) if not isinstance(k, Monomial) else k.exponents:
                 np.atleast_2d(np.asarray(v, dtype=float)) for k, v in terms.items()}
        if shape is None:
            if not terms:
                raise ValueError("shape required for an empty term list")
            shape = next(iter(terms.values())).shape
        degs = [1 + max([k[i] for k in terms] or [0]) for i in range(3)]
        coef = np.zeros(tuple(shape) + tuple(degs) + (1,))
        for (i, j, k), m in terms.items():
            coef[:, :, i, j, k, 0] += m
        return cls(coef, (), domain)

    @classmethod
    def monomial(cls, var="s", power=1, domain=(0.0, 1.0)):
        exps = [0, 0, 0]
        exps[_AXIS[_var(var)] - 2] = power
        return cls.from_terms({tuple(exps): [[1.0]]}, domain=domain)

    @classmethod
    def variable_matrix(cls, names, domain=(0.0, 1.0)):
        """Matrix whose entry ``(i, j)`` is the decision variable ``names[i][j]``.

        Entries may repeat a name (symmetric matrices) or be ``None`` for zero.
        """
        rows = len(names)
        cols = len(names[0]) if rows else 0
        order = []
        index = {}
        for row in names:
            for nm in row:
                if nm is not None and nm not in index:
                    index[nm] = len(order)
                    order.append(nm)
        coef = np.zeros((rows, cols, 1, 1, 1, 1 + len(order)))
        for i, row in enumerate(names):
            for j, nm in enumerate(row):
                if nm is not None:
                    coef[i, j, 0, 0, 0, 1 + index[nm]] = 1.0
        return cls(coef, tuple(order), domain)

    @classmethod
    def symmetric_variable(cls, n, prefix, domain=(0.0, 1.0)):
        """Symmetric ``n x n`` matrix of variables ``prefix[i,j]`` (i <= j)."""
        names = [[symmetric_entry_name(prefix, min(i, j), max(i, j)) for j in range(n)]
                 for i in range(n)]
        return cls.variable_matrix(names, domain)

    @classmethod
    def from_affine(cls, entries, domain=(0.0, 1.0)):
        """Constant matrix from a nested list of AffineScalar / numbers."""
        rows = len(entries)
        cols = len(entries[0]) if rows else 0
        order = []
        index = {}
        for row in entries:
            for e in row:
                if isinstance(e, AffineScalar):
                    for k in e.terms:
                        if k not in index:
                            index[k] = len(order)
                            order.append(k)
        coef = np.zeros((rows, cols, 1, 1, 1, 1 + len(order)))
        for i, row in enumerate(entries):
            for j, e in enumerate(row):
                if isinstance(e, AffineScalar):
                    coef[i, j, 0, 0, 0, 0] = e.constant
                    for k, v in e.terms.items():
                        coef[i, j, 0, 0, 0, 1 + index[k]] = v
                else:
                    coef[i, j, 0, 0, 0, 0] = float(e)
        return cls(coef, tuple(order), domain)

    @classmethod
    def block(cls, blocks, domain=None):
        """Assemble a block matrix from a nested list of MatPoly."""
        flat = [b for row in blocks for b in row]
        if domain is None:
            domain = flat[0].domain
        variables = ()
        for b in flat:
            if b.domain != tuple(domain):
                raise DomainMismatch("block entries live on different domains")
            variables = _union(variables, b._vars)
        index = {v: i for i, v in enumerate(variables)}
        degs = [max(b._coef.shape[2 + i] for b in flat) for i in range(3)]
        rows_out = []
        for row in blocks:
            heights = {b.rows for b in row}
            if len(heights) != 1:
                raise ShapeMismatch("blocks in one row must share a height")
            parts = [_pad(_with_vars(b._coef, b._vars, variables, index), degs) for b in row]
            rows_out.append(np.concatenate(parts, axis=1))
        widths = {r.shape[1] for r in rows_out}
        if len(widths) != 1:
            raise ShapeMismatch("block rows must share a width")
        return cls(np.concatenate(rows_out, axis=0), variables, domain)

    # -- basic properties ---------------------------------------------------

    @property
    def coef(self):
        return self._coef

    @property
    def variables(self):
        return self._vars

    @property
    def shape(self):
        return self._coef.shape[:2]

    @property
    def rows(self):
        return self._coef.shape[0]

    @property
    def cols(self):
        return self._coef.shape[1]

    @property
    def is_data(self):
        return not self._vars

    def degree(self, var):
        """Highest exponent of ``var`` that carries a nonzero coefficient."""
        return self._coef.shape[_AXIS[_var(var)]] - 1

    @property
    def total_degree(self):
        idx = np.argwhere(np.any(self._coef != 0.0, axis=(0, 1, 5)))
        return int(idx.sum(axis=1).max()) if idx.size else 0

    def is_zero(self):
        return not np.any(self._coef)

    def max_abs(self):
        return float(np.abs(self._coef).max()) if self._coef.size else 0.0

    def __repr__(self):
        return "MatPoly(%dx%d, deg=(%d,%d,%d), nvars=%d, domain=%s)" % (
            self.rows, self.cols, self.degree("s"), self.degree("theta"),
            self.degree("eta"), len(self._vars), self.domain)

    # -- entries ------------------------------------------------------------

    def __getitem__(self, key):
        if not isinstance(key, tuple) or len(key) != 2:
            raise IndexError("MatPoly indexing needs a (row, col) pair")
        r, c = key
        r = slice(r, r + 1) if isinstance(r, numbers.Integral) else r
        c = slice(c, c + 1) if isinstance(c, numbers.Integral) else c
        out = self._coef[r][:, c]
        cls = Poly if out.shape[:2] == (1, 1) else MatPoly
        return cls(out, self._vars, self.domain)

    def entry(self, i, j):
        """Entry ``(i, j)`` as a :class:`Poly`."""
        return Poly(self._coef[i:i + 1, j:j + 1], self._vars, self.domain)

    def coefficients(self):
        """Yield ``(i, j, Monomial, AffineScalar)`` for every nonzero coefficient."""
        c = self._coef
        for idx in np.argwhere(np.any(c != 0.0, axis=5)):
            i, j, ds, dt, de = (int(x) for x in idx)
            vec = c[i, j, ds, dt, de]
            terms = {self._vars[k]: vec[1 + k] for k in np.nonzero(vec[1:])[0]}
            yield i, j, Monomial((ds, dt, de)), AffineScalar(vec[0], terms)

    def affine_rows(self):
        """All coefficients flattened: ``(constants, matrix over variables)``."""
        flat = self._coef.reshape(-1, self._coef.shape[5])
        return flat[:, 0], flat[:, 1:]

    # -- algebra ------------------------------------------------------------

    def _check_domain(self, other):
        if self.domain != other.domain:
            raise DomainMismatch("domains %s and %s differ" % (self.domain, other.domain))

    def _aligned(self, other):
        variables = _union(self._vars, other._vars)
        index = {v: i for i, v in enumerate(variables)}
        degs = [max(x, y) for x, y in zip(self._coef.shape[2:5], other._coef.shape[2:5])]
        a = _pad(_with_vars(self._coef, self._vars, variables, index), degs)
        b = _pad(_with_vars(other._coef, other._vars, variables, index), degs)
        return a, b, variables

    def _result(self, other, coef, variables):
        cls = Poly if (isinstance(self, Poly) and isinstance(other, Poly)) else MatPoly
        if cls is Poly and coef.shape[:2] != (1, 1):
            cls = MatPoly
        return cls(coef, variables, self.domain)

    def __add__(self, other):
        if isinstance(other, (numbers.Real, AffineScalar)):
            other = _scalar_like(other, self)
        if not isinstance(other, MatPoly):
            return NotImplemented
        self._check_domain(other)
        if self.shape != other.shape:
            raise ShapeMismatch("cannot add %s and %s" % (self.shape, other.shape))
        a, b, variables = self._aligned(other)
        return self._result(other, a + b, variables)

    def __radd__(self, other):
        return self.__add__(other)

    def __neg__(self):
        return type(self)(-self._coef, self._vars, self.domain, _canonical=True)

    def __sub__(self, other):
        if isinstance(other, (numbers.Real, AffineScalar)):
            other = _scalar_like(other, self)
        if not isinstance(other, MatPoly):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, factor):
        """Multiply every entry by a real number or an AffineScalar."""
        if isinstance(factor, AffineScalar):
            if factor.is_constant:
                factor = factor.constant
            else:
                return self.hadamard_scalar(Poly.from_affine([[factor]], self.domain))
        return type(self)(self._coef * float(factor), self._vars, self.domain)

    def __mul__(self, other):
        if isinstance(other, (numbers.Real, AffineScalar)):
            return self.scale(other)
        if isinstance(other, MatPoly):
            if other.shape == (1, 1):
                return self.hadamard_scalar(other)
            if self.shape == (1, 1):
                return other.hadamard_scalar(self)
            raise ShapeMismatch("use @ for matrix products")
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (numbers.Real, AffineScalar)):
            return self.scale(other)
        return NotImplemented

    def hadamard_scalar(self, p):
        """Multiply every entry by the 1x1 polynomial ``p``."""
        self._check_domain(p)
        if p.shape != (1, 1):
            raise ShapeMismatch("scalar factor must be 1x1")
        if self._vars and p._vars:
            raise BilinearProduct("both factors carry decision variables")
        if p._vars:
            data, other = self, p
            coef = _convolve(data._coef, other._coef, lambda d, y: d[:, :, None, None, None, None] * y[0, 0])
            variables = other._vars
        else:
            coef = _convolve(p._coef, self._coef, lambda d, y: d[0, 0] * y)
            variables = self._vars
        return self._result(p, coef, variables)

    def __matmul__(self, other):
        if not isinstance(other, MatPoly):
            return NotImplemented
        self._check_domain(other)
        if self.cols != other.rows:
            raise ShapeMismatch("cannot multiply %s by %s" % (self.shape, other.shape))
        if self._vars and other._vars:
            raise BilinearProduct("both factors carry decision variables")
        if self._vars:
            coef = _convolve(other._coef, self._coef,
                             lambda d, y: np.einsum("rlabck,lq->rqabck", y, d), data_first=False)
            variables = self._vars
        else:
            coef = _convolve(self._coef, other._coef,
                             lambda d, y: np.tensordot(d, y, axes=(1, 0)))
            variables = other._vars
        return self._result(other, coef, variables)

    @property
    def T(self):
        return type(self)(np.swapaxes(self._coef, 0, 1), self._vars, self.domain, _canonical=True)

    def transpose(self):
        return self.T

    def integrate(self, var, lower, upper):
        """Definite integral over ``var`` between two bounds.

        A bound is a number, ``"a"`` / ``"b"`` (the domain ends), or one of the
        other two polynomial variables.
        """
        var = _var(var)
        ax = _AXIS[var]
        lo, hi = (self._bound(x, var) for x in (lower, upper))
        c = self._coef
        n = c.shape[ax]
        shape = list(c.shape)
        shape[ax] = n + 1
        F = np.zeros(shape)
        scale = 1.0 / np.arange(1, n + 1)
        bshape = [1] * 6
        bshape[ax] = n
        dst = [slice(None)] * 6
        dst[ax] = slice(1, n + 1)
        F[tuple(dst)] = c * scale.reshape(bshape)
        up = _at_bound(F, ax, hi)
        dn = _at_bound(F, ax, lo)
        degs = [max(x, y) for x, y in zip(up.shape[2:5], dn.shape[2:5])]
        return type(self)(_pad(up, degs) - _pad(dn, degs), self._vars, self.domain)

    def diff(self, var="s"):
        """Partial derivative with respect to ``var``."""
        var = _var(var)
        ax = _AXIS[var]
        c = self._coef
        n = c.shape[ax]
        if n == 1:
            return type(self)(np.zeros_like(c), self._vars, self.domain)
        bshape = [1] * 6
        bshape[ax] = n - 1
        src = [slice(None)] * 6
        src[ax] = slice(1, n)
        return type(self)(c[tuple(src)] * np.arange(1, n).reshape(bshape), self._vars, self.domain)

    def _bound(self, bound, var):
        if isinstance(bound, str):
            if bound == "a":
                return self.domain[0]
            if bound == "b":
                return self.domain[1]
            name = _var(bound)
            if name == var:
                raise InvalidBound("bound %r equals the integration variable" % bound)
            return name
        if isinstance(bound, numbers.Real):
            return float(bound)
        raise InvalidBound("unsupported bound %r" % (bound,))

    def substitute(self, var, value):
        """Replace ``var`` by a number, ``"a"``/``"b"`` or another variable."""
        var = _var(var)
        ax = _AXIS[var]
        bound = self._bound(value, var)
        return type(self)(_at_bound(self._coef, ax, bound), self._vars, self.domain)

    def rename(self, mapping):
        """Permute the polynomial variables, e.g. ``{"s": "eta", "eta": "s"}``."""
        full = {v: v for v in VARIABLES}
        for k, v in mapping.items():
            full[_var(k)] = _var(v)
        if sorted(full.values()) != sorted(VARIABLES):
            raise ValueError("variable mapping must be a bijection on (s, theta, eta)")
        src = [_AXIS[v] for v in VARIABLES]
        dst = [_AXIS[full[v]] for v in VARIABLES]
        return type(self)(np.moveaxis(self._coef, src, dst), self._vars, self.domain, _canonical=True)

    # -- evaluation ---------------------------------------------------------

    def _reduce_vars(self, assignment):
        c = self._coef
        if not self._vars:
            return c[..., 0]
        vec = np.empty(1 + len(self._vars))
        vec[0] = 1.0
        for i, v in enumerate(self._vars):
            if assignment is None or v not in assignment:
                raise UnassignedVariable(v)
            vec[1 + i] = float(assignment[v])
        return c @ vec

    def assign(self, assignment):
        """Substitute numeric values for all decision variables."""
        return type(self)(self._reduce_vars(assignment)[..., None], (), self.domain)

    def evaluate(self, point=None, assignment=None):
        """Numeric ``(rows, cols)`` value at ``point = {"s": .., "theta": ..}``."""
        point = {_var(k): v for k, v in (point or {}).items()}
        out = self._reduce_vars(assignment)
        for var in reversed(VARIABLES):
            ax = _AXIS[var]
            n = out.shape[ax]
            if n == 1:
                out = out[(slice(None),) * ax + (0,)]
                continue
            if var not in point:
                raise UnassignedVariable(var)
            powers = float(point[var]) ** np.arange(n)
            out = np.tensordot(out, powers, axes=([ax], [0]))
        return out

    def at(self, s=None, theta=None, eta=None, assignment=None):
        """Vectorized evaluation; returns an array of shape ``(*points, rows, cols)``."""
        c = self._reduce_vars(assignment)
        pts = {"s": s, "theta": theta, "eta": eta}
        arrays = [np.asarray(x, dtype=float) for x in pts.values() if x is not None]
        bshape = np.broadcast_shapes(*[a.shape for a in arrays]) if arrays else ()
        out = np.moveaxis(c, (0, 1), (-2, -1))          # (Ds, Dt, De, r, c)
        mats = []
        for var in VARIABLES:
            n = c.shape[_AXIS[var]]
            x = pts[var]
            if n > 1 and x is None:
                raise UnassignedVariable(var)
            if n == 1:
                mats.append(np.ones(bshape + (1,)))
            else:
                xv = np.broadcast_to(np.asarray(x, dtype=float), bshape)
                mats.append(xv[..., None] ** np.arange(n))
        return np.einsum("...i,...j,...k,ijkrc->...rc", mats[0], mats[1], mats[2], out)

    def equals(self, other, tol=None):
        if not isinstance(other, MatPoly) or self.shape != other.shape or self.domain != other.domain:
            return False
        a, b, _ = self._aligned(other)
        if tol is None:
            tol = coef_tol(max(self.max_abs(), other.max_abs()))
        return bool(np.all(np.abs(a - b) <= tol)) if a.size else True

    def __eq__(self, other):
        return self.equals(other)

    __hash__ = None


class Poly(MatPoly):
    """Scalar polynomial: a 1x1 :class:`MatPoly`."""

    __slots__ = ()

    def __init__(self, coef, variables=(), domain=(0.0, 1.0), _canonical=False):
        super().__init__(coef, variables, domain, _canonical)
        if self.shape != (1, 1):
            raise ShapeMismatch("Poly must be 1x1, got %s" % (self.shape,))

    @classmethod
    def from_dict(cls, coeffs, domain=(0.0, 1.0)):
        """Build from ``{Monomial or exponent triple: number or AffineScalar}``."""
        return cls._from_items(coeffs.items(), domain)

    @classmethod
    def _from_items(cls, items, domain):
        items = [(k.exponents if isinstance(k, Monomial) else Monomial(k).exponents,
                  v if isinstance(v, AffineScalar) else AffineScalar(v)) for k, v in items]
        order, index = [], {}
        for _, v in items:
            for name in v.terms:
                if name not in index:
                    index[name] = len(order)
                    order.append(name)
        degs = [1 + max([k[i] for k, _ in items] or [0]) for i in range(3)]
        coef = np.zeros((1, 1) + tuple(degs) + (1 + len(order),))
        for (i, j, k), v in items:
            coef[0, 0, i, j, k, 0] += v.constant
            for name, x in v.terms.items():
                coef[0, 0, i, j, k, 1 + index[name]] += x
        return cls(coef, tuple(order), domain)

    @classmethod
    def constant(cls, value, domain=(0.0, 1.0)):
        if isinstance(value, AffineScalar):
            return cls.from_dict({(0, 0, 0): value}, domain)
        return cls(np.full((1, 1, 1, 1, 1, 1), float(value)), (), domain)

    @classmethod
    def var(cls, name="s", domain=(0.0, 1.0)):
        exps = [0, 0, 0]
        exps[_AXIS[_var(name)] - 2] = 1
        return cls.from_dict({tuple(exps): 1.0}, domain)

    @classmethod
    def from_affine(cls, entries, domain=(0.0, 1.0)):
        m = MatPoly.from_affine(entries, domain)
        return cls(m._coef, m._vars, domain, _canonical=True)

    @property
    def coeffs(self):
        """Mapping Monomial -> AffineScalar of the nonzero coefficients."""
        return {m: v for _, _, m, v in self.coefficients()}

    def evaluate(self, point=None, assignment=None):
        return float(super().evaluate(point, assignment)[0, 0])

    def __repr__(self):
        terms = sorted(self.coeffs.items())
        if not terms:
            return "Poly(0)"
        return "Poly(" + " + ".join("(%r)*%s" % (v, m) for m, v in terms) + ")"


def _scalar_like(value, template):
    """Broadcast a scalar to the shape of ``template`` (identity times value)."""
    if template.shape == (1, 1):
        return Poly.constant(value, template.domain)
    raise ShapeMismatch("scalars can only be added to 1x1 polynomials")


def _convolve(data, other, contract, data_first=True):
    """Polynomial product: sum over the nonzero monomials of the data factor."""
    d = data[..., 0]
    ds, dt, de = d.shape[2:5]
    ys, yt, ye = other.shape[2:5]
    probe = contract(d[:, :, 0, 0, 0], other)
    out = np.zeros(probe.shape[:2] + (ds + ys - 1, dt + yt - 1, de + ye - 1) + probe.shape[5:])
    if d.size == 0 or other.size == 0:
        return out
    for i, j, k in np.argwhere(np.any(d != 0.0, axis=(0, 1))):
        out[:, :, i:i + ys, j:j + yt, k:k + ye] += contract(d[:, :, i, j, k], other)
    return out


def symmetric_entry_name(prefix, i, j):
    return "%s[%d,%d]" % (prefix, i, j)


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------

def poly_add(p, q):
    return p + q


def poly_mul(p, q):
    return p @ q if p.shape == (1, 1) and q.shape == (1, 1) else p * q


def integrate(p, var, lower, upper):
    return p.integrate(var, lower, upper)


def rename(p, mapping):
    return p.rename(mapping)


def evaluate(p, point=None, assignment=None):
    return p.evaluate(point, assignment)


def mat_mul(m, n):
    return m @ n


def mat_add(m, n):
    return m + n


def mat_transpose(m):
    return m.T


def mat_scale(m, factor):
    return m.scale(factor)
