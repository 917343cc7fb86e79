"""Coupled ODE-PDE systems and their representation on the fundamental state.

The distributed state is ``z_p = (z1, z2, z3)`` with ``z1 in L2^n1``,
``z2 in W^{1,n2}`` and ``z3 in W^{2,n3}``.  Its boundary values
``z_b = (z2(a), z2(b), z3(a), z3(b), z3s(a), z3s(b))`` obey
``B z_b = B1 x + B2 w``.  Writing everything in terms of the fundamental state
``z_f = (z1, z2s, z3ss)``, which carries no boundary constraint, turns every
system map into a :class:`~piegain.pqrs.PqrsOperator` acting on
``(w_r, z_f)`` with ``w_r = (w, x)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DimMismatch, ShapeMismatch, SingularBT
from .pqrs import PqrsOperator
from .symbolic import MatPoly

SINGULAR_TOL = 1e-10


def as_matpoly(value, shape, domain):
    """Coerce ``None`` / array / MatPoly to a MatPoly in ``s``.

    Arrays of the wrong size are kept as they are so that :func:`validate`
    can report them.
    """
    if value is None:
        return MatPoly.zeros(*shape, domain=domain)
    if isinstance(value, MatPoly):
        return value
    arr = np.asarray(value, dtype=float)
    if arr.size == shape[0] * shape[1]:
        arr = arr.reshape(shape)
    return MatPoly.constant(np.atleast_2d(arr), domain)


_MATRIX_FIELDS = {
    # name: (rows, cols) as functions of the dimension dict; True => polynomial
    "A": (lambda d: (d["nx"], d["nx"]), False),
    "B_wo": (lambda d: (d["nx"], d["nw"]), False),
    "C": (lambda d: (d["ny"], d["nx"]), False),
    "D_w": (lambda d: (d["ny"], d["nw"]), False),
    "E": (lambda d: (d["nz"], d["nx"]), True),
    "A0": (lambda d: (d["nz"], d["nz"]), True),
    "A1": (lambda d: (d["nz"], d["n2"] + d["n3"]), True),
    "A2": (lambda d: (d["nz"], d["n3"]), True),
    "B_wp": (lambda d: (d["nz"], d["nw"]), True),
    "C1": (lambda d: (d["ny"], d["nb"]), False),
    "Ca": (lambda d: (d["ny"], d["nz"]), True),
    "Cb": (lambda d: (d["ny"], d["n2"] + d["n3"]), True),
    "E1": (lambda d: (d["nx"], d["nb"]), False),
    "Ea": (lambda d: (d["nx"], d["nz"]), True),
    "Eb": (lambda d: (d["nx"], d["n2"] + d["n3"]), True),
    "B": (lambda d: (d["nc"], d["nb"]), False),
    "B1": (lambda d: (d["nc"], d["nx"]), False),
    "B2": (lambda d: (d["nc"], d["nw"]), False),
}
MATRIX_FIELDS = tuple(_MATRIX_FIELDS)
POLY_FIELDS = tuple(k for k, (_, poly) in _MATRIX_FIELDS.items() if poly)


@dataclass(frozen=True)
class OdePdeSystem:
    """All data of a coupled ODE-PDE system.

    Construct with :meth:`create`, which fills omitted blocks with zeros of
    the implied shape; the raw constructor stores whatever it is given so
    that :func:`validate` can report malformed input.
    """

    n1: int
    n2: int
    n3: int
    nx: int
    nw: int
    ny: int
    domain: tuple = (0.0, 1.0)
    A: np.ndarray = None
    B_wo: np.ndarray = None
    C: np.ndarray = None
    D_w: np.ndarray = None
    E: MatPoly = None
    A0: MatPoly = None
    A1: MatPoly = None
    A2: MatPoly = None
    B_wp: MatPoly = None
    C1: np.ndarray = None
    Ca: MatPoly = None
    Cb: MatPoly = None
    E1: np.ndarray = None
    Ea: MatPoly = None
    Eb: MatPoly = None
    B: np.ndarray = None
    B1: np.ndarray = None
    B2: np.ndarray = None
    name: str = field(default="", compare=False)

    @property
    def nz(self):
        return self.n1 + self.n2 + self.n3

    @property
    def nb(self):
        """Length of the boundary vector ``z_b``."""
        return 2 * self.n2 + 4 * self.n3

    @property
    def nc(self):
        """Number of independent boundary conditions."""
        return self.n2 + 2 * self.n3

    @property
    def dims(self):
        return {"n1": self.n1, "n2": self.n2, "n3": self.n3, "nx": self.nx, "nw": self.nw,
                "ny": self.ny, "nz": self.nz, "nb": self.nb, "nc": self.nc}

    def expected_shape(self, name):
        return _MATRIX_FIELDS[name][0](self.dims)

    @classmethod
    def create(cls, n1=0, n2=0, n3=0, nx=0, nw=0, ny=0, domain=(0.0, 1.0), name="", **mats):
        unknown = set(mats) - set(_MATRIX_FIELDS)
        if unknown:
            raise TypeError("unknown system blocks: %s" % sorted(unknown))
        domain = (float(domain[0]), float(domain[1]))
        sys = cls(int(n1), int(n2), int(n3), int(nx), int(nw), int(ny), domain, name=name)
        kw = {}
        for key, (shape_fn, poly) in _MATRIX_FIELDS.items():
            shape = shape_fn(sys.dims)
            val = mats.get(key)
            if poly:
                kw[key] = as_matpoly(val, shape, domain)
            elif val is None:
                kw[key] = np.zeros(shape)
            else:
                arr = np.asarray(val, dtype=float)
                if arr.ndim < 2:
                    arr = arr.reshape(shape) if arr.size == shape[0] * shape[1] else np.atleast_2d(arr)
                kw[key] = arr
        return replace(sys, **kw)

    def with_blocks(self, **mats):
        """Copy with some blocks replaced (dimensions unchanged)."""
        current = {k: getattr(self, k) for k in _MATRIX_FIELDS}
        current.update(mats)
        return OdePdeSystem.create(self.n1, self.n2, self.n3, self.nx, self.nw, self.ny,
                                   self.domain, self.name, **current)

    def equals(self, other, tol=1e-12):
        if not isinstance(other, OdePdeSystem):
            return False
        if self.dims != other.dims or tuple(self.domain) != tuple(other.domain):
            return False
        for key in _MATRIX_FIELDS:
            u, v = getattr(self, key), getattr(other, key)
            if isinstance(u, MatPoly) or isinstance(v, MatPoly):
                if not as_matpoly(u, u.shape, self.domain).equals(
                        as_matpoly(v, v.shape, self.domain), tol):
                    return False
            elif np.shape(u) != np.shape(v) or not np.allclose(u, v, rtol=0, atol=tol):
                return False
        return True


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self):
        return "%s: %s" % (self.kind, self.message)


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple
    bt_condition: float = float("nan")

    @property
    def ok(self):
        return not self.violations

    def kinds(self):
        return [v.kind for v in self.violations]

    def __str__(self):
        if self.ok:
            return "valid (cond(BT) = %.3g)" % self.bt_condition
        return "\n".join(str(v) for v in self.violations)


def validate(sys):
    """Check shapes, domain, boundary rank and invertibility of ``BT``.

    Never raises for malformed systems; all problems are returned in the report.
    """
    out = []
    for nm in ("n1", "n2", "n3", "nx", "nw", "ny"):
        v = getattr(sys, nm)
        if not isinstance(v, (int, np.integer)) or v < 0:
            out.append(Violation("InvalidDimension", "%s must be a non-negative integer" % nm))
    if out:
        return ValidationReport(tuple(out))
    a, b = sys.domain
    if not (np.isfinite(a) and np.isfinite(b) and a < b):
        out.append(Violation("InvalidDomain", "domain must satisfy a < b, got %s" % (sys.domain,)))
    for key, (shape_fn, poly) in _MATRIX_FIELDS.items():
        val = getattr(sys, key)
        shape = shape_fn(sys.dims)
        if val is None:
            out.append(Violation("MissingBlock", "%s is missing (expected %dx%d)" % ((key,) + shape)))
            continue
        got = val.shape if isinstance(val, MatPoly) else np.shape(val)
        if tuple(got) != shape:
            out.append(Violation("ShapeMismatch", "%s has shape %s, expected %s" % (key, tuple(got), shape)))
            continue
        if isinstance(val, MatPoly):
            if val.domain != tuple(sys.domain):
                out.append(Violation("DomainMismatch", "%s lives on %s" % (key, val.domain)))
            if val.degree("theta") or val.degree("eta") or not val.is_data:
                out.append(Violation("InvalidPolynomial", "%s must be a numeric polynomial in s" % key))
        elif poly is False and not np.all(np.isfinite(val)):
            out.append(Violation("NonFinite", "%s has non-finite entries" % key))
    cond = float("nan")
    if not out and sys.nc:
        B = np.asarray(sys.B, dtype=float)
        rank = np.linalg.matrix_rank(B)
        if rank < sys.nc:
            out.append(Violation("RankDeficient", "B has row rank %d, needs %d" % (rank, sys.nc)))
        else:
            BT = B @ boundary_T(sys)
            cond = float(np.linalg.cond(BT))
            if _bt_singular(BT):
                out.append(Violation("SingularBT", "BT is numerically singular (cond %.3g)" % cond))
    elif not out:
        cond = 1.0
    return ValidationReport(tuple(out), cond)


def _bt_singular(BT):
    sv = np.linalg.svd(BT, compute_uv=False)
    return sv.size and sv[-1] <= SINGULAR_TOL * sv[0]


def check_valid(sys):
    report = validate(sys)
    if not report.ok:
        kinds = report.kinds()
        if "SingularBT" in kinds:
            raise SingularBT(str(report))
        raise ShapeMismatch(str(report))
    return report


# ---------------------------------------------------------------------------
# fundamental-state maps
# ---------------------------------------------------------------------------

def _blocks(rows, cols, entries):
    """Dense block matrix; ``entries`` maps ``(i, j)`` to a constant multiple of identity or an array."""
    out = np.zeros((sum(rows), sum(cols)))
    r0 = np.concatenate([[0], np.cumsum(rows)]).astype(int)
    c0 = np.concatenate([[0], np.cumsum(cols)]).astype(int)
    for (i, j), val in entries.items():
        h, w = rows[i], cols[j]
        if h == 0 or w == 0:
            continue
        out[r0[i]:r0[i] + h, c0[j]:c0[j] + w] = val * np.eye(h, w) if np.isscalar(val) else val
    return out


def boundary_T(sys):
    """Constant map from core boundary values ``(z2(a), z3(a), z3s(a))`` to ``z_b``."""
    n2, n3 = sys.n2, sys.n3
    a, b = sys.domain
    rows = (n2, n2, n3, n3, n3, n3)
    return _blocks(rows, (n2, n3, n3), {
        (0, 0): 1.0, (1, 0): 1.0, (2, 1): 1.0, (3, 1): 1.0, (3, 2): b - a, (4, 2): 1.0, (5, 2): 1.0})


def _lin(c0, c1, domain, var="s"):
    """``c0 + c1 * var`` as a MatPoly (``c0``, ``c1`` arrays of equal shape)."""
    e = {"s": (1, 0, 0), "theta": (0, 1, 0)}[var]
    return MatPoly.from_terms({(0, 0, 0): c0, e: c1}, shape=c0.shape, domain=domain)


@dataclass(frozen=True)
class FundamentalMaps:
    """Maps of ``(w_r, z_f)`` to the primal state and its first derivatives."""

    H0: MatPoly
    H1: MatPoly
    G0: MatPoly
    G1: MatPoly
    G2: MatPoly
    G3: MatPoly
    G4: MatPoly
    G5: MatPoly
    K: MatPoly
    V: MatPoly
    T: np.ndarray
    Q: MatPoly
    BT_inv: np.ndarray
    bt_condition: float

    def primal(self, m, domain):
        """PQRS operator ``(w_r, z_f) -> (-, z_p)`` (no finite output)."""
        return PqrsOperator.from_parts((m, self.G0.cols), (0, self.G0.rows), domain,
                                       Q2=self.H0, S=self.G0, R1=self.G1, R2=self.G2)

    def derivative(self, m, domain):
        """PQRS operator ``(w_r, z_f) -> (-, (z2s, z3s))``."""
        return PqrsOperator.from_parts((m, self.G3.cols), (0, self.G3.rows), domain,
                                       Q2=self.H1, S=self.G3, R1=self.G4, R2=self.G5)


def fundamental_maps(sys):
    """The maps ``H0, H1, G0..G5`` for a valid system.

    ``z_p(s) = H0(s) w_r + G0 z_f(s) + int_a^s G1 z_f + int_s^b G2 z_f`` and
    likewise ``(z2s, z3s)`` with ``H1, G3, G4, G5``.
    """
    dom = tuple(sys.domain)
    a, b = dom
    n1, n2, n3 = sys.n1, sys.n2, sys.n3
    nz, nc, nb = sys.nz, sys.nc, sys.nb
    m = sys.nw + sys.nx
    zrows = (n1, n2, n3)
    drows = (n2, n3)
    core = (n2, n3, n3)

    T = boundary_T(sys)
    K0 = _blocks(zrows, core, {(1, 0): 1.0, (2, 1): 1.0, (2, 2): -a})
    K1 = _blocks(zrows, core, {(2, 2): 1.0})
    K = _lin(K0, K1, dom)
    Vm = _blocks(drows, core, {(1, 2): 1.0})
    V = MatPoly.constant(Vm, dom)
    bq = (n2, n2, n3, n3, n3, n3)
    Q0 = _blocks(bq, zrows, {(1, 1): 1.0, (3, 2): b, (5, 2): 1.0})
    Qt = _blocks(bq, zrows, {(3, 2): -1.0})
    Q = _lin(Q0, Qt, dom, "theta")           # depends on theta only

    if nc:
        B = np.asarray(sys.B, dtype=float)
        BT = B @ T
        if _bt_singular(BT):
            raise SingularBT("BT is numerically singular (cond %.3g)" % np.linalg.cond(BT))
        cond = float(np.linalg.cond(BT))
        BT_inv = np.linalg.solve(BT, np.eye(nc))
        W = BT_inv @ np.hstack([sys.B2, sys.B1])              # nc x m
        BQ = MatPoly.constant(BT_inv @ B, dom) @ Q           # nc x nz, in theta
    else:
        cond = 1.0
        BT_inv = np.zeros((0, 0))
        W = np.zeros((0, m))
        BQ = MatPoly.zeros(0, nz, dom)

    Wp = MatPoly.constant(W, dom) if W.size else MatPoly.zeros(nc, m, dom)
    H0 = K @ Wp
    H1 = V @ Wp
    G2 = -(K @ BQ)
    G5 = -(V @ BQ)
    L0 = _blocks(zrows, zrows, {(1, 1): 1.0, (2, 2): 0.0})
    Ls = _blocks(zrows, zrows, {(2, 2): 1.0})
    L = MatPoly.from_terms({(0, 0, 0): L0, (1, 0, 0): Ls, (0, 1, 0): -Ls}, shape=(nz, nz), domain=dom)
    G1 = L + G2
    G4 = MatPoly.constant(_blocks(drows, zrows, {(1, 2): 1.0}), dom) + G5
    G0 = MatPoly.constant(_blocks(zrows, zrows, {(0, 0): 1.0}), dom)
    G3 = MatPoly.constant(_blocks(drows, zrows, {(0, 1): 1.0}), dom)
    return FundamentalMaps(H0, H1, G0, G1, G2, G3, G4, G5, K, V, T, Q, BT_inv, cond)


def boundary_operator(sys, maps=None):
    """PQRS operator ``(w_r, z_f) -> z_b`` (finite output only)."""
    maps = maps or fundamental_maps(sys)
    dom = tuple(sys.domain)
    m = sys.nw + sys.nx
    if sys.nc:
        TBi = maps.T @ maps.BT_inv
        P = TBi @ np.hstack([sys.B2, sys.B1])
        Qs = maps.Q.rename({"theta": "s", "s": "theta"})
        Q1 = Qs - MatPoly.constant(TBi @ np.asarray(sys.B, dtype=float), dom) @ Qs
    else:
        P = np.zeros((sys.nb, m))
        Q1 = MatPoly.zeros(sys.nb, sys.nz, dom)
    return PqrsOperator.from_parts((m, sys.nz), (sys.nb, 0), dom, P=P, Q1=Q1)


# ---------------------------------------------------------------------------
# system operators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SystemOperators:
    PA: PqrsOperator
    PB: PqrsOperator
    PC: PqrsOperator
    PD: PqrsOperator
    PI: PqrsOperator
    P0: PqrsOperator
    maps: FundamentalMaps
    Pp: PqrsOperator
    Pzd: PqrsOperator
    Pzb: PqrsOperator
    nw: int
    nx: int
    nz: int
    ny: int

    @property
    def domain(self):
        return self.PA.domain


def build_operators(sys, check=True):
    """Operators ``PA, PB, PC, PD, PI, P0`` on ``(w_r, z_f)``.

    ``(PA + PB)(w_r, z_f)`` is the time derivative of ``(x, z_p)``,
    ``(PC + PD)(w_r, z_f)`` the output, ``PI`` selects ``w`` and ``P0``
    reconstructs ``(x, z_p)``.
    """
    if check:
        check_valid(sys)
    dom = tuple(sys.domain)
    nx, nw, ny, nz = sys.nx, sys.nw, sys.ny, sys.nz
    nd = sys.n2 + sys.n3
    m = nw + nx
    maps = fundamental_maps(sys)
    Pp = maps.primal(m, dom)
    Pzd = maps.derivative(m, dom)
    Pzb = boundary_operator(sys, maps)

    def mats(*arrs):
        return np.hstack(arrs)

    direct = PqrsOperator.from_parts(
        (m, nz), (nx, nz), dom,
        P=mats(np.zeros((nx, nw)), sys.A),
        Q2=MatPoly.block([[MatPoly.zeros(nz, nw, dom), sys.E]]),
        S=MatPoly.block([[MatPoly.zeros(nz, sys.n1 + sys.n2, dom), sys.A2]]))
    PA = (PqrsOperator.from_parts((0, nz), (nx, nz), dom, Q1=sys.Ea, S=sys.A0) @ Pp
          + PqrsOperator.from_parts((0, nd), (nx, nz), dom, Q1=sys.Eb, S=sys.A1) @ Pzd
          + PqrsOperator.from_parts((sys.nb, 0), (nx, nz), dom, P=sys.E1) @ Pzb
          + direct)
    PB = PqrsOperator.from_parts(
        (m, nz), (nx, nz), dom, P=mats(sys.B_wo, np.zeros((nx, nx))),
        Q2=MatPoly.block([[sys.B_wp, MatPoly.zeros(nz, nx, dom)]]))
    PC = (PqrsOperator.from_parts((0, nz), (ny, 0), dom, Q1=sys.Ca) @ Pp
          + PqrsOperator.from_parts((0, nd), (ny, 0), dom, Q1=sys.Cb) @ Pzd
          + PqrsOperator.from_parts((sys.nb, 0), (ny, 0), dom, P=sys.C1) @ Pzb
          + PqrsOperator.from_parts((m, nz), (ny, 0), dom, P=mats(np.zeros((ny, nw)), sys.C)))
    PD = PqrsOperator.from_parts((m, nz), (ny, 0), dom, P=mats(sys.D_w, np.zeros((ny, nx))))
    PI = PqrsOperator.from_parts((m, nz), (nw, 0), dom, P=mats(np.eye(nw), np.zeros((nw, nx))))
    P0 = PqrsOperator.from_parts((m, nz), (nx, nz), dom, P=mats(np.zeros((nx, nw)), np.eye(nx)),
                                 Q2=maps.H0, S=maps.G0, R1=maps.G1, R2=maps.G2)
    return SystemOperators(PA, PB, PC, PD, PI, P0, maps, Pp, Pzd, Pzb, nw, nx, nz, ny)


# ---------------------------------------------------------------------------
# canned systems
# ---------------------------------------------------------------------------

def delay_system(A, Ad, Bw, C, tau=1.0, Dw=None, name=""):
    """``x' = A x + Ad x(t - tau) + Bw w``, ``y = C x + Dw w`` as an ODE-PDE system.

    The history ``z(s, t) = x(t + tau (s - 1))`` on ``[0, 1]`` obeys
    ``z_t = z_s / tau`` with ``z(1) = x``, and the delayed state is ``z(0)``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=float))
    Ad = np.atleast_2d(np.asarray(Ad, dtype=float))
    Bw = np.asarray(Bw, dtype=float)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    nx = A.shape[0]
    if Bw.ndim < 2:
        Bw = Bw.reshape(nx, -1)
    nw, ny = Bw.shape[1], C.shape[0]
    if tau <= 0:
        raise ValueError("delay must be positive")
    return OdePdeSystem.create(
        n2=nx, nx=nx, nw=nw, ny=ny, domain=(0.0, 1.0), name=name,
        A=A, B_wo=Bw, C=C, D_w=np.zeros((ny, nw)) if Dw is None else Dw,
        A1=np.eye(nx) / tau, B=np.hstack([np.zeros((nx, nx)), np.eye(nx)]), B1=np.eye(nx),
        E1=np.hstack([Ad, np.zeros((nx, nx))]))


def ode_system(A, B, C, D=None, name=""):
    """Pure ODE (no distributed state)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.zeros((C.shape[0], B.shape[1])) if D is None else np.atleast_2d(np.asarray(D, dtype=float))
    return OdePdeSystem.create(nx=A.shape[0], nw=B.shape[1], ny=C.shape[0], name=name,
                               A=A, B_wo=B, C=C, D_w=D)


def require_square_io(sys):
    if sys.nw != sys.ny:
        raise DimMismatch("passivity needs as many inputs as outputs (nw=%d, ny=%d)" % (sys.nw, sys.ny))
