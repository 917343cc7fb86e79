"""Random instances and quadrature oracles shared by the test modules."""
import numpy as np

from piegain.pqrs import PqrsOperator, gauss_integral
from piegain.symbolic import MatPoly
from piegain.system_model import OdePdeSystem

DOMAINS = [(0.0, 1.0), (-1.0, 1.0), (0.5, 2.0)]


def rand_matpoly(rng, rows, cols, deg, variables=("s",), domain=(0.0, 1.0), scale=1.0):
    """Random data MatPoly of total degree <= deg in the given variables."""
    terms = {}
    idx = {"s": 0, "theta": 1, "eta": 2}
    for k in range(deg + 1):
        for combo in _compositions(k, len(variables)):
            e = [0, 0, 0]
            for v, p in zip(variables, combo):
                e[idx[v]] = p
            terms[tuple(e)] = scale * rng.standard_normal((rows, cols))
    return MatPoly.from_terms(terms, shape=(rows, cols), domain=domain)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for i in range(total + 1):
        for rest in _compositions(total - i, parts - 1):
            yield (i,) + rest


def rand_operator(rng, dims_in, dims_out, deg, domain=(0.0, 1.0)):
    (m, q), (n, r) = dims_in, dims_out
    return PqrsOperator(
        MatPoly.constant(rng.standard_normal((n, m)), domain) if n and m else MatPoly.zeros(n, m, domain),
        rand_matpoly(rng, n, q, deg, domain=domain),
        rand_matpoly(rng, r, m, deg, domain=domain),
        rand_matpoly(rng, r, q, deg, domain=domain),
        rand_matpoly(rng, r, q, deg, ("s", "theta"), domain),
        rand_matpoly(rng, r, q, deg, ("s", "theta"), domain))


def rand_state(rng, m, q, deg=3, domain=(0.0, 1.0)):
    return rng.standard_normal(m), rand_matpoly(rng, q, 1, deg, domain=domain)


def l2_norm_sq(f, domain):
    """``int |f(s)|^2`` for a vectorized callable returning (..., k)."""
    a, b = domain
    return float(gauss_integral(lambda s: np.sum(f(s) ** 2, axis=-1, keepdims=True), a, b)[0])


def rand_system(rng, n1, n2, n3, nx, nw, ny, deg=1, domain=(0.0, 1.0)):
    """Random system with generic (hence admissible) boundary matrix."""
    dims = dict(n1=n1, n2=n2, n3=n3, nx=nx, nw=nw, ny=ny)
    skeleton = OdePdeSystem.create(domain=domain, **dims)
    mats = {}
    for key in ("A", "B_wo", "C", "D_w", "C1", "E1", "B", "B1", "B2"):
        mats[key] = rng.standard_normal(skeleton.expected_shape(key))
    for key in ("E", "A0", "A1", "A2", "B_wp", "Ca", "Cb", "Ea", "Eb"):
        mats[key] = rand_matpoly(rng, *skeleton.expected_shape(key), deg, domain=domain)
    return OdePdeSystem.create(domain=domain, **dims, **mats)


def rand_dims(rng, max_block=2):
    while True:
        n1, n2, n3 = rng.integers(0, max_block + 1, size=3)
        if n1 + n2 + n3 > 0:
            break
    nx, nw, ny = rng.integers(1, max_block + 1, size=3)
    return tuple(int(v) for v in (n1, n2, n3, nx, nw, ny))


# -- primal-state helpers ----------------------------------------------------

def split_z(sys, z):
    """Split a stacked nz x 1 MatPoly into (z1, z2, z3)."""
    n1, n2 = sys.n1, sys.n2
    return z[:n1, :], z[n1:n1 + n2, :], z[n1 + n2:, :]


def boundary_values(sys, zp):
    """``z_b`` of a primal polynomial state, by direct evaluation."""
    a, b = sys.domain
    _, z2, z3 = split_z(sys, zp)
    z3s = z3.diff("s")
    parts = [z2.evaluate({"s": a}), z2.evaluate({"s": b}), z3.evaluate({"s": a}),
             z3.evaluate({"s": b}), z3s.evaluate({"s": a}), z3s.evaluate({"s": b})]
    return np.concatenate([np.asarray(p, dtype=float).reshape(-1) for p in parts])


def fundamental_of(sys, zp):
    """``z_f = (z1, z2s, z3ss)`` by differentiation."""
    z1, z2, z3 = split_z(sys, zp)
    return MatPoly.block([[z1], [z2.diff("s")], [z3.diff("s").diff("s")]])


def derivative_part(sys, zp):
    """``(z2s, z3s)``."""
    _, z2, z3 = split_z(sys, zp)
    return MatPoly.block([[z2.diff("s")], [z3.diff("s")]])


def admissible_state(rng, sys, w, x, deg=4):
    """Random polynomial primal state satisfying ``B z_b = B1 x + B2 w``.

    A polynomial is drawn at random and corrected by ``c2 + (c3 + c3s (s - a))``
    terms, which shift ``z_b`` linearly.
    """
    dom = sys.domain
    a, _ = dom
    zp = rand_matpoly(rng, sys.nz, 1, deg, domain=dom)
    if not sys.nc:
        return zp
    target = sys.B1 @ x + sys.B2 @ w
    resid = target - sys.B @ boundary_values(sys, zp)
    # response of z_b to unit corrections, computed by evaluation (not via the library's T)
    cols = []
    basis = []
    for k in range(sys.nc):
        e = np.zeros(sys.nc)
        e[k] = 1.0
        corr = _correction(sys, e)
        basis.append(corr)
        cols.append(sys.B @ boundary_values(sys, corr))
    coef = np.linalg.solve(np.column_stack(cols), resid)
    for c, corr in zip(coef, basis):
        zp = zp + corr.scale(float(c))
    return zp


def _correction(sys, e):
    n1, n2, n3 = sys.n1, sys.n2, sys.n3
    a, _ = sys.domain
    c2, c3, c3s = e[:n2], e[n2:n2 + n3], e[n2 + n3:]
    const = np.concatenate([np.zeros(n1), c2, c3 - a * c3s]).reshape(-1, 1)
    lin = np.concatenate([np.zeros(n1 + n2), c3s]).reshape(-1, 1)
    return MatPoly.from_terms({(0, 0, 0): const, (1, 0, 0): lin}, shape=(sys.nz, 1), domain=sys.domain)


def _vec(p):
    return np.asarray(p.evaluate(), dtype=float).reshape(-1)


def dynamics_rhs(sys, w, x, zp):
    """Right-hand side and output of the original equations, evaluated directly."""
    a, b = sys.domain
    zb = boundary_values(sys, zp)
    zd = derivative_part(sys, zp)
    _, _, z3 = split_z(sys, zp)
    z3ss = z3.diff("s").diff("s")
    xdot = (sys.A @ x + sys.B_wo @ w + sys.E1 @ zb
            + _vec((sys.Ea @ zp + sys.Eb @ zd).integrate("s", "a", "b")))
    xm = MatPoly.constant(x.reshape(-1, 1), sys.domain)
    wm = MatPoly.constant(w.reshape(-1, 1), sys.domain)
    zdot = sys.A0 @ zp + sys.A1 @ zd + sys.A2 @ z3ss + sys.E @ xm + sys.B_wp @ wm
    y = (sys.C @ x + sys.D_w @ w + sys.C1 @ zb
         + _vec((sys.Ca @ zp + sys.Cb @ zd).integrate("s", "a", "b")))
    return xdot, zdot, y


# -- operator oracles ----------------------------------------------------------

SAMPLE_POINTS = 7


def sample_points(domain, n=SAMPLE_POINTS):
    a, b = domain
    return a + (b - a) * (np.arange(n) + 0.5) / n


def sequential_discrepancy(A, B, x, z):
    """Normalized gap between ``compose(A, B)`` and applying ``B`` then ``A`` by quadrature."""
    from piegain.pqrs import apply_numeric, compose

    C = compose(A, B)
    f1, g1 = apply_numeric(B, x, z)
    f2, g2 = apply_numeric(A, f1, g1)
    f3, g3 = C.apply(x, z)
    s = sample_points(C.domain)
    want = np.concatenate([f2, g2(s).ravel()])
    got = np.concatenate([f3, np.asarray(g3.at(s=s))[..., 0].ravel()])
    return float(np.max(np.abs(want - got), initial=0.0) / (1.0 + np.max(np.abs(want), initial=0.0)))


def adjoint_discrepancy(op, u, v):
    """``|<op u, v> - <u, op* v>|`` normalized, all by quadrature."""
    from piegain.pqrs import adjoint, apply_numeric, inner_product

    (x, z), (y, w) = u, v
    fa, ga = apply_numeric(op, x, z)
    fb, gb = apply_numeric(adjoint(op), y, w)
    n, r = op.dims_out
    m, q = op.dims_in
    zf = lambda s: z.at(s=s)[..., 0]
    wf = lambda s: w.at(s=s)[..., 0]
    lhs = inner_product((fa, ga), (y, wf), op.domain, r)
    rhs = inner_product((x, zf), (fb, gb), op.domain, q)
    scale = 1.0 + abs(lhs) + abs(rhs)
    return abs(lhs - rhs) / scale


def random_psd(rng, n):
    G = rng.standard_normal((n, n))
    return G @ G.T


def assign_symmetric(prefix, T):
    from piegain.symbolic import symmetric_entry_name

    n = T.shape[0]
    return {symmetric_entry_name(prefix, i, j): T[i, j] for i in range(n) for j in range(i, n)}


def direct_quadratic_form(cert, T, x, z, domain, n_nodes=60):
    """``int g(s) v(s)^T T v(s) ds`` with ``v = [x; Z1 z; int_a^s Z2 z; int_s^b Z2 z]``.

    This is the factorization positivity is built on, evaluated without the
    library's symbolic parameterization.
    """
    from piegain.pqrs import gauss_integral

    a, b = domain
    Z1, Z2 = cert.basis.Z1, cert.basis.Z2
    zf = lambda s: z.at(s=s)[..., 0]
    m = len(x)

    def v(s):
        sb = s[:, None]
        i1 = gauss_integral(lambda t: np.einsum("...ij,...j->...i", Z2.at(s=sb, theta=t), zf(t)), a, s)
        i2 = gauss_integral(lambda t: np.einsum("...ij,...j->...i", Z2.at(s=sb, theta=t), zf(t)), s, b)
        z1 = np.einsum("...ij,...j->...i", Z1.at(s=s), zf(s))
        return np.concatenate([np.broadcast_to(x, (len(s), m)), z1, i1, i2], axis=1)

    xs, ws = np.polynomial.legendre.leggauss(n_nodes)
    s = 0.5 * (b - a) * xs + 0.5 * (a + b)
    V = v(s)
    gv = np.asarray(cert.g.at(s=s)).reshape(len(s))
    return 0.5 * (b - a) * float(np.sum(ws * gv * np.einsum("ni,ij,nj->n", V, T, V)))


def quadratic_form(op, x, z):
    """``<(x, z), op (x, z)>_X`` computed exactly for polynomial ``z``."""
    f, w = op.apply(x, z)
    return float(np.dot(x, f)) + float(np.asarray((z.T @ w).integrate("s", "a", "b").evaluate()).ravel()[0])


def rand_stable_lti(rng, max_n=3, max_io=2):
    """Random ``(A, B, C, D)`` with spectral abscissa in ``[-2, -0.3]``."""
    n = int(rng.integers(1, max_n + 1))
    nw = int(rng.integers(1, max_io + 1))
    ny = int(rng.integers(1, max_io + 1))
    M = rng.standard_normal((n, n))
    A = M - (np.max(np.linalg.eigvals(M).real) + rng.uniform(0.3, 2.0)) * np.eye(n)
    B = rng.standard_normal((n, nw))
    C = rng.standard_normal((ny, n))
    D = 0.5 * rng.standard_normal((ny, nw))
    return A, B, C, D


def shipped(name):
    """A shipped example system by name."""
    from piegain.cli import resolve_document
    from piegain.document import load_document

    return load_document(resolve_document(name))


# -- acceptance bookkeeping ----------------------------------------------------

ACCEPTANCE = {}


def record(number, title, passed, detail):
    """Remember (and print) the verdict line of one acceptance criterion."""
    line = "ACCEPTANCE %2d %s: %s -- %s" % (number, "PASS" if passed else "FAIL", title, detail)
    ACCEPTANCE[number] = line
    print(line)
    return passed
