"""L2-gain and passivity certificates for coupled ODE-PDE systems.

A storage operator ``Pv`` on ``R^nx x L2^nz`` is sought in ``Phi_{d1} + eps*I``.
With ``K = P0* Pv`` the dissipation inequality becomes ``-(J + J*) in Phi_{d2}``
for an operator ``J`` on ``(w, x, z_f)``, which is matched coefficient by
coefficient.  Everything here is linear in the decision variables, so the
result is a single SDP.
"""
from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import sdp
from .errors import DimMismatch, Infeasible, ParseError, SolverFailure
from .positivity import DEFAULT_EPS, VarNamespace, phi_d
from .pqrs import PqrsOperator, adjoint, apply, apply_numeric, compose, inner_product, op_scale
from .symbolic import AffineScalar, MatPoly
from .system_model import build_operators, require_square_io

GAMMA2 = "gamma2"
BISECTION_TOL = 1e-4
VERIFY_TOL = 1e-6


@dataclass(frozen=True)
class StorageVariable:
    op: PqrsOperator
    certs: tuple
    eps: float


@dataclass
class AnalysisProblem:
    """Assembled SDP together with the operators it was built from."""

    kind: str                     # "gain" or "passivity"
    sdp: sdp.SdpProblem
    storage: StorageVariable
    J: PqrsOperator
    neg_certs: tuple
    degrees: tuple
    constraint: PqrsOperator = field(repr=False, default=None)


def make_storage(nx, nz, d1, eps=DEFAULT_EPS, namespace=None, domain=(0.0, 1.0)):
    """Self-adjoint coercive storage operator ``Phi_{d1} element + eps*I``."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    ns = namespace or VarNamespace()
    op, certs = phi_d(nx, nz, d1, ns, domain, label="P")
    op = op + PqrsOperator.identity(nx, nz, domain) * float(eps)
    return StorageVariable(op, certs, float(eps))


def _register(problem, certs):
    for c in certs:
        problem.add_psd_block(c.name, c.size)


def _close(kind, ops, storage, J, d2, degrees, namespace):
    m = ops.nw + ops.nx
    neg, neg_certs = phi_d(m, ops.nz, d2, namespace, ops.domain, label="N")
    constraint = -(J + adjoint(J)) - neg
    prob = sdp.SdpProblem()
    _register(prob, storage.certs)
    _register(prob, neg_certs)
    if kind == "gain":
        prob.add_nonneg(GAMMA2)
        prob.set_objective(AffineScalar.variable(GAMMA2))
    prob.add_zero(constraint)
    return AnalysisProblem(kind, prob, storage, J, neg_certs, degrees, constraint)


def storage_chain(ops, storage):
    """``P0* Pv (PA + PB)``: the storage-rate part of ``J``."""
    K = compose(adjoint(ops.P0), storage.op)
    return compose(K, ops.PA + ops.PB)


def assemble_gain(ops, storage, d2, degrees=None, namespace=None):
    """Gain problem: minimize ``gamma2`` subject to ``-(J + J*) in Phi_{d2}``.

    ``J = P0* Pv (PA + PB) + (PC* PC + PD* PD - gamma2 PI* PI) / 2 + PC* PD``.
    """
    ns = namespace or VarNamespace("g")
    C, D, I = ops.PC, ops.PD, ops.PI
    quad = (compose(adjoint(C), C) + compose(adjoint(D), D)) * 0.5 + compose(adjoint(C), D)
    J = storage_chain(ops, storage) + quad \
        + op_scale(AffineScalar.variable(GAMMA2, -0.5), compose(adjoint(I), I))
    return _close("gain", ops, storage, J, d2, degrees or (None, d2), ns)


def assemble_passivity(ops, storage, d2, degrees=None, namespace=None):
    """Passivity problem: ``J = P0* Pv (PA + PB) - (PC + PD)* PI``."""
    if ops.nw != ops.ny:
        raise DimMismatch("passivity needs nw == ny (got nw=%d, ny=%d)" % (ops.nw, ops.ny))
    ns = namespace or VarNamespace("p")
    J = storage_chain(ops, storage) - compose(adjoint(ops.PC + ops.PD), ops.PI)
    return _close("passivity", ops, storage, J, d2, degrees or (None, d2), ns)


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    kind: str
    degrees: tuple
    eps: float
    storage: PqrsOperator              # numeric
    gamma: float = float("nan")
    status: str = ""
    solver: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    system_name: str = ""

    @property
    def gamma2(self):
        return self.gamma ** 2

    @property
    def certified(self):
        """Solver reached full accuracy and the verification passed."""
        return self.status == sdp.OPTIMAL and bool(self.residuals.get("passed", False))

    def with_gamma(self, gamma):
        out = Certificate(**{k: getattr(self, k) for k in self.__dataclass_fields__})
        out.gamma = float(gamma)
        return out

    # -- serialization ---------------------------------------------------------

    def to_dict(self):
        parts = {}
        for name, part in zip(("P", "Q1", "Q2", "S", "R1", "R2"), self.storage.parts):
            parts[name] = {"shape": list(part.coef.shape[:5]), "coef": part.coef[..., 0].tolist()}
        return {"kind": self.kind, "degrees": list(self.degrees), "eps": self.eps,
                "gamma": None if np.isnan(self.gamma) else self.gamma, "status": self.status,
                "solver": self.solver, "residuals": self.residuals, "system": self.system_name,
                "domain": list(self.storage.domain), "storage": parts}

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=1, sort_keys=True)
            fh.write("\n")

    @classmethod
    def from_dict(cls, d):
        try:
            dom = tuple(d["domain"])
            parts = []
            for name in ("P", "Q1", "Q2", "S", "R1", "R2"):
                c = np.asarray(d["storage"][name]["coef"], dtype=float)
                c = c.reshape(tuple(d["storage"][name]["shape"]))
                parts.append(MatPoly(c[..., None], (), dom))
            gamma = d.get("gamma")
            return cls(kind=d["kind"], degrees=tuple(d["degrees"]), eps=float(d["eps"]),
                       storage=PqrsOperator(*parts),
                       gamma=float("nan") if gamma is None else float(gamma),
                       status=d.get("status", ""), solver=d.get("solver", {}),
                       residuals=d.get("residuals", {}), system_name=d.get("system", ""))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("malformed certificate: %s" % exc) from exc

    @classmethod
    def load(cls, path):
        try:
            with open(path) as fh:
                d = json.load(fh)
        except OSError as exc:
            raise ParseError("cannot read certificate %s: %s" % (path, exc)) from exc
        except json.JSONDecodeError as exc:
            raise ParseError("certificate %s is not valid JSON: %s" % (path, exc)) from exc
        return cls.from_dict(d)


def _solution_stats(sol):
    return {"status": sol.status, "objective": sol.objective, "duality_gap": sol.duality_gap,
            "max_eq_residual": sol.max_eq_residual, "max_scaled_residual": sol.max_scaled_residual,
            "min_psd_eig": sol.min_psd_eig(), "solve_time": sol.solve_time,
            "detail": sol.detail}


def _check(sol, degrees):
    if sol.status == sdp.INFEASIBLE:
        raise Infeasible(degrees, "the SDP is infeasible; try larger degrees")
    if not sol.ok:
        raise SolverFailure("SDP solver failed: %s" % sol.detail)


def _pin_gamma(problem, gamma2):
    """Copy of a gain SDP with ``gamma2`` fixed (for bisection)."""
    p = sdp.SdpProblem()
    for name, size in problem.psd_blocks:
        p.add_psd_block(name, size)
    p.add_nonneg(GAMMA2)
    p._rows = list(problem._rows)
    p.add_equality(AffineScalar.variable(GAMMA2) - gamma2)
    return p


def _bisect(problem, opts, degrees, hi=None, tol=BISECTION_TOL):
    """Smallest feasible ``gamma2`` by bisection on the pinned feasibility problem.

    Only fully converged solves count as feasible: an inaccurate solve at a
    pinned value below the optimum must not move the upper end down.
    """
    lo = 0.0
    hi = hi or 1.0
    best = None
    while True:                                      # find a feasible upper end
        sol = sdp.solve(_pin_gamma(problem, hi), opts)
        if sol.status == sdp.OPTIMAL:
            best = sol
            break
        if hi > 1e8:
            raise Infeasible(degrees, "no feasible gamma found by bisection")
        lo, hi = hi, hi * 4.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        sol = sdp.solve(_pin_gamma(problem, mid), opts)
        if sol.status == sdp.OPTIMAL:
            hi, best = mid, sol
        else:
            lo = mid
    return best


def _numeric_storage(ap, sol):
    return ap.storage.op.assign(sol.assignment)


def gain_problem(ops, d1=2, d2=2, eps=DEFAULT_EPS):
    """Assembled (unsolved) gain SDP for prebuilt system operators."""
    storage = make_storage(ops.nx, ops.nz, d1, eps, VarNamespace("s"), ops.domain)
    return assemble_gain(ops, storage, d2, (int(d1), int(d2)))


def passivity_problem(ops, d1=2, d2=2, eps=DEFAULT_EPS):
    """Assembled (unsolved) passivity SDP for prebuilt system operators."""
    storage = make_storage(ops.nx, ops.nz, d1, eps, VarNamespace("s"), ops.domain)
    return assemble_passivity(ops, storage, d2, (int(d1), int(d2)))


def min_gain(sys, d1=2, d2=2, eps=DEFAULT_EPS, solver_opts=None, ops=None, bisection=False,
             verify=True, n_samples=20):
    """Smallest certified ``gamma`` at the given degrees.

    Minimizes ``gamma2`` directly; falls back to bisection if the solver
    cannot handle the objective (or when ``bisection=True``).
    """
    t0 = time.perf_counter()
    ops = ops or build_operators(sys)
    degrees = (int(d1), int(d2))
    ap = gain_problem(ops, d1, d2, eps)
    t_asm = time.perf_counter() - t0
    opts = sdp.solver_options() if solver_opts is None else {**sdp.solver_options(), **solver_opts}
    sol = None if bisection else sdp.solve(ap.sdp, opts)
    method = "objective"
    if sol is None or sol.status == sdp.FAILED:
        sol = _bisect(ap.sdp, opts, degrees)
        method = "bisection"
    _check(sol, degrees)
    gamma2 = max(sol.assignment[GAMMA2], 0.0)
    cert = Certificate("gain", degrees, float(eps), _numeric_storage(ap, sol), float(np.sqrt(gamma2)),
                       sol.status, {**_solution_stats(sol), "method": method, "assembly_time": t_asm,
                                    "n_equalities": ap.sdp.n_equalities, "n_vars": ap.sdp.n_vars},
                       system_name=getattr(sys, "name", ""))
    if verify:
        cert.residuals = verify_certificate(ops, cert, n_samples).as_dict()
    return cert


def check_passivity(sys, d1=2, d2=2, eps=DEFAULT_EPS, solver_opts=None, ops=None, verify=True,
                    n_samples=20):
    """Passivity certificate, or :class:`Infeasible` if none exists at these degrees."""
    require_square_io(sys)
    t0 = time.perf_counter()
    ops = ops or build_operators(sys)
    degrees = (int(d1), int(d2))
    ap = passivity_problem(ops, d1, d2, eps)
    t_asm = time.perf_counter() - t0
    opts = sdp.solver_options() if solver_opts is None else {**sdp.solver_options(), **solver_opts}
    sol = sdp.solve(ap.sdp, opts)
    _check(sol, degrees)
    cert = Certificate("passivity", degrees, float(eps), _numeric_storage(ap, sol), float("nan"),
                       sol.status, {**_solution_stats(sol), "assembly_time": t_asm,
                                    "n_equalities": ap.sdp.n_equalities, "n_vars": ap.sdp.n_vars},
                       system_name=getattr(sys, "name", ""))
    if verify:
        cert.residuals = verify_certificate(ops, cert, n_samples).as_dict()
    return cert


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    kind: str
    worst_sample: float          # max over random samples of the dissipation form / |xi|^2
    worst_case: float            # largest generalized eigenvalue over the test subspace
    coercivity_margin: float     # min <z, Pv z> / |z|^2 - eps over the test subspace
    self_adjoint_residual: float
    scale: float
    n_samples: int
    basis_degree: int
    passed: bool = False

    @property
    def worst(self):
        return max(self.worst_sample, self.worst_case)

    def as_dict(self):
        d = asdict(self)
        d["worst"] = self.worst
        return d

    def table(self):
        rows = [("dissipation, random samples", self.worst_sample),
                ("dissipation, worst case in subspace", self.worst_case),
                ("coercivity margin", self.coercivity_margin),
                ("self-adjointness residual", self.self_adjoint_residual),
                ("tolerance", VERIFY_TOL * self.scale)]
        w = max(len(r[0]) for r in rows)
        lines = ["%-*s  % .3e" % (w, k, v) for k, v in rows]
        lines.append("%-*s  %s" % (w, "verdict", "PASS" if self.passed else "FAIL"))
        return "\n".join(lines)


def _legendre_basis(deg, domain):
    a, b = domain
    out = []
    for j in range(deg + 1):
        c = np.polynomial.legendre.Legendre.basis(j, domain=[a, b]).convert(
            kind=np.polynomial.Polynomial).coef
        out.append(c * np.sqrt((2 * j + 1) / (b - a)))
    return out


def _test_basis(m, nz, deg, domain):
    """Orthonormal-ish basis of ``R^m x (polynomials of degree <= deg)^nz``."""
    basis = []
    for k in range(m):
        x = np.zeros(m)
        x[k] = 1.0
        basis.append((x, MatPoly.zeros(nz, 1, domain)))
    for c in _legendre_basis(deg, domain):
        for k in range(nz):
            terms = {}
            for p, v in enumerate(c):
                col = np.zeros((nz, 1))
                col[k, 0] = v
                terms[(p, 0, 0)] = col
            basis.append((np.zeros(m), MatPoly.from_terms(terms, shape=(nz, 1), domain=domain)))
    return basis


def _ip(u, v):
    (x, z), (y, w) = u, v
    val = float(np.dot(x, y))
    if z.rows:
        val += float(np.asarray((z.T @ w).integrate("s", "a", "b").evaluate()).reshape(-1)[0])
    return val


def _combine(basis, coef):
    x = sum(c * b[0] for c, b in zip(coef, basis))
    z = basis[0][1].scale(0.0)
    for c, b in zip(coef, basis):
        z = z + b[1].scale(float(c))
    return x, z


def dissipation_matrix(ops, cert, basis):
    """Symmetric matrix of the dissipation form on ``span(basis)``.

    Built only from numeric applications of the system operators and the
    storage operator, never from ``J``.
    """
    Pv = cert.storage
    A = ops.PA + ops.PB
    Cw = ops.PC + ops.PD
    us, ps, ys, ws = [], [], [], []
    for x, z in basis:
        us.append(apply(ops.P0, x, z))
        ax = apply(A, x, z)
        ps.append(apply(Pv, *ax))
        ys.append(apply(Cw, x, z)[0])
        ws.append(apply(ops.PI, x, z)[0])
    n = len(basis)
    M = np.zeros((n, n))
    g2 = cert.gamma2
    for i in range(n):
        for j in range(i, n):
            if cert.kind == "gain":
                val = (_ip(us[i], ps[j]) + _ip(us[j], ps[i]) + ys[i] @ ys[j] - g2 * ws[i] @ ws[j])
            else:
                val = _ip(us[i], ps[j]) + _ip(us[j], ps[i]) - (ws[i] @ ys[j] + ws[j] @ ys[i])
            M[i, j] = M[j, i] = val
    return M


def dissipation_sample(ops, cert, x, zf):
    """Dissipation form at one ``(w, x, z_f)``, by quadrature on callables."""
    dom = ops.domain
    Pv = cert.storage
    u = apply_numeric(ops.P0, x, zf)
    a = apply_numeric(ops.PA + ops.PB, x, zf)
    p = apply_numeric(Pv, a[0], a[1])
    y = apply_numeric(ops.PC + ops.PD, x, zf)[0]
    w = apply_numeric(ops.PI, x, zf)[0]
    rate = 2.0 * inner_product(u, p, dom, ops.nz)
    if cert.kind == "gain":
        return rate + y @ y - cert.gamma2 * (w @ w)
    return rate - 2.0 * (w @ y)


def verify_certificate(ops, cert, n_samples=20, basis_degree=5, seed=0, n_quadrature=None):
    """Check the dissipation inequality, coercivity and self-adjointness.

    The worst case is the largest generalized eigenvalue of the dissipation
    form against the ``X`` Gram matrix over polynomial states up to
    ``basis_degree``; random samples are evaluated independently by
    quadrature (``n_quadrature`` of them, default ``min(n_samples, 5)``).
    """
    import scipy.linalg as sla

    dom = ops.domain
    m, nz = ops.nw + ops.nx, ops.nz
    basis = _test_basis(m, nz, basis_degree, dom)
    G = np.array([[_ip(u, v) for v in basis] for u in basis])
    M = dissipation_matrix(ops, cert, basis)
    worst_case = float(sla.eigh(M, G, eigvals_only=True)[-1])

    rng = np.random.default_rng(seed)
    worst_sample = -np.inf
    nq = min(n_samples, 5) if n_quadrature is None else n_quadrature
    for k in range(n_samples):
        coef = rng.standard_normal(len(basis))
        nrm = coef @ G @ coef
        if k < nq:
            x, z = _combine(basis, coef)
            val = dissipation_sample(ops, cert, x, z)
        else:
            val = coef @ M @ coef
        worst_sample = max(worst_sample, float(val / nrm))

    # coercivity of the storage operator on (x, z_p)
    sbasis = _test_basis(ops.nx, nz, basis_degree, dom)
    Gs = np.array([[_ip(u, v) for v in sbasis] for u in sbasis])
    Ps = np.array([[_ip(u, apply(cert.storage, *v)) for v in sbasis] for u in sbasis])
    Ps = 0.5 * (Ps + Ps.T)
    coerc = float(sla.eigh(Ps, Gs, eigvals_only=True)[0]) - cert.eps

    sa = max((p - q).max_abs() for p, q in zip(adjoint(cert.storage).parts, cert.storage.parts))
    scale = max(1.0, cert.gamma2 if cert.kind == "gain" else 1.0,
                max(p.max_abs() for p in cert.storage.parts))
    passed = (max(worst_case, worst_sample) <= VERIFY_TOL * scale and coerc >= -VERIFY_TOL * scale
              and sa <= VERIFY_TOL * scale)
    return VerificationReport(cert.kind, worst_sample, worst_case, coerc, sa, scale, n_samples,
                              basis_degree, bool(passed))

