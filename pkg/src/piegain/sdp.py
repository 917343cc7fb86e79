"""Semidefinite programs with named PSD blocks, scalar variables and equalities.

The internal solve goes through cvxpy (Clarabel by default).  Problems can also
be written in SDPA sparse format, solved by an external SDPA binding, and the
solution read back; residuals are always recomputed here.

The SDPA export uses the format's native equality form::

    maximize  F0 . Y   s.t.  Fi . Y = ci,  Y >= 0

with ``Y`` the block diagonal of all PSD blocks, one diagonal block for the
non-negative scalars and one for the positive/negative parts of free scalars.
Entries that the equalities force to zero are removed before export so that
the exported problem has a strictly feasible point.
"""
from __future__ import annotations

import json
import os
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import ExportRejected, ParseError, ShapeMismatch, SolverFailure
from .symbolic import AffineScalar, MatPoly, symmetric_entry_name

ZERO_TOL = 1e-12
RANK_TOL = 1e-10
DEFAULT_TOL = 1e-7
DEFAULT_MAXITER = 200

OPTIMAL = "Optimal"
NEAR_OPTIMAL = "NearOptimal"
INFEASIBLE = "Infeasible"
FAILED = "Failed"


def solver_options(tol=None, max_iter=None, solver=None):
    """Options dict, falling back to ``PIEGAIN_SDP_TOL`` / ``PIEGAIN_SDP_MAXITER``."""
    if tol is None:
        tol = float(os.environ.get("PIEGAIN_SDP_TOL", DEFAULT_TOL))
    if max_iter is None:
        max_iter = int(os.environ.get("PIEGAIN_SDP_MAXITER", DEFAULT_MAXITER))
    return {"tol": float(tol), "max_iter": int(max_iter), "solver": solver or "CLARABEL"}


class SdpProblem:
    """Minimize a linear objective over PSD blocks and scalar variables.

    Variables are named: entry ``(i, j)``, ``i <= j``, of block ``T`` is
    ``T[i,j]``.  Build the problem with the ``add_*`` methods, then treat it
    as immutable.
    """

    def __init__(self):
        self.psd_blocks = []          # [(name, size)]
        self.free_vars = []
        self.nonneg_vars = []
        self._index = {}
        self._names = []
        self._rows = []               # list of (constants, csr over current variables)
        self._ncols = []
        self.objective = AffineScalar()

    # -- declaration ---------------------------------------------------------

    def _declare(self, name):
        if name in self._index:
            raise ValueError("variable %r declared twice" % name)
        self._index[name] = len(self._names)
        self._names.append(name)

    def add_psd_block(self, name, size):
        for i in range(size):
            for j in range(i, size):
                self._declare(symmetric_entry_name(name, i, j))
        self.psd_blocks.append((name, int(size)))

    def add_free(self, name):
        self._declare(name)
        self.free_vars.append(name)

    def add_nonneg(self, name):
        self._declare(name)
        self.nonneg_vars.append(name)

    @property
    def variable_names(self):
        return tuple(self._names)

    @property
    def n_vars(self):
        return len(self._names)

    def index(self, name):
        try:
            return self._index[name]
        except KeyError:
            raise KeyError("undeclared decision variable %r" % name) from None

    # -- constraints ---------------------------------------------------------

    def add_equality(self, expr):
        """Add ``expr == 0`` for an AffineScalar."""
        expr = expr if isinstance(expr, AffineScalar) else AffineScalar(expr)
        names = sorted(expr.terms)
        row = np.array([[expr.terms[k] for k in names]]) if names else np.zeros((1, 0))
        self._add_rows(np.array([expr.constant]), row, names)

    def add_zero(self, poly):
        """Pin every coefficient of a MatPoly (or every part of an operator) to zero."""
        parts = poly.parts if hasattr(poly, "parts") else (poly,)
        for p in parts:
            const, mat = p.affine_rows()
            self._add_rows(const, mat, p.variables)

    def _add_rows(self, const, mat, names):
        cols = np.array([self.index(n) for n in names], dtype=int)
        mat = np.asarray(mat, dtype=float)
        mag = np.max(np.abs(mat), axis=1, initial=0.0)
        keep = (mag > ZERO_TOL) | (np.abs(const) > ZERO_TOL)
        if not np.any(keep):
            return
        const, mat = const[keep], mat[keep]
        coo = sp.coo_matrix(mat)
        A = sp.csr_matrix((coo.data, (coo.row, cols[coo.col])), shape=(mat.shape[0], self.n_vars))
        self._rows.append((np.asarray(const, dtype=float), A))

    def set_objective(self, expr):
        expr = expr if isinstance(expr, AffineScalar) else AffineScalar(expr)
        for k in expr.terms:
            self.index(k)
        self.objective = expr

    # -- assembled form ------------------------------------------------------

    def equality_system(self):
        """``(A, c)`` with constraints ``A v + c = 0`` (unscaled, CSR)."""
        n = self.n_vars
        if not self._rows:
            return sp.csr_matrix((0, n)), np.zeros(0)
        mats = []
        for _, A in self._rows:
            A = A.tocsr()
            if A.shape[1] < n:
                A = sp.hstack([A, sp.csr_matrix((A.shape[0], n - A.shape[1]))]).tocsr()
            mats.append(A)
        return sp.vstack(mats).tocsr(), np.concatenate([c for c, _ in self._rows])

    def scaled_equality_system(self):
        """Rows normalized to unit infinity norm (of the variable part)."""
        A, c = self.equality_system()
        mag = np.abs(A).max(axis=1).toarray().ravel() if A.shape[0] else np.zeros(0)
        mag = np.where(mag > ZERO_TOL, mag, np.maximum(np.abs(c), 1.0))
        D = sp.diags(1.0 / mag)
        return (D @ A).tocsr(), c / mag

    def reduced_equality_system(self, tol=RANK_TOL, fixed_zero=()):
        """Scaled system with linearly dependent rows removed.

        Coefficient matching of self-adjoint operators produces many repeated
        rows, which interior-point solvers reject.  Independent rows are picked
        by QR with column pivoting on ``[A c]^T``; kept rows stay in their
        original order.  Columns listed in ``fixed_zero`` are dropped from the
        system first (their values are known to be zero).
        """
        As, cs = self.scaled_equality_system()
        if As.shape[0] == 0:
            return As, cs
        if len(fixed_zero):
            keep_cols = np.ones(self.n_vars, dtype=float)
            keep_cols[list(fixed_zero)] = 0.0
            As = (As @ sp.diags(keep_cols)).tocsr()
        import scipy.linalg as sla

        M = np.hstack([As.toarray(), cs[:, None]]).T
        _, R, piv = sla.qr(M, mode="economic", pivoting=True)
        d = np.abs(np.diag(R))
        rank = int(np.sum(d > tol * max(d[0], 1.0))) if d.size else 0
        keep = np.sort(piv[:rank])
        return As[keep], cs[keep]

    @property
    def n_equalities(self):
        return sum(c.size for c, _ in self._rows)

    @property
    def equalities(self):
        """Constraints as AffineScalars (for inspection; slow on large problems)."""
        A, c = self.equality_system()
        out = []
        for i in range(A.shape[0]):
            row = A.getrow(i)
            out.append(AffineScalar(c[i], {self._names[j]: v for j, v in zip(row.indices, row.data)}))
        return out

    def objective_vector(self):
        g = np.zeros(self.n_vars)
        for k, v in self.objective.terms.items():
            g[self.index(k)] = v
        return g, self.objective.constant

    def forced_zeros(self):
        """Indices of variables that every feasible point sets to zero.

        A row ``sum_k a_k d_k = 0`` whose terms are all diagonal entries of PSD
        blocks (or non-negative scalars) with the same sign forces each of those
        entries to zero, and with a zero diagonal entry the whole row and column
        of that block vanish.  Repeated to a fixed point, this is the cheap part
        of facial reduction; it restores a strictly feasible point for solvers
        that need one.
        """
        A, c = self.equality_system()
        A = A.tocsr()
        diag = {}
        for name, size in self.psd_blocks:
            for i in range(size):
                diag[self.index(symmetric_entry_name(name, i, i))] = (name, size, i)
        for name in self.nonneg_vars:
            diag[self.index(name)] = None
        zero = set()
        changed = True
        while changed:
            changed = False
            for r in range(A.shape[0]):
                lo, hi = A.indptr[r], A.indptr[r + 1]
                idx, val = A.indices[lo:hi], A.data[lo:hi]
                scale = np.max(np.abs(val), initial=0.0)
                live = [(k, a) for k, a in zip(idx, val) if k not in zero and abs(a) > ZERO_TOL * max(scale, 1.0)]
                if not live or abs(c[r]) > ZERO_TOL * max(scale, 1.0):
                    continue
                if not all(k in diag for k, _ in live):
                    continue
                signs = {a > 0 for _, a in live}
                if len(signs) != 1:
                    continue
                for k, _ in live:
                    zero.add(k)
                    if diag[k] is not None:
                        name, size, i = diag[k]
                        zero.update(self.index(symmetric_entry_name(name, min(i, j), max(i, j)))
                                    for j in range(size))
                changed = True
        return frozenset(int(k) for k in zero)

    def block_slices(self):
        """``name -> (offset, size)`` into the variable vector (upper triangles)."""
        out = {}
        for name, size in self.psd_blocks:
            out[name] = (self.index(symmetric_entry_name(name, 0, 0)), size)
        return out

    def block_matrix(self, v, name, size):
        off = self.index(symmetric_entry_name(name, 0, 0))
        M = np.zeros((size, size))
        iu = np.triu_indices(size)
        M[iu] = v[off:off + len(iu[0])]
        return M + np.triu(M, 1).T

    def is_empty(self):
        return self.n_vars == 0


@dataclass
class SdpSolution:
    status: str
    assignment: dict = field(default_factory=dict)
    objective: float = float("nan")
    duality_gap: float = float("nan")
    max_eq_residual: float = float("nan")
    max_scaled_residual: float = float("nan")
    min_eig: dict = field(default_factory=dict)
    solve_time: float = 0.0
    detail: str = ""
    raw: object = field(default=None, repr=False)

    @property
    def ok(self):
        return self.status in (OPTIMAL, NEAR_OPTIMAL)

    def vector(self, problem):
        return np.array([self.assignment[n] for n in problem.variable_names])

    def min_psd_eig(self):
        return min(self.min_eig.values()) if self.min_eig else float("inf")


def residuals(problem, v):
    """Unscaled and scaled equality residuals plus per-block minimum eigenvalues."""
    A, c = problem.equality_system()
    As, cs = problem.scaled_equality_system()
    raw = np.max(np.abs(A @ v + c), initial=0.0)
    scaled = np.max(np.abs(As @ v + cs), initial=0.0)
    eig = {name: float(np.linalg.eigvalsh(problem.block_matrix(v, name, size))[0]) if size else 0.0
           for name, size in problem.psd_blocks}
    return raw, scaled, eig


def _finish(problem, status, v, gap, t0, detail="", raw=None):
    sol = SdpSolution(status=status, solve_time=time.perf_counter() - t0, detail=detail, raw=raw)
    if v is not None and status != FAILED:
        sol.assignment = dict(zip(problem.variable_names, (float(x) for x in v)))
        g, g0 = problem.objective_vector()
        sol.objective = float(g @ v + g0)
        sol.max_eq_residual, sol.max_scaled_residual, sol.min_eig = residuals(problem, v)
        sol.duality_gap = gap
    return sol


def solve(problem, opts=None):
    """Solve in-process with cvxpy; never raises for solver trouble (status Failed)."""
    import cvxpy as cp

    opts = solver_options() if opts is None else {**solver_options(), **opts}
    if problem.is_empty():
        raise ExportRejected("empty problem")
    t0 = time.perf_counter()
    n = problem.n_vars
    pieces = [None] * n
    cons = []
    blocks = []
    for name, size in problem.psd_blocks:
        X = cp.Variable((size, size), PSD=True, name=name)
        blocks.append(X)
        iu, ju = np.triu_indices(size)
        off = problem.index(symmetric_entry_name(name, 0, 0))
        sel = sp.csr_matrix((np.ones(len(iu)), (np.arange(len(iu)), iu + size * ju)),
                            shape=(len(iu), size * size))
        pieces[off] = sel @ cp.vec(X, order="F")
    for name in problem.free_vars:
        pieces[problem.index(name)] = cp.reshape(cp.Variable(name=name), (1,), order="F")
    for name in problem.nonneg_vars:
        pieces[problem.index(name)] = cp.reshape(cp.Variable(nonneg=True, name=name), (1,), order="F")
    parts = [p for p in pieces if p is not None]
    v = cp.hstack(parts) if len(parts) > 1 else parts[0]
    As, cs = problem.reduced_equality_system()
    if As.shape[0]:
        cons.append(As @ v + cs == 0)
    g, g0 = problem.objective_vector()
    prob = cp.Problem(cp.Minimize(g @ v + g0), cons)
    solver = opts["solver"].upper()
    attempts = _attempts(solver, opts)
    notes = []
    best = None          # first inaccurate-but-usable answer, kept in case nothing better comes
    result = None
    for name, kwargs in attempts:
        label = name + _short(kwargs)
        try:
            prob.solve(solver=name, **kwargs)
        except cp.error.SolverError as exc:
            notes.append("%s: %s" % (label, exc))
            continue
        status = prob.status
        if status == cp.OPTIMAL and v.value is not None:
            result = (OPTIMAL, np.array(v.value, dtype=float).ravel(), _duality_gap(prob, cons, cs, g0), label)
            break
        notes.append("%s: %s" % (label, status))
        if status == cp.OPTIMAL_INACCURATE and v.value is not None and best is None:
            best = (NEAR_OPTIMAL, np.array(v.value, dtype=float).ravel(), _duality_gap(prob, cons, cs, g0), label)
        if status == cp.INFEASIBLE:
            return _finish(problem, INFEASIBLE, None, float("nan"), t0, detail="; ".join(notes))
    if result is None:
        result = best
    if result is None:
        return _finish(problem, FAILED, None, float("nan"), t0, detail="; ".join(notes) or "no attempt")
    status, values, gap, label = result
    detail = "%s: %s" % (label, status)
    if notes:
        detail += " (attempts: %s)" % "; ".join(notes)
    return _finish(problem, status, values, gap, t0, detail=detail, raw=prob)


def _attempts(solver, opts):
    """Solver calls tried in order until one succeeds.

    Clarabel occasionally stops with a numerical error on these degenerate
    coefficient-matching problems; a little more static regularization fixes
    that, and SCS is the last resort.
    """
    tol, it = opts["tol"], opts["max_iter"]
    clarabel = dict(tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=it)
    scs = ("SCS", dict(eps=tol, max_iters=max(it, 20000)))
    if solver == "CLARABEL":
        return [("CLARABEL", clarabel),
                ("CLARABEL", {**clarabel, "static_regularization_constant": 1e-7}),
                ("CLARABEL", {**clarabel, "static_regularization_constant": 1e-6}),
                scs]
    if solver == "SCS":
        return [scs]
    if solver == "CVXOPT":
        return [("CVXOPT", dict(abstol=tol, reltol=tol, feastol=tol, max_iters=it))]
    return [(solver, {})]


def _short(kwargs):
    keys = [k for k in kwargs if k.startswith("static")]
    return "(%s)" % ", ".join("%s=%g" % (k, kwargs[k]) for k in keys) if keys else ""


def _duality_gap(prob, cons, cs, g0):
    """``|primal - dual|`` with the dual objective ``g0 + y.c`` from the equality multipliers."""
    if prob.value is None:
        return float("nan")
    if not cons:
        return 0.0
    y = cons[0].dual_value
    if y is None:
        return float("nan")
    return float(abs(prob.value - (g0 + float(np.asarray(y).ravel() @ cs))))


# ---------------------------------------------------------------------------
# SDPA export / external solve / import
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SdpaLayout:
    """Where each problem variable lives in the SDPA block structure."""

    block_struct: tuple               # positive = dense, negative = diagonal
    # variable index -> list of (block (1-based), i (1-based), j (1-based), sign)
    placements: tuple

    def to_json(self, names):
        """Variable map; variables fixed at zero have an empty placement list."""
        return {"blockStruct": list(self.block_struct),
                "variables": {names[k]: [list(p) for p in pl] for k, pl in enumerate(self.placements)}}


def sdpa_layout(problem, zeros=frozenset()):
    """Block structure and variable placements; variables in ``zeros`` are left out.

    Rows/columns of PSD blocks whose diagonal entry is forced to zero are
    removed, and blocks that vanish entirely are dropped.
    """
    struct = []
    placements = [()] * problem.n_vars
    for name, size in problem.psd_blocks:
        kept = [i for i in range(size) if problem.index(symmetric_entry_name(name, i, i)) not in zeros]
        if not kept:
            continue
        struct.append(len(kept))
        b = len(struct)
        for a, i in enumerate(kept):
            for c, j in enumerate(kept[a:], start=a):
                placements[problem.index(symmetric_entry_name(name, i, j))] = ((b, a + 1, c + 1, 1.0),)
    nonneg = [n for n in problem.nonneg_vars if problem.index(n) not in zeros]
    if nonneg:
        struct.append(-len(nonneg))
        b = len(struct)
        for k, name in enumerate(nonneg, start=1):
            placements[problem.index(name)] = ((b, k, k, 1.0),)
    nf = len(problem.free_vars)
    if nf:
        struct.append(-2 * nf)
        b = len(struct)
        for k, name in enumerate(problem.free_vars):
            placements[problem.index(name)] = ((b, 2 * k + 1, 2 * k + 1, 1.0), (b, 2 * k + 2, 2 * k + 2, -1.0))
    return SdpaLayout(tuple(struct), tuple(placements))


def _fmt(x):
    return "%.17g" % x


def export_sdpa(problem, path, sidecar=True):
    """Write ``problem`` in SDPA sparse format (plus a JSON variable map).

    The output is byte-deterministic for a given problem.
    """
    if problem.is_empty() or problem.n_equalities == 0:
        raise ExportRejected("refusing to export an empty problem")
    zeros = problem.forced_zeros()
    layout = sdpa_layout(problem, zeros)
    if not layout.block_struct:
        raise ExportRejected("every variable is forced to zero; nothing to export")
    As, cs = problem.reduced_equality_system(fixed_zero=sorted(zeros))
    g, _ = problem.objective_vector()
    lines = [str(As.shape[0]), str(len(layout.block_struct)),
             " ".join(str(s) for s in layout.block_struct),
             " ".join(_fmt(-x + 0.0) for x in cs)]

    def entries(matno, coeffs):
        acc = {}
        for k, val in coeffs:
            for (b, i, j, sign) in layout.placements[k]:
                v = val * sign * (0.5 if i != j else 1.0)
                key = (b, i, j)
                acc[key] = acc.get(key, 0.0) + v
        return ["%d %d %d %d %s" % ((matno,) + key + (_fmt(v),))
                for key, v in sorted(acc.items()) if v != 0.0]

    lines += entries(0, [(k, -g[k]) for k in np.nonzero(g)[0]])
    As = As.tocsr()
    As.sort_indices()
    for r in range(As.shape[0]):
        lo, hi = As.indptr[r], As.indptr[r + 1]
        lines += entries(r + 1, zip(As.indices[lo:hi], As.data[lo:hi]))
    try:
        with open(path, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        if sidecar:
            with open(sidecar_path(path), "w") as fh:
                json.dump(layout.to_json(problem.variable_names), fh, indent=1, sort_keys=True)
                fh.write("\n")
    except OSError as exc:
        raise SolverFailure("cannot write %s: %s" % (path, exc)) from exc
    return layout


def sidecar_path(path):
    return str(path) + ".vars.json"


SDPA_BACKENDS = ("sdpa", "clarabel")
_SDPA_PHASES = {"pdOPT": OPTIMAL, "optimal": OPTIMAL,
                "pdFEAS": NEAR_OPTIMAL, "pFEAS": NEAR_OPTIMAL, "dFEAS": NEAR_OPTIMAL,
                "optimal_inaccurate": NEAR_OPTIMAL,
                "pINF_dFEAS": INFEASIBLE, "pdINF": INFEASIBLE, "infeasible": INFEASIBLE}


def solve_sdpa_file(path, solution_path, opts=None, backend="sdpa"):
    """Solve an SDPA sparse file outside the in-process pipeline.

    The file is read with the ``sdpap`` reader.  ``backend="sdpa"`` runs the
    SDPA interior-point code; ``backend="clarabel"`` hands the same parsed
    data (standard form ``min c.x, Ax = b, x in K``) to Clarabel, which copes
    with problems that have no strictly feasible point.  The primal block
    matrix is written to ``solution_path`` in the format read by
    :func:`import_solution`; returns ``(phase, info)``.
    """
    try:
        import sdpap
    except ImportError as exc:               # pragma: no cover - optional dependency
        raise SolverFailure("the sdpa-python package is required for external solves") from exc
    if backend not in SDPA_BACKENDS:
        raise ValueError("unknown backend %r (expected one of %s)" % (backend, ", ".join(SDPA_BACKENDS)))
    opts = solver_options() if opts is None else {**solver_options(), **opts}
    try:
        A, b, c, K, J = sdpap.importsdpa(str(path))
        with open(path) as fh:
            struct = _read_block_struct(fh)
    except (OSError, ValueError, IndexError) as exc:
        raise ParseError("cannot read SDPA file %s: %s" % (path, exc)) from exc
    if backend == "sdpa":
        option = {"print": "no", "epsilonStar": opts["tol"], "epsilonDash": opts["tol"],
                  "maxIteration": opts["max_iter"]}
        x, y, info, timeinfo, sdpainfo = sdpap.solve(A, b, c, K, J, option)
        phase = str(info.get("phasevalue", ""))
    else:
        x, phase, info = _clarabel_standard_form(A, b, c, K, opts)
    if x is None:
        raise SolverFailure("external solve of %s failed (%s)" % (path, phase))
    x = np.asarray(x.todense() if sp.issparse(x) else x, dtype=float).ravel()
    write_solution(solution_path, struct, _unvec(x, struct), status=phase)
    return phase, info


def _clarabel_standard_form(A, b, c, K, opts):
    import cvxpy as cp

    b = np.asarray(b.todense() if sp.issparse(b) else b, dtype=float).ravel()
    c = np.asarray(c.todense() if sp.issparse(c) else c, dtype=float).ravel()
    x = cp.Variable(A.shape[1])
    cons = [A @ x == b]
    if K.l:
        cons.append(x[:K.l] >= 0)
    pos = K.l
    for size in K.s:
        X = cp.reshape(x[pos:pos + size * size], (size, size), order="F")
        cons += [X == X.T, X >> 0]
        pos += size * size
    prob = cp.Problem(cp.Minimize(c @ x), cons)
    tol = opts["tol"]
    try:
        prob.solve(solver="CLARABEL", tol_gap_abs=tol, tol_gap_rel=tol, tol_feas=tol, max_iter=opts["max_iter"])
    except cp.error.SolverError as exc:
        return None, "solver error: %s" % exc, {}
    return x.value, prob.status, {"objective": prob.value}


def _read_block_struct(fh):
    lines = [ln for ln in fh if ln.strip() and ln[0] not in "*\""]
    return tuple(int(t) for t in lines[2].replace(",", " ").replace("{", " ").replace("}", " ").split())


def _unvec(x, struct):
    """Split sdpap's primal vector (diagonal blocks first, then dense) into blocks."""
    blocks = [None] * len(struct)
    pos = 0
    for k, s in enumerate(struct):
        if s < 0:
            blocks[k] = np.diag(x[pos:pos - s])
            pos += -s
    for k, s in enumerate(struct):
        if s > 0:
            M = x[pos:pos + s * s].reshape(s, s)
            blocks[k] = 0.5 * (M + M.T)
            pos += s * s
    return blocks


def write_solution(path, struct, blocks, status=""):
    lines = ["* piegain sdpa solution %s" % status, str(len(struct)),
             " ".join(str(s) for s in struct)]
    body = []
    for b, (s, M) in enumerate(zip(struct, blocks), start=1):
        n = abs(s)
        for i in range(n):
            for j in range(i if s > 0 else i, n if s > 0 else i + 1):
                body.append("%d %d %d %s" % (b, i + 1, j + 1, _fmt(float(M[i, j]))))
    lines.append(str(len(body)))
    lines += body
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def import_solution(path, problem):
    """Read a solution file and map it back onto the problem's variables.

    The file must match the problem's SDPA block structure exactly; residuals
    are recomputed from the problem data.
    """
    t0 = time.perf_counter()
    layout = sdpa_layout(problem, problem.forced_zeros())
    try:
        with open(path) as fh:
            lines = [ln.strip() for ln in fh if ln.strip()]
    except OSError as exc:
        raise ParseError("cannot read %s: %s" % (path, exc)) from exc
    status = OPTIMAL
    if lines and lines[0].startswith("* piegain sdpa solution"):
        status = _SDPA_PHASES.get(lines[0].split()[-1] if len(lines[0].split()) > 4 else "", NEAR_OPTIMAL)
    lines = [ln for ln in lines if not ln.startswith("*")]
    try:
        nblock = int(lines[0])
        struct = tuple(int(t) for t in lines[1].split())
        nent = int(lines[2])
        body = lines[3:]
    except (IndexError, ValueError) as exc:
        raise ParseError("malformed solution header in %s" % path) from exc
    if nblock != len(struct):
        raise ParseError("header declares %d blocks but lists %d sizes" % (nblock, len(struct)))
    if struct != layout.block_struct:
        raise ShapeMismatch("solution has block structure %s, problem needs %s"
                            % (struct, layout.block_struct))
    if len(body) != nent:
        raise ParseError("expected %d entries, found %d (truncated file?)" % (nent, len(body)))
    vals = {}
    for ln in body:
        tok = ln.split()
        if len(tok) != 4:
            raise ParseError("bad solution entry %r" % ln)
        try:
            b, i, j = (int(t) for t in tok[:3])
            vals[(b, min(i, j), max(i, j))] = float(tok[3])
        except ValueError as exc:
            raise ParseError("bad solution entry %r" % ln) from exc
    v = np.zeros(problem.n_vars)
    for k, pl in enumerate(layout.placements):
        total = 0.0
        for (b, i, j, sign) in pl:
            key = (b, i, j)
            if key not in vals:
                raise ParseError("solution lacks entry %s" % (key,))
            total += sign * vals[key]
        v[k] = total
    if status == INFEASIBLE:
        return _finish(problem, status, None, float("nan"), t0, detail="imported from %s" % path)
    return _finish(problem, status, v, float("nan"), t0, detail="imported from %s" % path)
