"""Independent numerical estimates of the L2-gain.

None of this touches the operator machinery: delay and ODE systems are
swept in frequency, the heat example is semi-discretized by central
differences.  The values are *estimates* (lower bounds up to grid error) used
to sanity-check certified upper bounds.
"""
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import UnstableDiscretization

OMEGA_MIN = 1e-3
OMEGA_MAX = 1e3
N_GRID = 2000
REFINE_TOL = 1e-6


@dataclass(frozen=True)
class DelaySystem:
    """``x' = A0 x + A1 x(t - tau) + B w``, ``y = C x + D w``."""

    A0: np.ndarray
    A1: np.ndarray
    B: np.ndarray
    C: np.ndarray
    tau: float = 1.0
    D: np.ndarray = None

    def __post_init__(self):
        A0 = np.atleast_2d(np.asarray(self.A0, dtype=float))
        A1 = np.atleast_2d(np.asarray(self.A1, dtype=float))
        n = A0.shape[0]
        B = np.asarray(self.B, dtype=float).reshape(n, -1)
        C = np.atleast_2d(np.asarray(self.C, dtype=float))
        if A0.shape != (n, n) or A1.shape != (n, n):
            raise ValueError("A0 and A1 must be square of equal size")
        if C.shape[1] != n:
            raise ValueError("C must have %d columns" % n)
        D = np.zeros((C.shape[0], B.shape[1])) if self.D is None else np.atleast_2d(
            np.asarray(self.D, dtype=float))
        if self.tau < 0:
            raise ValueError("delay must be non-negative")
        for k, v in dict(A0=A0, A1=A1, B=B, C=C, D=D, tau=float(self.tau)).items():
            object.__setattr__(self, k, v)

    def response(self, omega):
        """Frequency response matrix at real frequency ``omega``."""
        n = self.A0.shape[0]
        M = 1j * omega * np.eye(n) - self.A0 - self.A1 * np.exp(-1j * omega * self.tau)
        return self.C @ np.linalg.solve(M, self.B) + self.D


@dataclass(frozen=True)
class DiscretizedLti:
    """Dense state-space model ``(A, B, C, D)``."""

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    def response(self, omega):
        n = self.A.shape[0]
        return self.C @ np.linalg.solve(1j * omega * np.eye(n) - self.A, self.B) + self.D

    def is_hurwitz(self):
        return bool(np.max(np.linalg.eigvals(self.A).real) < 0)

    def poles(self):
        return np.linalg.eigvals(self.A)


def _sigma_max(resp, omega):
    try:
        G = resp(omega)
    except np.linalg.LinAlgError:
        return np.inf
    if not np.all(np.isfinite(G)):
        return np.inf
    return float(np.linalg.norm(G, 2)) if G.size else 0.0


def sweep(resp, omega_max=OMEGA_MAX, n_grid=N_GRID, extra=()):
    """Peak of ``sigma_max(resp(omega))`` over a log grid, refined by golden section.

    Returns ``(peak, omega_at_peak)``.  ``extra`` adds candidate frequencies
    (e.g. imaginary parts of poles) to the grid.
    """
    grid = np.concatenate([[0.0], np.logspace(np.log10(OMEGA_MIN), np.log10(omega_max), int(n_grid)),
                           [w for w in np.abs(np.asarray(extra, dtype=float)) if 0 < w < omega_max]])
    grid = np.unique(grid)
    vals = np.array([_sigma_max(resp, w) for w in grid])
    if np.any(np.isinf(vals)):
        return np.inf, float(grid[np.argmax(np.isinf(vals))])
    best_val, best_w = float(vals.max()), float(grid[vals.argmax()])
    # refine around every local maximum within a whisker of the best one
    for k in np.flatnonzero(vals >= 0.5 * best_val):
        if 0 < k < len(grid) - 1 and not (vals[k] >= vals[k - 1] and vals[k] >= vals[k + 1]):
            continue
        lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
        if hi <= lo:
            continue
        res = minimize_scalar(lambda w: -_sigma_max(resp, w), bounds=(lo, hi), method="bounded",
                              options={"xatol": REFINE_TOL})
        if -res.fun > best_val:
            best_val, best_w = float(-res.fun), float(res.x)
    return best_val, best_w


def tds_hinf(sys, omega_max=OMEGA_MAX, n_grid=N_GRID):
    """H-infinity norm estimate of a delay system by frequency sweep.

    The caller is responsible for stability; a singular resolvent on the
    grid is reported as ``inf``.
    """
    return sweep(sys.response, omega_max, n_grid)[0]


def lti_hinf(A, B, C, D=None, omega_max=OMEGA_MAX, n_grid=N_GRID):
    """H-infinity norm of a stable LTI system (frequency sweep seeded with pole frequencies)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.asarray(B, dtype=float).reshape(A.shape[0], -1)
    C = np.atleast_2d(np.asarray(C, dtype=float))
    D = np.zeros((C.shape[0], B.shape[1])) if D is None else np.atleast_2d(np.asarray(D, dtype=float))
    lti = DiscretizedLti(A, B, C, D)
    if not lti.is_hurwitz():
        return np.inf
    poles = lti.poles()
    return sweep(lti.response, max(omega_max, 10 * float(np.max(np.abs(poles)))), n_grid,
                 extra=poles.imag)[0]


# ---------------------------------------------------------------------------
# heat equation coupled to an ODE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class HeatOdeExample:
    """``x' = a x + k w(0) + d``, ``w_t = w_ss + d``, ``w_s(0) = 0``, ``w(L) = 0``.

    Output ``y = cx * x + ci * int_0^L w ds``.
    """

    a: float = -3.0
    coupling: float = 1.0
    length: float = 1.0
    cx: float = 0.0
    ci: float = 1.0


def discretize_heat(ex, N):
    """Central-difference model with ``N`` intervals (unknowns ``w_0 .. w_{N-1}``, ``w_N = 0``)."""
    if N < 10:
        raise ValueError("need at least 10 grid intervals")
    h = ex.length / N
    n = N + 1                      # x, w_0 .. w_{N-1}
    A = np.zeros((n, n))
    A[0, 0] = ex.a
    A[0, 1] = ex.coupling
    for i in range(N):
        r = 1 + i
        A[r, r] = -2.0 / h ** 2
        if i == 0:
            A[r, r + 1] = 2.0 / h ** 2            # ghost node w_{-1} = w_1 (w_s(0) = 0)
        else:
            A[r, r - 1] = 1.0 / h ** 2
            if i < N - 1:
                A[r, r + 1] = 1.0 / h ** 2        # w_N = 0 drops out
    B = np.ones((n, 1))
    C = np.zeros((1, n))
    C[0, 0] = ex.cx
    C[0, 1:] = ex.ci * h                           # trapezoid rule, w_N = 0
    C[0, 1] = 0.5 * ex.ci * h
    return DiscretizedLti(A, B, C, np.zeros((1, 1)))


def fd_gain(ex=None, N=100, omega_max=OMEGA_MAX, n_grid=N_GRID):
    """L2-gain of the finite-difference model of :class:`HeatOdeExample`."""
    ex = ex or HeatOdeExample()
    lti = discretize_heat(ex, int(N))
    if not lti.is_hurwitz():
        raise UnstableDiscretization("finite-difference model has poles in the closed right half-plane")
    return sweep(lti.response, max(omega_max, 10 * float(np.max(np.abs(lti.poles())))), n_grid)[0]


def fd_convergence(ex=None, grids=(25, 50, 100, 200)):
    """``[(N, gain)]`` for a sequence of grids (reported, not asserted)."""
    return [(int(N), fd_gain(ex, N)) for N in grids]


# ---------------------------------------------------------------------------
# recognizing oracle-friendly systems
# ---------------------------------------------------------------------------

def _const(mp):
    """Value of a data MatPoly in ``s`` if it is constant, else None."""
    if not mp.rows or not mp.cols:
        return np.zeros((mp.rows, mp.cols))
    a, b = mp.domain
    vals = [np.asarray(mp.evaluate({"s": x}), dtype=float).reshape(mp.rows, mp.cols)
            for x in (a, 0.5 * (a + b), b, a + 0.31 * (b - a))]
    if any(not np.allclose(v, vals[0], rtol=0, atol=1e-12) for v in vals[1:]):
        return None
    return vals[0]


def lti_of(sys):
    """``(A, B, C, D)`` of a system without distributed state."""
    if sys.nz:
        raise ValueError("system has distributed states; not a pure ODE")
    return sys.A, sys.B_wo, sys.C, sys.D_w


def delay_of(sys):
    """Recover a :class:`DelaySystem` from the history-transport encoding.

    Accepts exactly the structure produced by ``system_model.delay_system``;
    raises ``ValueError`` otherwise.
    """
    nx = sys.nx
    if sys.n1 or sys.n3 or sys.n2 != nx or sys.domain != (0.0, 1.0):
        raise ValueError("not a delay system: expected n1=n3=0, n2=nx on [0, 1]")
    A1 = _const(sys.A1)
    if A1 is None or not np.allclose(A1, A1[0, 0] * np.eye(nx)) or A1[0, 0] <= 0:
        raise ValueError("not a delay system: A1 must be I/tau")
    tau = 1.0 / A1[0, 0]
    expect_B = np.hstack([np.zeros((nx, nx)), np.eye(nx)])
    row_space_ok = np.allclose(sys.B, expect_B) and np.allclose(sys.B1, np.eye(nx)) and not np.any(sys.B2)
    others = [sys.A0, sys.A2, sys.E, sys.B_wp, sys.Ca, sys.Cb, sys.Ea, sys.Eb]
    if not row_space_ok or any(not m.is_zero() for m in others) or np.any(sys.E1[:, nx:]) or np.any(sys.C1):
        raise ValueError("not a delay system: unexpected boundary or coupling terms")
    return DelaySystem(sys.A, sys.E1[:, :nx], sys.B_wo, sys.C, tau, sys.D_w)


def heat_of(sys):
    """Recover a :class:`HeatOdeExample` from its ODE-PDE encoding, or raise ``ValueError``."""
    dims_ok = (sys.n1, sys.n2, sys.n3, sys.nx, sys.nw, sys.ny) == (0, 0, 1, 1, 1, 1)
    if not dims_ok or sys.domain[0] != 0.0:
        raise ValueError("not the heat/ODE example: wrong dimensions or domain")
    A2, Bwp, Ca = _const(sys.A2), _const(sys.B_wp), _const(sys.Ca)
    bc = np.array([[0, 0, 1, 0], [0, 1, 0, 0]], dtype=float)
    if (A2 is None or Bwp is None or Ca is None or not np.isclose(A2[0, 0], 1.0)
            or not np.isclose(Bwp[0, 0], 1.0) or not np.isclose(sys.B_wo[0, 0], 1.0)
            or np.linalg.matrix_rank(np.vstack([sys.B, bc])) != 2
            or np.any(sys.E1[0, 1:]) or np.any(sys.B1) or np.any(sys.B2)):
        raise ValueError("not the heat/ODE example: unexpected structure")
    return HeatOdeExample(a=float(sys.A[0, 0]), coupling=float(sys.E1[0, 0]),
                          length=float(sys.domain[1]), cx=float(sys.C[0, 0]), ci=float(Ca[0, 0]))


def oracle_gain(sys, method="tds", grid=100):
    """Dispatch used by the command line: ``tds`` (delay / pure ODE) or ``fd`` (heat example)."""
    if method == "tds":
        if not sys.nz:
            return lti_hinf(*lti_of(sys))
        return tds_hinf(delay_of(sys))
    if method == "fd":
        return fd_gain(heat_of(sys), grid)
    raise ValueError("unknown oracle method %r (expected 'tds' or 'fd')" % method)
