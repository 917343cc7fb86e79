"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

The verdict lines are also collected in the terminal summary ("acceptance
criteria" section).  Targets that the implementation does not reach are left
failing; the analysis is recorded outside the package.
"""
import numpy as np
import pytest

from piegain import analysis, oracle, sdp
from piegain.positivity import VarNamespace, param_positive, phi_d, weight_interval, weight_one
from piegain.pqrs import apply
from piegain.system_model import build_operators, ode_system

from support import (DOMAINS, adjoint_discrepancy, admissible_state, assign_symmetric, boundary_values,
                     direct_quadratic_form, fundamental_of, l2_norm_sq, quadratic_form, rand_dims,
                     rand_matpoly, rand_operator, rand_stable_lti, rand_state, rand_system, random_psd,
                     record, sequential_discrepancy, shipped)

TABLE_I = {"delay_c1": 0.8911, "delay_c2": 2.9366, "delay_c3": 0.2601}
HEAT_GAMMA, HEAT_FD = 0.4269, 0.5941
BEAM_GAMMA = 0.8936

pytestmark = pytest.mark.slow


def _gain(name, d1=2, d2=2):
    sys = shipped(name)
    ops = build_operators(sys)
    try:
        return sys, ops, analysis.min_gain(sys, d1, d2, ops=ops)
    except analysis.Infeasible as exc:
        return sys, ops, exc


@pytest.fixture(scope="module")
def table1():
    return {name: _gain(name) for name in TABLE_I}


@pytest.fixture(scope="module")
def heat():
    return _gain("heat_boundary_control")


@pytest.fixture(scope="module")
def beam():
    return _gain("beam")


@pytest.fixture(scope="module")
def random_lti():
    """20 random stable LTI systems with their certificates and sweep values."""
    rng = np.random.default_rng(8)
    out = []
    for _ in range(20):
        A, B, C, D = rand_stable_lti(rng)
        cert = analysis.min_gain(ode_system(A, B, C, D), 0, 0)
        out.append((cert, oracle.lti_hinf(A, B, C, D)))
    return out


def _describe(cert):
    if isinstance(cert, Exception):
        return "no certificate (%s)" % cert
    return "gamma=%.6f status=%s verified=%s" % (cert.gamma, cert.status, cert.residuals.get("passed"))


def _certified_close(cert, target, rel):
    return (not isinstance(cert, Exception)) and cert.certified and abs(cert.gamma - target) <= rel * target


# -- 1 ----------------------------------------------------------------------------------

def test_criterion_1_table_one(table1):
    ok, parts = True, []
    for name, target in TABLE_I.items():
        cert = table1[name][2]
        good = _certified_close(cert, target, 0.01)
        ok &= good
        parts.append("%s %s (target %.4f)" % (name, _describe(cert), target))
    assert record(1, "delay systems C.1-C.3 within 1%", ok, "; ".join(parts))


# -- 2 ----------------------------------------------------------------------------------

def test_criterion_2_heat_example(heat):
    sys, _, cert = heat
    fd = oracle.fd_gain(oracle.heat_of(sys), 100)
    ok_gamma = _certified_close(cert, HEAT_GAMMA, 0.02)
    ok_fd = abs(fd - HEAT_FD) <= 0.02 * HEAT_FD
    detail = "certified %s (target %.4f); fd_gain(N=100)=%.6f (target %.4f)" % (
        _describe(cert), HEAT_GAMMA, fd, HEAT_FD)
    assert record(2, "heat/ODE gain and finite-difference oracle within 2%", ok_gamma and ok_fd, detail)


# -- 3 ----------------------------------------------------------------------------------

def test_criterion_3_beam_example(beam):
    _, _, cert = beam
    ok = _certified_close(cert, BEAM_GAMMA, 0.02)
    assert record(3, "beam example within 2%", ok, "%s (target %.4f)" % (_describe(cert), BEAM_GAMMA))


# -- 4 ----------------------------------------------------------------------------------

def test_criterion_4_oracle_soundness(table1, random_lti):
    worst, parts = np.inf, []
    for name, (sys, _, cert) in table1.items():
        est = oracle.oracle_gain(sys)
        margin = (cert.gamma if not isinstance(cert, Exception) else np.inf) - est
        worst = min(worst, margin)
        parts.append("%s gamma-oracle=%.2e" % (name, margin))
    for name in ("passive_ode", "nonpassive_ode", "mismatched_io"):
        sys = shipped(name)
        cert = analysis.min_gain(sys, 0, 0)
        margin = cert.gamma - oracle.oracle_gain(sys)
        worst = min(worst, margin)
        parts.append("%s %.2e" % (name, margin))
    worst = min(worst, min(c.gamma - h for c, h in random_lti))
    c1_oracle = oracle.oracle_gain(table1["delay_c1"][0])
    ok = worst >= -1e-3 and abs(c1_oracle - 0.891) <= 1e-3
    detail = "min(gamma - oracle)=%.2e over Table I, shipped and 20 random ODEs [%s]; C.1 oracle=%.6f" % (
        worst, ", ".join(parts), c1_oracle)
    assert record(4, "certified gamma >= oracle - 1e-3", ok, detail)


# -- 5 ----------------------------------------------------------------------------------

def _random_pair(rng):
    dom = DOMAINS[int(rng.integers(len(DOMAINS)))]
    m, n, p = (int(v) for v in rng.integers(0, 4, size=3))
    q, r, u = (int(v) for v in rng.integers(1, 4, size=3))
    deg = int(rng.integers(0, 4))
    B = rand_operator(rng, (m, q), (n, r), deg, dom)
    A = rand_operator(rng, (n, r), (p, u), deg, dom)
    return A, B, dom


def test_criterion_5_compose_and_adjoint():
    rng = np.random.default_rng(5)
    worst_c, worst_a, n = 0.0, 0.0, 500
    for _ in range(n):
        A, B, dom = _random_pair(rng)
        x, z = rand_state(rng, B.dims_in[0], B.dims_in[1], 3, dom)
        worst_c = max(worst_c, sequential_discrepancy(A, B, x, z))
        u = rand_state(rng, B.dims_in[0], B.dims_in[1], 3, dom)
        v = rand_state(rng, B.dims_out[0], B.dims_out[1], 3, dom)
        worst_a = max(worst_a, adjoint_discrepancy(B, u, v))
    ok = worst_c <= 1e-8 and worst_a <= 1e-8
    detail = "%d random cases; worst compose discrepancy %.2e, worst adjoint discrepancy %.2e" % (
        n, worst_c, worst_a)
    assert record(5, "compose/adjoint randomized identities at 1e-8", ok, detail)


# -- 6 ----------------------------------------------------------------------------------

def test_criterion_6_positivity():
    rng = np.random.default_rng(6)
    worst, worst_direct, n_inst, n_samp = np.inf, 0.0, 200, 100
    for k in range(n_inst):
        dom = DOMAINS[k % 3]
        m, n, d = int(rng.integers(0, 3)), int(rng.integers(1, 3)), int(rng.integers(0, 3))
        if k % 3 == 2:
            op, certs = phi_d(m, n, d, VarNamespace(), dom, label="T")
        else:
            g = weight_one(dom) if k % 3 == 0 else weight_interval(dom)
            op, cert = param_positive(m, n, d, g, name="T")
            certs = (cert,)
        if k % 2:
            # rank-deficient T: forms get close to zero, which is where sign errors would show
            Ts = [(lambda G: G @ G.T)(rng.standard_normal((c.size, max(1, c.size // 2)))) for c in certs]
        else:
            Ts = [random_psd(rng, c.size) for c in certs]
        vals = {}
        for c, T in zip(certs, Ts):
            vals.update(assign_symmetric(c.name, T))
        opn = op.assign(vals)
        for j in range(n_samp):
            x, z = rand_state(rng, m, n, 3, dom)
            q = quadratic_form(opn, x, z)
            worst = min(worst, q)
            if j == 0 and len(certs) == 1:
                # cross-check against the factorization, computed independently
                direct = direct_quadratic_form(certs[0], Ts[0], x, z, dom)
                worst_direct = max(worst_direct, abs(q - direct) / (1 + abs(direct)))
    ok = worst >= -1e-8 and worst_direct <= 1e-8
    detail = "%d instances (half with rank-deficient T) x %d samples; min quadratic form %.3e; factorization cross-check %.1e" % (
        n_inst, n_samp, worst, worst_direct)
    assert record(6, "positive operators have non-negative quadratic forms", ok, detail)


# -- 7 ----------------------------------------------------------------------------------

def test_criterion_7_fundamental_round_trip():
    worst_rt, worst_bc, n = 0.0, 0.0, 100
    for seed in range(n):
        rng = np.random.default_rng(7000 + seed)
        dims = rand_dims(rng)
        dom = DOMAINS[seed % 3]
        sys = rand_system(rng, *dims, domain=dom)
        w, x = rng.standard_normal(sys.nw), rng.standard_normal(sys.nx)
        wx = np.concatenate([w, x])
        ops = build_operators(sys)
        zp = admissible_state(rng, sys, w, x)
        _, zr = apply(ops.Pp, wx, fundamental_of(sys, zp))
        # evaluate both states separately: a symbolic difference would prune tiny coefficients
        err = lambda s: zr.at(s=s)[..., 0] - zp.at(s=s)[..., 0]
        worst_rt = max(worst_rt, np.sqrt(l2_norm_sq(err, dom)))
        zf = rand_matpoly(rng, sys.nz, 1, 3, domain=dom)
        _, zb = apply(ops.Pp, wx, zf)
        resid = sys.B @ boundary_values(sys, zb) - sys.B1 @ x - sys.B2 @ w
        worst_bc = max(worst_bc, float(np.max(np.abs(resid), initial=0.0)))
    ok = worst_rt <= 1e-8 and worst_bc <= 1e-9
    detail = "%d random systems; worst L2 reconstruction error %.2e, worst boundary residual %.2e" % (
        n, worst_rt, worst_bc)
    assert record(7, "fundamental-state round trip", ok, detail)


# -- 8 ----------------------------------------------------------------------------------

def test_criterion_8_ode_degeneration(random_lti):
    rel = [abs(c.gamma - h) / h for c, h in random_lti]
    certified = all(c.certified for c, _ in random_lti)
    ok = max(rel) <= 5e-3 and certified
    detail = "20 random stable LTI systems; worst relative gap to the H-infinity sweep %.2e; all certified: %s" % (
        max(rel), certified)
    assert record(8, "pure-ODE gain matches H-infinity within 0.5%", ok, detail)


# -- 9 ----------------------------------------------------------------------------------

def test_criterion_9_certificate_verification(table1, heat, beam):
    ok, parts = True, []
    cases = dict(table1)
    cases["heat_boundary_control"] = heat
    cases["beam"] = beam
    for name, (_, ops, cert) in cases.items():
        if isinstance(cert, Exception):
            ok = False
            parts.append("%s: no certificate" % name)
            continue
        rep = analysis.verify_certificate(ops, cert)
        ok &= rep.passed and rep.worst <= 1e-6 * rep.scale
        parts.append("%s worst=%.2e scale=%.3g %s" % (name, rep.worst, rep.scale, "ok" if rep.passed else "FAIL"))
    _, ops, cert = table1["delay_c1"]
    tampered = analysis.verify_certificate(ops, cert.with_gamma(cert.gamma / 2))
    ok &= not tampered.passed
    parts.append("tampered C.1 (gamma/2) rejected: %s (worst=%.2e)" % (not tampered.passed, tampered.worst))
    assert record(9, "emitted certificates verify; tampering detected", ok, "; ".join(parts))


# -- 10 ---------------------------------------------------------------------------------

def test_criterion_10_sdpa_round_trip(tmp_path):
    ops = build_operators(shipped("delay_c1"))
    problem = analysis.gain_problem(ops, 2, 2).sdp
    internal = sdp.solve(problem)
    a, b = tmp_path / "c1a.dat-s", tmp_path / "c1b.dat-s"
    sdp.export_sdpa(problem, a)
    sdp.export_sdpa(problem, b)
    deterministic = a.read_bytes() == b.read_bytes()
    phase, _ = sdp.solve_sdpa_file(a, tmp_path / "c1.sol", backend="clarabel")
    imported = sdp.import_solution(tmp_path / "c1.sol", problem)
    diff = abs(imported.assignment[analysis.GAMMA2] - internal.assignment[analysis.GAMMA2])
    ok = deterministic and imported.status == sdp.OPTIMAL and diff <= 1e-6
    # SDPA itself, for information only (it cannot converge on this degenerate problem)
    sdpa_phase, _ = sdp.solve_sdpa_file(a, tmp_path / "c1_sdpa.sol", backend="sdpa")
    sdpa = sdp.import_solution(tmp_path / "c1_sdpa.sol", problem)
    detail = ("byte-identical exports: %s; gamma2 internal %.9f vs file-solved %.9f (|diff| %.1e, %s); "
              "SDPA binary: phase %s, gamma2 %.6f" % (
                  deterministic, internal.assignment[analysis.GAMMA2], imported.assignment[analysis.GAMMA2],
                  diff, phase, sdpa_phase, sdpa.assignment[analysis.GAMMA2]))
    assert record(10, "SDPA export round trip on C.1", ok, detail)
