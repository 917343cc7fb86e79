"""YAML system documents.

A document has a ``dims`` section and up to five block sections::

    name: delay_c1
    dims: {n1: 0, n2: 1, n3: 0, nx: 1, nw: 1, ny: 1, a: 0.0, b: 1.0}
    ode: {A: [[-1.0]], B_wo: [[1.0]], C: [[1.0]]}
    pde: {A1: [[1.0]]}
    boundary: {B: [[0.0, 1.0]], B1: [[1.0]]}
    ode_input: {E1: [[-1.0, 0.0]]}

Polynomial blocks (in ``pde``, ``output`` and ``ode_input``) accept either a
number or a list of coefficients in ascending powers of ``s`` for each entry:
``[0, 1]`` is ``s`` and ``[1, 0, -1]`` is ``1 - s^2``.  Omitted blocks are zero.
"""
from dataclasses import replace

import numpy as np
import yaml

from .errors import ParseError
from .symbolic import MatPoly
from .system_model import OdePdeSystem, _MATRIX_FIELDS

SECTIONS = {
    "ode": ("A", "B_wo", "C", "D_w"),
    "pde": ("A0", "A1", "A2", "E", "B_wp"),
    "boundary": ("B", "B1", "B2"),
    "output": ("C1", "Ca", "Cb"),
    "ode_input": ("E1", "Ea", "Eb"),
}
DIM_KEYS = ("n1", "n2", "n3", "nx", "nw", "ny")


def _as_float(x, where):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ParseError("%s: expected a number, got %r" % (where, x))
    return float(x)


def _matrix(value, shape, where):
    """Numeric matrix of the expected shape (flat lists allowed for vectors)."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [[value]]
    if not isinstance(value, list):
        raise ParseError("%s: expected a matrix (list of rows)" % where)
    if value and not isinstance(value[0], list):
        value = [value] if shape[0] == 1 else [[v] for v in value]
    rows = [[_as_float(x, where) for x in (row if isinstance(row, list) else [row])] for row in value]
    if len({len(r) for r in rows}) > 1:
        raise ParseError("%s: ragged matrix" % where)
    arr = np.array(rows, dtype=float).reshape(len(rows), len(rows[0]) if rows else 0)
    if arr.size == 0 and shape[0] * shape[1] == 0:
        arr = np.zeros(shape)
    return arr


def _poly_matrix(value, shape, domain, where):
    """MatPoly from entries that are numbers or ascending coefficient lists."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        value = [[value]]
    if not isinstance(value, list):
        raise ParseError("%s: expected a matrix (list of rows)" % where)
    if value and not isinstance(value[0], list):
        # a flat list: the entries of a vector, or the coefficients of a 1x1 polynomial
        value = [[value]] if shape == (1, 1) else ([value] if shape[0] == 1 else [[v] for v in value])
    rows = []
    for row in value:
        if not isinstance(row, list):
            raise ParseError("%s: expected a list of rows" % where)
        entries = []
        for e in row:
            coeffs = e if isinstance(e, list) else [e]
            entries.append([_as_float(c, where) for c in coeffs] or [0.0])
        rows.append(entries)
    if len({len(r) for r in rows}) > 1:
        raise ParseError("%s: ragged matrix" % where)
    r, c = len(rows), len(rows[0]) if rows else 0
    if r * c == 0:
        return MatPoly.zeros(*shape, domain=domain)
    deg = max(len(e) for row in rows for e in row) - 1
    terms = {}
    for k in range(deg + 1):
        terms[(k, 0, 0)] = np.array([[e[k] if k < len(e) else 0.0 for e in row] for row in rows])
    return MatPoly.from_terms(terms, shape=(r, c), domain=domain)


def parse_document(text):
    """Parse YAML text into an :class:`OdePdeSystem` (not yet validated).

    A missing ``boundary`` section leaves ``B`` unset when the system has
    boundary conditions to state, so that validation names it.
    """
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ParseError("not valid YAML: %s" % exc) from None
    if doc is None:
        raise ParseError("empty document")
    if not isinstance(doc, dict):
        raise ParseError("document must be a mapping of sections")
    unknown = set(doc) - set(SECTIONS) - {"dims", "name"}
    if unknown:
        raise ParseError("unknown sections: %s" % ", ".join(sorted(map(str, unknown))))
    dims = doc.get("dims")
    if not isinstance(dims, dict):
        raise ParseError("missing 'dims' section")
    bad = set(dims) - set(DIM_KEYS) - {"a", "b"}
    if bad:
        raise ParseError("unknown dims entries: %s" % ", ".join(sorted(map(str, bad))))
    d = {}
    for k in DIM_KEYS:
        v = dims.get(k, 0)
        if isinstance(v, bool) or not isinstance(v, int) or v < 0:
            raise ParseError("dims.%s must be a non-negative integer" % k)
        d[k] = v
    domain = (_as_float(dims.get("a", 0.0), "dims.a"), _as_float(dims.get("b", 1.0), "dims.b"))
    skeleton = OdePdeSystem.create(domain=domain, **d)
    mats = {}
    for sec, keys in SECTIONS.items():
        body = doc.get(sec)
        if body is None:
            continue
        if not isinstance(body, dict):
            raise ParseError("section '%s' must be a mapping" % sec)
        extra = set(body) - set(keys)
        if extra:
            raise ParseError("section '%s': unknown blocks %s" % (sec, ", ".join(sorted(map(str, extra)))))
        for key, value in body.items():
            shape = skeleton.expected_shape(key)
            where = "%s.%s" % (sec, key)
            if _MATRIX_FIELDS[key][1]:
                mats[key] = _poly_matrix(value, shape, domain, where)
            else:
                mats[key] = _matrix(value, shape, where)
    name = str(doc.get("name", ""))
    sys = OdePdeSystem.create(domain=domain, name=name, **d, **mats)
    if skeleton.nc and "B" not in mats:
        sys = replace(sys, B=None)
    return sys


def load_document(path):
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError("cannot read %s: %s" % (path, exc.strerror)) from None
    return parse_document(text)


def _num(x):
    x = float(x)
    return int(x) if x.is_integer() and abs(x) < 2 ** 53 else x


def _matrix_out(arr):
    return [[_num(x) for x in row] for row in np.asarray(arr, dtype=float)]


def _poly_out(mp):
    deg = mp.degree("s")
    r, c = mp.shape
    coefs = np.zeros((r, c, deg + 1))
    for i, j, mono, val in mp.coefficients():
        coefs[i, j, mono.exponents[0]] = val.constant
    out = []
    for i in range(r):
        row = []
        for j in range(c):
            e = coefs[i, j]
            nz = np.flatnonzero(e)
            e = e[:nz[-1] + 1] if nz.size else e[:1]
            row.append(_num(e[0]) if len(e) == 1 else [_num(x) for x in e])
        out.append(row)
    return out


def _is_zero(val):
    if val is None:
        return True
    if isinstance(val, MatPoly):
        return val.is_zero()
    return not np.any(val)


def to_document(sys):
    """Serialize a system; zero blocks are omitted except ``B`` when boundary rows exist."""
    doc = {}
    if sys.name:
        doc["name"] = sys.name
    doc["dims"] = {**{k: int(getattr(sys, k)) for k in DIM_KEYS},
                   "a": _num(sys.domain[0]), "b": _num(sys.domain[1])}
    for sec, keys in SECTIONS.items():
        body = {}
        for key in keys:
            val = getattr(sys, key)
            if _is_zero(val) and not (key == "B" and sys.nc and val is not None):
                continue
            body[key] = _poly_out(val) if isinstance(val, MatPoly) else _matrix_out(val)
        if body:
            doc[sec] = body
    return doc


def dump_document(sys):
    return yaml.safe_dump(to_document(sys), sort_keys=False, default_flow_style=None)


def save_document(sys, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dump_document(sys))
