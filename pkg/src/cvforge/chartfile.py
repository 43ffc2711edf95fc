"""Chart files: one JSON document per chart, schema "cvforge/1".

Layout::

    {"schema": "cvforge/1", "m": 1, "n": 1, "d": 4, "zorder": 6, "w": 0, "name": "e1",
     "tensors": {"U": [{"row": 0, "col": 0, "terms": [{"t": [1], "tbar": [0], "re": 1.0, "im": 0.0}]}],
                 "C[0]": [...]},
     "f_structure": {"c": [{"k": 0, "i": 0, "j": 0, "terms": [...]}], "e": [...], "E": [...]}}

Per-coordinate tensors (C, gamma10, gamma01, ctilde) are stored as ``name[i]``.
Omitted tensors are absent, not zero; zero coefficients are not written.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

import numpy as np

from .bundle import LIST_TENSOR_NAMES, ChartBundle, VectorFieldJet
from .jets import JetContext, MatrixJet, context
from .unfolding import FStructure

__all__ = ["SCHEMA", "SchemaError", "InvariantViolation", "dump_chart", "dumps_chart", "load_chart", "loads_chart"]

SCHEMA = "cvforge/1"
SINGLE_NAMES = ("U", "V", "Q", "g", "h", "kappa", "utilde")
_LIST_KEY = re.compile(r"^([A-Za-z0-9]+)\[(\d+)\]$")


class SchemaError(ValueError):
    """Malformed chart document; the message names the offending line or field."""


class InvariantViolation(ValueError):
    """A loaded chart breaks a record invariant; ``invariant`` names it."""

    def __init__(self, invariant: str, all_violations: list[str] | None = None):
        super().__init__(invariant)
        self.invariant = invariant
        self.violations = all_violations or [invariant]


def _terms(ctx: JetContext, coeffs: np.ndarray) -> list[dict]:
    out = []
    for k in np.flatnonzero(coeffs):
        mono = ctx.monomials[k]
        v = complex(coeffs[k])
        out.append({"t": [int(x) for x in mono[: ctx.m]], "tbar": [int(x) for x in mono[ctx.m :]],
                    "re": float(v.real) + 0.0, "im": float(v.imag) + 0.0})  # no negative zeros
    return out


def _matrix_entries(M: MatrixJet) -> list[dict]:
    out = []
    for r in range(M.rows):
        for c in range(M.cols):
            terms = _terms(M.ctx, M.c[r, c])
            if terms:
                out.append({"row": r, "col": c, "terms": terms})
    return out


def _chart_document(b: ChartBundle, f: FStructure | None = None) -> dict:
    tensors = {}
    for nm, val in b.tensors().items():
        if isinstance(val, list):
            for i, M in enumerate(val):
                tensors[f"{nm}[{i}]"] = _matrix_entries(M)
        else:
            tensors[nm] = _matrix_entries(val)
    doc = {"schema": SCHEMA, "m": b.m, "n": b.n, "d": b.ctx.d, "zorder": b.zorder, "w": b.w,
           "name": b.name, "tensors": tensors}
    if f is not None:
        ctx = f.ctx
        c_entries = []
        for k in range(f.m):
            for i in range(f.m):
                for j in range(f.m):
                    terms = _terms(ctx, f.c[k, i, j])
                    if terms:
                        c_entries.append({"k": k, "i": i, "j": j, "terms": terms})
        doc["f_structure"] = {
            "c": c_entries,
            "e": _matrix_entries(f.e.column()),
            "E": _matrix_entries(f.E.column()),
        }
    return doc


def dumps_chart(b: ChartBundle, f: FStructure | None = None) -> str:
    return json.dumps(_chart_document(b, f), sort_keys=True, indent=1) + "\n"


def dump_chart(b: ChartBundle, path, f: FStructure | None = None) -> None:
    Path(path).write_text(dumps_chart(b, f))


# -- parsing -------------------------------------------------------------------


def _need(obj: dict, key: str, kind, where: str):
    if not isinstance(obj, dict) or key not in obj:
        raise SchemaError(f"{where}: missing field '{key}'")
    val = obj[key]
    if kind is int and (isinstance(val, bool) or not isinstance(val, int)):
        raise SchemaError(f"{where}.{key}: expected integer, got {type(val).__name__}")
    if kind is float and (isinstance(val, bool) or not isinstance(val, (int, float))):
        raise SchemaError(f"{where}.{key}: expected number, got {type(val).__name__}")
    if kind in (list, dict, str) and not isinstance(val, kind):
        raise SchemaError(f"{where}.{key}: expected {kind.__name__}")
    return val


def _read_terms(ctx: JetContext, terms, where: str) -> np.ndarray:
    if not isinstance(terms, list):
        raise SchemaError(f"{where}: terms must be a list")
    coeffs = np.zeros(ctx.N, dtype=complex)
    for q, term in enumerate(terms):
        w = f"{where}[{q}]"
        t = _need(term, "t", list, w)
        tb = _need(term, "tbar", list, w)
        if len(t) != ctx.m or len(tb) != ctx.m or not all(isinstance(x, int) and x >= 0 for x in t + tb):
            raise SchemaError(f"{w}: exponents must be {ctx.m} non-negative integers each")
        key = tuple(t) + tuple(tb)
        if key not in ctx.index:
            raise SchemaError(f"{w}: monomial of degree {sum(key)} exceeds d = {ctx.d}")
        coeffs[ctx.index[key]] += complex(_need(term, "re", float, w), _need(term, "im", float, w))
    return coeffs


def _read_matrix(ctx: JetContext, entries, rows: int, cols: int, where: str) -> MatrixJet:
    if not isinstance(entries, list):
        raise SchemaError(f"{where}: expected a list of entries")
    arr = np.zeros((rows, cols, ctx.N), dtype=complex)
    for p, ent in enumerate(entries):
        w = f"{where}[{p}]"
        r = _need(ent, "row", int, w)
        c = _need(ent, "col", int, w)
        if not (0 <= r < rows and 0 <= c < cols):
            raise SchemaError(f"{w}: index ({r}, {c}) outside {rows} x {cols}")
        arr[r, c] += _read_terms(ctx, _need(ent, "terms", list, w), f"{w}.terms")
    return MatrixJet(ctx, arr)


def _read_document(doc, check: bool) -> tuple[ChartBundle, FStructure | None]:
    if not isinstance(doc, dict):
        raise SchemaError("document: expected a JSON object")
    schema = doc.get("schema")
    if schema != SCHEMA:
        raise SchemaError(f"schema: unsupported version {schema!r} (expected {SCHEMA!r})")
    m = _need(doc, "m", int, "document")
    n = _need(doc, "n", int, "document")
    d = _need(doc, "d", int, "document")
    if m < 1 or n < 1 or d < 2:
        raise SchemaError("document: need m >= 1, n >= 1, d >= 2")
    zorder = doc.get("zorder", 6)
    w = doc.get("w", 0)
    if not isinstance(zorder, int) or not isinstance(w, int):
        raise SchemaError("document: zorder and w must be integers")
    ctx = context(m, d)
    fields: dict = {}
    lists: dict[str, dict[int, MatrixJet]] = {}
    for key, entries in _need(doc, "tensors", dict, "document").items():
        where = f"tensors.{key}"
        lm = _LIST_KEY.match(key)
        if lm and lm.group(1) in LIST_TENSOR_NAMES:
            idx = int(lm.group(2))
            if idx >= m:
                raise SchemaError(f"{where}: coordinate index {idx} >= m = {m}")
            lists.setdefault(lm.group(1), {})[idx] = _read_matrix(ctx, entries, n, n, where)
        elif key in SINGLE_NAMES:
            fields[key] = _read_matrix(ctx, entries, n, n, where)
        else:
            raise SchemaError(f"{where}: unknown tensor name")
    for nm, parts in lists.items():
        missing = sorted(set(range(m)) - set(parts))
        if missing:
            raise SchemaError(f"tensors.{nm}: missing coordinate(s) {missing}")
        fields[nm] = [parts[i] for i in range(m)]
    name = doc.get("name", "")
    b = ChartBundle(ctx=ctx, n=n, w=w, zorder=zorder, name=str(name), **fields)
    if check:
        bad = b.invariant_violations()
        if bad:
            raise InvariantViolation(bad[0], bad)
    f = None
    if "f_structure" in doc:
        fs = _need(doc, "f_structure", dict, "document")
        c = np.zeros((m, m, m, ctx.N), dtype=complex)
        for p, ent in enumerate(_need(fs, "c", list, "f_structure")):
            wh = f"f_structure.c[{p}]"
            k, i, j = (_need(ent, x, int, wh) for x in ("k", "i", "j"))
            if not all(0 <= v < m for v in (k, i, j)):
                raise SchemaError(f"{wh}: index outside 0..{m - 1}")
            c[k, i, j] += _read_terms(ctx, _need(ent, "terms", list, wh), f"{wh}.terms")
        e = VectorFieldJet.from_column(_read_matrix(ctx, _need(fs, "e", list, "f_structure"), m, 1, "f_structure.e"))
        E = VectorFieldJet.from_column(_read_matrix(ctx, _need(fs, "E", list, "f_structure"), m, 1, "f_structure.E"))
        f = FStructure(ctx, c, e, E)
    return b, f


def loads_chart(text: str, check: bool = True) -> tuple[ChartBundle, FStructure | None]:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return _read_document(doc, check)


def load_chart(path, check: bool = True) -> tuple[ChartBundle, FStructure | None]:
    return loads_chart(Path(path).read_text(), check)
