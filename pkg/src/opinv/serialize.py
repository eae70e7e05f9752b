"""JSON formats and a deterministic writer.

Rationals are written as strings (``"3"``, ``"-1/2"``) and floats with 17
significant digits, so values roundtrip losslessly.

Formats::

    polynomial      {"dim": d, "degree": k, "terms": [{"exp": [...], "coef": c}]}
    base polynomial {"dim": d, "terms": [...]}              (no "degree")
    symbol field    a polynomial whose "coef" entries are base polynomials
    operator        {"dim": d, "order": k, "coeffs": [{"alpha": [...], "poly": base}]}
    connection      {"dim": d, "gamma": [[[base]]]}          indexed [i][k][j]
    model surface   {"n", "order", "labels", "alphas", "samples", "chart", "coefficients"}
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import sympy

from .connect import Connection, DiffOperator, TotalSymbol, base_symbols
from .models import ModelSurface
from .polyalg import HomogeneousPoly, Polynomial


class DataError(ValueError):
    """Malformed or invalid input data; the message names the offending field."""


# -- writer -----------------------------------------------------------------


def _scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return '"NaN"'
        if math.isinf(v):
            return '"Infinity"' if v > 0 else '"-Infinity"'
        text = f"{v:.17g}"
        if all(ch not in text for ch in ".e") and "inf" not in text:
            text += ".0"
        return text
    if isinstance(v, Fraction):
        return json.dumps(str(v))
    if isinstance(v, str):
        return json.dumps(v, ensure_ascii=False)
    raise TypeError(f"cannot serialize {type(v).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON text (key order preserved, fixed float format)."""
    out: list = []

    def emit(o, level):
        pad = " " * (indent * (level + 1))
        end = " " * (indent * level)
        if isinstance(o, dict):
            if not o:
                out.append("{}")
                return
            out.append("{\n")
            for i, (k, v) in enumerate(o.items()):
                out.append(f"{pad}{json.dumps(str(k), ensure_ascii=False)}: ")
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "}")
        elif isinstance(o, (list, tuple, np.ndarray)):
            o = list(o)
            if not o:
                out.append("[]")
                return
            if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in o):
                out.append("[" + ", ".join(_scalar(v) for v in o) + "]")
                return
            out.append("[\n")
            for i, v in enumerate(o):
                out.append(pad)
                emit(v, level + 1)
                out.append(",\n" if i < len(o) - 1 else "\n")
            out.append(end + "]")
        else:
            out.append(_scalar(o))

    emit(obj, 0)
    return "".join(out) + "\n"


# -- scalar and polynomial formats -------------------------------------------


def coef_to_json(c):
    if isinstance(c, Polynomial):
        return base_poly_to_json(c)
    if isinstance(c, sympy.Basic):
        return {"expr": str(c)}
    if isinstance(c, Fraction):
        return str(c)
    if isinstance(c, (int, np.integer)):
        return str(int(c))
    return float(c)


def coef_from_json(v, where: str, base_dim: int | None = None):
    if isinstance(v, bool):
        raise DataError(f"{where}: boolean is not a coefficient")
    if isinstance(v, int):
        return Fraction(v)
    if isinstance(v, float):
        return v
    if isinstance(v, str):
        try:
            return Fraction(v.strip())
        except (ValueError, ZeroDivisionError):
            raise DataError(f"{where}: cannot parse {v!r} as a rational number") from None
    if isinstance(v, dict) and "terms" in v:
        p = base_poly_from_json(v, where)
        if base_dim is not None and p.dim != base_dim:
            raise DataError(f"{where}: base dimension {p.dim}, expected {base_dim}")
        return p
    if isinstance(v, dict) and "expr" in v:
        try:
            return sympy.sympify(v["expr"], locals={str(s): s for s in base_symbols(base_dim or 0)})
        except (sympy.SympifyError, TypeError) as exc:
            raise DataError(f"{where}: cannot parse expression: {exc}") from None
    raise DataError(f"{where}: unsupported coefficient {v!r}")


def _terms_to_json(p: Polynomial) -> list:
    return [{"exp": list(e), "coef": coef_to_json(c)} for e, c in p.terms()]


def base_poly_to_json(p: Polynomial) -> dict:
    return {"dim": p.dim, "terms": _terms_to_json(p)}


def poly_to_json(P: HomogeneousPoly) -> dict:
    return {"dim": P.dim, "degree": P.degree, "terms": _terms_to_json(P)}


def _require(data, keys, where):
    if not isinstance(data, dict):
        raise DataError(f"{where}: expected an object")
    for k in keys:
        if k not in data:
            raise DataError(f"{where}: missing field {k!r}")


def _int(v, where):
    if isinstance(v, bool) or not isinstance(v, int):
        raise DataError(f"{where}: expected an integer, got {v!r}")
    return v


def _exponent(v, dim, where):
    if not isinstance(v, list) or len(v) != dim:
        raise DataError(f"{where}: expected a list of {dim} non-negative integers")
    out = tuple(_int(x, where) for x in v)
    if any(x < 0 for x in out):
        raise DataError(f"{where}: negative exponent {list(out)}")
    return out


def _parse_terms(data, dim, where, base_dim=None):
    terms = data["terms"]
    if not isinstance(terms, list):
        raise DataError(f"{where}.terms: expected a list")
    out = []
    for i, t in enumerate(terms):
        w = f"{where}.terms[{i}]"
        _require(t, ("exp", "coef"), w)
        out.append((_exponent(t["exp"], dim, f"{w}.exp"), coef_from_json(t["coef"], f"{w}.coef", base_dim)))
    return out


def base_poly_from_json(data, where: str = "polynomial") -> Polynomial:
    _require(data, ("dim", "terms"), where)
    dim = _int(data["dim"], f"{where}.dim")
    return Polynomial(dim, _parse_terms(data, dim, where))


def poly_from_json(data, where: str = "polynomial", base_dim: int | None = None) -> HomogeneousPoly:
    """Homogeneous polynomial; coefficients may be base polynomials (a symbol field)."""
    _require(data, ("dim", "degree", "terms"), where)
    dim = _int(data["dim"], f"{where}.dim")
    deg = _int(data["degree"], f"{where}.degree")
    if dim < 1 or deg < 0:
        raise DataError(f"{where}: need dim >= 1 and degree >= 0")
    terms = _parse_terms(data, dim, where, base_dim)
    for i, (e, _) in enumerate(terms):
        if sum(e) != deg:
            raise DataError(f"{where}.terms[{i}]: exponent {list(e)} has degree {sum(e)}, "
                            f"expected {deg} (non-homogeneous term)")
    return HomogeneousPoly(dim, deg, terms)


def operator_to_json(A: DiffOperator) -> dict:
    return {"dim": A.dim, "order": A.order,
            "coeffs": [{"alpha": list(a), "poly": base_poly_to_json(c)} for a, c in A.items()]}


def operator_from_json(data, where: str = "operator") -> DiffOperator:
    _require(data, ("dim", "order", "coeffs"), where)
    dim = _int(data["dim"], f"{where}.dim")
    order = _int(data["order"], f"{where}.order")
    if not isinstance(data["coeffs"], list):
        raise DataError(f"{where}.coeffs: expected a list")
    coeffs = {}
    for i, t in enumerate(data["coeffs"]):
        w = f"{where}.coeffs[{i}]"
        _require(t, ("alpha", "poly"), w)
        a = _exponent(t["alpha"], dim, f"{w}.alpha")
        if sum(a) > order:
            raise DataError(f"{w}.alpha: |alpha| = {sum(a)} exceeds declared order {order}")
        p = coef_from_json(t["poly"], f"{w}.poly", dim)
        if not isinstance(p, Polynomial):
            p = Polynomial.constant(dim, p)
        if a in coeffs:
            raise DataError(f"{w}.alpha: duplicate multi-index {list(a)}")
        coeffs[a] = p
    return DiffOperator(dim, order, coeffs)


def connection_to_json(conn: Connection) -> dict:
    return {"dim": conn.dim,
            "gamma": [[[coef_to_json(c) for c in row] for row in G] for G in conn.gamma]}


def connection_from_json(data, where: str = "connection") -> Connection:
    _require(data, ("dim", "gamma"), where)
    d = _int(data["dim"], f"{where}.dim")
    g = data["gamma"]
    if not (isinstance(g, list) and len(g) == d and all(
            isinstance(G, list) and len(G) == d and all(isinstance(r, list) and len(r) == d for r in G)
            for G in g)):
        raise DataError(f"{where}.gamma: expected a {d}x{d}x{d} nested list")
    gamma = [[[coef_from_json(c, f"{where}.gamma[{i}][{k}][{j}]", d) for j, c in enumerate(r)]
              for k, r in enumerate(G)] for i, G in enumerate(g)]
    return Connection(d, gamma)


def total_symbol_to_json(ts: TotalSymbol) -> dict:
    return {"order": ts.order, "parts": [poly_to_json(p) for p in ts.parts]}


def surface_to_json(S: ModelSurface) -> dict:
    return {
        "n": S.n,
        "order": S.order,
        "labels": list(S.labels),
        "alphas": [list(a) for a in S.alphas],
        "samples": [{"x": [coef_to_json(v) for v in x], "y": [coef_to_json(v) for v in y],
                     "Y": [coef_to_json(v) for v in Y]} for x, y, Y in S.samples],
        "chart": [base_poly_to_json(p) for p in S.chart],
        "coefficients": [base_poly_to_json(p) for p in S.coefficients],
    }


def surface_from_json(data, where: str = "surface") -> ModelSurface:
    _require(data, ("n", "order", "labels", "alphas", "samples", "chart", "coefficients"), where)
    n = _int(data["n"], f"{where}.n")
    alphas = tuple(_exponent(a, n, f"{where}.alphas[{i}]") for i, a in enumerate(data["alphas"]))
    chart = tuple(base_poly_from_json(p, f"{where}.chart[{i}]") for i, p in enumerate(data["chart"]))
    coeffs = tuple(base_poly_from_json(p, f"{where}.coefficients[{i}]")
                   for i, p in enumerate(data["coefficients"]))
    if len(chart) != n or len(coeffs) != len(alphas):
        raise DataError(f"{where}: chart/coefficient counts do not match n and alphas")
    samples = []
    for i, s in enumerate(data["samples"]):
        w = f"{where}.samples[{i}]"
        _require(s, ("x", "y", "Y"), w)
        samples.append(tuple(tuple(coef_from_json(v, f"{w}.{key}") for v in s[key]) for key in ("x", "y", "Y")))
    if not samples:
        raise DataError(f"{where}.samples: empty")
    return ModelSurface(n, _int(data["order"], f"{where}.order"), tuple(data["labels"]), alphas,
                        tuple(samples), chart, coeffs)


def value_to_json(v):
    """Generic conversion for report payloads."""
    if isinstance(v, HomogeneousPoly):
        return poly_to_json(v)
    if isinstance(v, Polynomial):
        return base_poly_to_json(v)
    if isinstance(v, (Fraction, int, float, np.integer, np.floating, sympy.Basic)):
        return coef_to_json(v)
    if isinstance(v, dict):
        return {str(k): value_to_json(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [value_to_json(x) for x in v]
    return v


# -- files -----------------------------------------------------------------


def load_json(path) -> object:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataError(f"{path}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None


def detect_kind(data) -> str:
    if not isinstance(data, dict):
        raise DataError("top-level JSON value must be an object")
    if "gamma" in data:
        return "connection"
    if "samples" in data:
        return "surface"
    if "coeffs" in data:
        return "operator"
    if "terms" in data:
        if "degree" not in data:
            return "base_polynomial"
        coefs = [t.get("coef") for t in data["terms"] if isinstance(t, dict)]
        return "symbol_field" if any(isinstance(c, dict) for c in coefs) else "polynomial"
    raise DataError("cannot tell what kind of object this file holds")


def _unwrap_report(data):
    """A ``model`` or symbolic ``wagner`` report stands for the surface or connection it holds."""
    if isinstance(data, dict) and "command" in data and isinstance(data.get("result"), dict):
        for key in ("surface", "connection"):
            if isinstance(data["result"].get(key), dict):
                return data["result"][key]
    return data


def parse_inputs(paths) -> list:
    """Typed values from JSON files, one per path, in order.

    Files may also be reports written by the CLI; see :func:`_unwrap_report`.
    """
    out = []
    for p in paths:
        data = _unwrap_report(load_json(p))
        kind = detect_kind(data)
        where = str(p)
        try:
            if kind == "connection":
                out.append(connection_from_json(data, where))
            elif kind == "surface":
                out.append(surface_from_json(data, where))
            elif kind == "operator":
                out.append(operator_from_json(data, where))
            elif kind == "base_polynomial":
                out.append(base_poly_from_json(data, where))
            else:
                dim = data.get("dim")
                out.append(poly_from_json(data, where, base_dim=dim if kind == "symbol_field" else None))
        except DataError:
            raise
        except (ValueError, TypeError) as exc:
            raise DataError(f"{where}: {exc}") from None
    return out
