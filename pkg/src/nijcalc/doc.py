"""Operator-definition documents: a restricted TOML subset.

A document is a flat table of named blocks.  Recognized keys:

======================  =====================================================
``name``                free-form label, echoed in reports
``dim``                 matrix dimension (positive int)
``vars``                chart coordinates, e.g. ``["x1", "x2"]``
``matrix``              dim x dim array of expression strings
``sigma``               characteristic coefficients s1..sn (array of
                        expression strings), or an array of such arrays for
                        a block-diagonal reconstruction
``chi1``, ``chi2``      monic univariate factors in ``t`` with expression
                        coefficients, e.g. ``"t^2 - x1*t + 1"``
``metric_inv``          contravariant metric g^{ij}, array of arrays
``omega``               two-form matrix, array of arrays
``lsa``                 ``{ dim = n, table = [[i, j, k, "value"], ...] }``
                        sparse 1-based structure constants
``point``               a single sample point (array of numbers)
``points``              several sample points (array of arrays)
``samples``, ``seed``   sampling controls (ints)
``tol``                 tolerance override (float)
======================  =====================================================

Only this shape of data is meaningful — scalar values, strings, arrays,
one level of inline table — so the documents stay readable and any
standard TOML reader can parse them.  Parsing is delegated to ``tomli``;
:func:`dump_document` writes the same subset back out deterministically.

Expression strings are validated lazily by the block accessors
(:meth:`OperatorDoc.operator_field` and friends) so that error messages can
point at the offending block and entry.
"""

import io
import json
import sys
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

import tomli

from .errors import DimensionError, DocumentError, NijError
from .geopn import Metric, TwoForm
from .lsa import LSACube
from .scalarfield import Poly, parse_poly, parse_univariate
from .spectral import SigmaList
from .splitfun import Factorization
from .tensorcore import OpField

__all__ = [
    "OperatorDoc",
    "document_for_field",
    "dump_document",
    "load_document",
    "read_document",
]

_KNOWN_KEYS = (
    "name",
    "dim",
    "vars",
    "matrix",
    "sigma",
    "chi1",
    "chi2",
    "metric_inv",
    "omega",
    "lsa",
    "point",
    "points",
    "samples",
    "seed",
    "tol",
)


def _expr(value, where: str) -> str:
    """Accept an expression leaf as a string or an exact integer."""
    if isinstance(value, str):
        return value
    if isinstance(value, int) and not isinstance(value, bool):
        return str(value)
    raise DocumentError(f"{where}: expected an expression string, got {value!r}")


def _string_matrix(value, where: str) -> list[list[str]]:
    if not isinstance(value, list) or not value or not all(isinstance(r, list) for r in value):
        raise DocumentError(f"{where}: expected an array of arrays")
    return [
        [_expr(e, f"{where}[{i + 1}][{j + 1}]") for j, e in enumerate(row)]
        for i, row in enumerate(value)
    ]


def _number_list(value, where: str) -> list[float]:
    if not isinstance(value, list) or not all(
        isinstance(v, (int, float)) and not isinstance(v, bool) for v in value
    ):
        raise DocumentError(f"{where}: expected an array of numbers")
    return [float(v) for v in value]


@dataclass
class OperatorDoc:
    """A validated operator-definition document.

    Structure (shapes, key names, scalar types) is checked here; the
    expression strings themselves are parsed by the accessor methods so a
    bad entry reports its block and position.
    """

    name: str | None = None
    dim: int | None = None
    vars: tuple[str, ...] | None = None
    matrix: list[list[str]] | None = None
    sigma: list[list[str]] | None = None
    chi1: str | None = None
    chi2: str | None = None
    metric_inv: list[list[str]] | None = None
    omega: list[list[str]] | None = None
    lsa: dict | None = None
    point: list[float] | None = None
    points: list[list[float]] | None = None
    samples: int | None = None
    seed: int | None = None
    tol: float | None = None

    # ---- construction ------------------------------------------------------

    @classmethod
    def from_mapping(cls, data: Mapping) -> "OperatorDoc":
        unknown = sorted(set(data) - set(_KNOWN_KEYS))
        if unknown:
            raise DocumentError(f"unknown document key(s): {', '.join(unknown)}")
        doc = cls()

        if "name" in data:
            if not isinstance(data["name"], str):
                raise DocumentError("name: expected a string")
            doc.name = data["name"]
        if "dim" in data:
            d = data["dim"]
            if not isinstance(d, int) or isinstance(d, bool) or d < 1:
                raise DocumentError("dim: expected a positive integer")
            doc.dim = d
        if "vars" in data:
            vs = data["vars"]
            if (
                not isinstance(vs, list)
                or not vs
                or not all(isinstance(v, str) and v for v in vs)
            ):
                raise DocumentError("vars: expected a nonempty array of names")
            if len(set(vs)) != len(vs):
                raise DocumentError("vars: coordinate names must be distinct")
            doc.vars = tuple(vs)

        for key in ("matrix", "metric_inv", "omega"):
            if key not in data:
                continue
            rows = _string_matrix(data[key], key)
            n = len(rows)
            if any(len(r) != n for r in rows):
                raise DocumentError(f"{key}: matrix must be square")
            if doc.dim is not None and n != doc.dim:
                raise DocumentError(f"{key}: {n}x{n} matrix but dim = {doc.dim}")
            setattr(doc, key, rows)

        if "sigma" in data:
            sig = data["sigma"]
            if not isinstance(sig, list) or not sig:
                raise DocumentError("sigma: expected a nonempty array")
            if all(isinstance(b, list) for b in sig):
                blocks = [
                    [_expr(e, f"sigma[{bi + 1}][{i + 1}]") for i, e in enumerate(b)]
                    for bi, b in enumerate(sig)
                ]
                if any(not b for b in blocks):
                    raise DocumentError("sigma: blocks must be nonempty")
            elif any(isinstance(b, list) for b in sig):
                raise DocumentError("sigma: mix of scalars and blocks")
            else:
                blocks = [[_expr(e, f"sigma[{i + 1}]") for i, e in enumerate(sig)]]
            doc.sigma = blocks

        for key in ("chi1", "chi2"):
            if key in data:
                setattr(doc, key, _expr(data[key], key))
        if (doc.chi1 is None) != (doc.chi2 is None):
            raise DocumentError("chi1 and chi2 must be given together")

        if "lsa" in data:
            tab = data["lsa"]
            if not isinstance(tab, dict) or sorted(tab) != ["dim", "table"]:
                raise DocumentError("lsa: expected { dim = n, table = [...] }")
            n = tab["dim"]
            if not isinstance(n, int) or isinstance(n, bool) or n < 1:
                raise DocumentError("lsa.dim: expected a positive integer")
            entries = tab["table"]
            if not isinstance(entries, list):
                raise DocumentError("lsa.table: expected an array of [i, j, k, value] rows")
            rows = []
            for r, ent in enumerate(entries):
                where = f"lsa.table[{r + 1}]"
                if not isinstance(ent, list) or len(ent) != 4:
                    raise DocumentError(f"{where}: expected [i, j, k, value]")
                i, j, k, v = ent
                if not all(isinstance(x, int) and not isinstance(x, bool) for x in (i, j, k)):
                    raise DocumentError(f"{where}: indices must be integers")
                rows.append((i, j, k, _expr(v, f"{where}[4]")))
            doc.lsa = {"dim": n, "table": rows}

        if "point" in data:
            doc.point = _number_list(data["point"], "point")
        if "points" in data:
            pts = data["points"]
            if not isinstance(pts, list):
                raise DocumentError("points: expected an array of points")
            doc.points = [
                _number_list(p, f"points[{i + 1}]") for i, p in enumerate(pts)
            ]
        for key in ("samples", "seed"):
            if key in data:
                v = data[key]
                if not isinstance(v, int) or isinstance(v, bool):
                    raise DocumentError(f"{key}: expected an integer")
                setattr(doc, key, v)
        if "tol" in data:
            v = data["tol"]
            if not isinstance(v, (int, float)) or isinstance(v, bool):
                raise DocumentError("tol: expected a number")
            doc.tol = float(v)

        doc._check_chart()
        return doc

    def _check_chart(self):
        needs_chart = [
            k
            for k in ("matrix", "metric_inv", "omega", "chi1")
            if getattr(self, k) is not None
        ]
        if self.sigma is not None:
            needs_chart.append("sigma")
        if needs_chart and self.vars is None:
            raise DocumentError(f"vars is required by: {', '.join(needs_chart)}")
        if self.matrix is not None and self.dim is None:
            raise DocumentError("dim is required alongside matrix")
        if self.sigma is not None and self.vars is not None:
            total = sum(len(b) for b in self.sigma)
            if total != len(self.vars):
                raise DocumentError(
                    f"sigma has {total} coefficients but vars has {len(self.vars)} names"
                )
        groups = []
        if self.point is not None:
            groups.append(("point", [self.point]))
        if self.points is not None:
            groups.append(("points", self.points))
        for pt_key, pts in groups:
            if self.vars is None:
                raise DocumentError(f"vars is required by: {pt_key}")
            for p in pts:
                if len(p) != len(self.vars):
                    raise DocumentError(
                        f"{pt_key}: expected {len(self.vars)} coordinates, got {len(p)}"
                    )

    # ---- block accessors -----------------------------------------------------

    def _require(self, key: str):
        value = getattr(self, key)
        if value is None:
            raise DocumentError(f"this command needs a {key!r} block")
        return value

    def _parse_matrix(self, key: str) -> OpField:
        rows = self._require(key)
        try:
            return OpField.from_exprs(rows, self.vars)
        except NijError as exc:
            raise DocumentError(f"{key}: {exc}") from exc

    def operator_field(self) -> OpField:
        """The ``matrix`` block as an operator field."""
        return self._parse_matrix("matrix")

    def sigma_lists(self) -> list[SigmaList]:
        """The ``sigma`` block, one SigmaList per block over its own slice of
        ``vars`` (consecutive, one coordinate per coefficient)."""
        blocks = self._require("sigma")
        out = []
        offset = 0
        for bi, block in enumerate(blocks):
            bvars = self.vars[offset : offset + len(block)]
            offset += len(block)
            sigs = []
            for i, text in enumerate(block):
                try:
                    sigs.append(parse_poly(text, bvars))
                except NijError as exc:
                    raise DocumentError(f"sigma[{bi + 1}][{i + 1}]: {exc}") from exc
            out.append(SigmaList(bvars, sigs))
        return out

    def factorization(self) -> Factorization:
        """The ``chi1``/``chi2`` blocks as a monic factorization."""
        self._require("chi1")
        coeffs = []
        for key in ("chi1", "chi2"):
            text = getattr(self, key)
            try:
                asc = parse_univariate(text, "t", self.vars)
            except NijError as exc:
                raise DocumentError(f"{key}: {exc}") from exc
            lead = asc[-1]
            if lead != Poly.const(self.vars, 1):
                raise DocumentError(f"{key}: factor must be monic in t, got leading {lead}")
            coeffs.append(asc)
        return Factorization(coeffs[0], coeffs[1])

    def metric(self) -> Metric:
        """The ``metric_inv`` block as a contravariant metric."""
        rows = self._require("metric_inv")
        try:
            return Metric(rows, self.vars)
        except NijError as exc:
            raise DocumentError(f"metric_inv: {exc}") from exc

    def two_form(self) -> TwoForm:
        """The ``omega`` block as a two-form."""
        rows = self._require("omega")
        try:
            return TwoForm(rows, self.vars)
        except NijError as exc:
            raise DocumentError(f"omega: {exc}") from exc

    def lsa_cube(self) -> LSACube:
        """The ``lsa`` block as structure constants."""
        tab = self._require("lsa")
        entries = []
        for r, (i, j, k, v) in enumerate(tab["table"]):
            try:
                entries.append((i, j, k, Fraction(v)))
            except (ValueError, ZeroDivisionError) as exc:
                raise DocumentError(f"lsa.table[{r + 1}]: {exc}") from exc
        try:
            return LSACube.from_entries(tab["dim"], entries)
        except NijError as exc:
            raise DocumentError(f"lsa: {exc}") from exc

    def sample_point(self) -> list[float]:
        """The declared point, defaulting to the origin of the chart."""
        if self.point is not None:
            return list(self.point)
        if self.vars is None:
            raise DocumentError("a point needs a chart: give vars (and point)")
        return [0.0] * len(self.vars)


# ---------------------------------------------------------------------------
# reading and writing
# ---------------------------------------------------------------------------


def load_document(text: str) -> OperatorDoc:
    """Parse document text into a validated OperatorDoc."""
    try:
        data = tomli.loads(text)
    except tomli.TOMLDecodeError as exc:
        raise DocumentError(f"document syntax: {exc}") from exc
    return OperatorDoc.from_mapping(data)


def read_document(path: str, stdin=None) -> OperatorDoc:
    """Read a document from a file path, or from stdin when path is '-'."""
    if path == "-":
        text = (stdin or sys.stdin).read()
    else:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise DocumentError(f"cannot read {path}: {exc}") from exc
    return load_document(text)


def _render(value) -> str:
    if isinstance(value, bool):
        raise DocumentError("documents do not use booleans")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, str):
        # JSON string escaping is valid for TOML basic strings
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_render(v) for v in value) + "]"
    raise DocumentError(f"cannot render {type(value).__name__} in a document")


def dump_document(entries: Sequence[tuple[str, object]]) -> str:
    """Serialize (key, value) pairs in order; round-trips through load_document.

    Arrays of arrays (matrices, sigma blocks) are written one row per line;
    everything else stays inline.
    """
    out = io.StringIO()
    for key, value in entries:
        if isinstance(value, (list, tuple)) and value and all(
            isinstance(v, (list, tuple)) for v in value
        ):
            out.write(f"{key} = [\n")
            for row in value:
                out.write(f"  {_render(row)},\n")
            out.write("]\n")
        elif isinstance(value, dict):
            inner = ", ".join(f"{k} = {_render(v)}" for k, v in value.items())
            out.write(f"{key} = {{ {inner} }}\n")
        else:
            out.write(f"{key} = {_render(value)}\n")
    return out.getvalue()


def document_for_field(L: OpField, name: str | None = None) -> str:
    """Emit an operator field as a complete, re-parsable document."""
    entries: list[tuple[str, object]] = []
    if name is not None:
        entries.append(("name", name))
    entries.append(("dim", L.dim))
    entries.append(("vars", list(L.vars)))
    entries.append(("matrix", L.to_strings()))
    return dump_document(entries)
