"""Matrix Market reader and writer.

Handles the NIST interchange format: banner
``%%MatrixMarket matrix <coordinate|array> <real|integer|complex|pattern>
<general|symmetric|skew-symmetric|hermitian>``, '%' comments, a dimension
line, then entries.  Coordinate files load as :class:`SparseRowMatrix`
(1-based indices converted, duplicates summed), array files as
:class:`DenseMatrix` (column-major value order).  Symmetric-family files must
store the lower triangle, which is expanded to full storage on load.  Parse
errors carry the offending line number.
"""

from __future__ import annotations

import numpy as np

from .operators import DenseMatrix, RowOperator, SparseRowMatrix

__all__ = ["MatrixMarketError", "load_matrix_market", "save_matrix_market"]

_FORMATS = ("coordinate", "array")
_FIELDS = ("real", "integer", "complex", "pattern")
_SYMMETRIES = ("general", "symmetric", "skew-symmetric", "hermitian")


class MatrixMarketError(ValueError):
    """Malformed Matrix Market content; the message names the line."""

    def __init__(self, path, lineno, message):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


def _parse_banner(path, line):
    parts = line.strip().split()
    if len(parts) != 5 or parts[0].lower() != "%%matrixmarket":
        raise MatrixMarketError(path, 1, "expected banner '%%MatrixMarket matrix <format> <field> <symmetry>'")
    obj, fmt, field, symmetry = (p.lower() for p in parts[1:])
    if obj != "matrix":
        raise MatrixMarketError(path, 1, f"unsupported object {obj!r}")
    if fmt not in _FORMATS:
        raise MatrixMarketError(path, 1, f"unsupported format {fmt!r}")
    if field not in _FIELDS:
        raise MatrixMarketError(path, 1, f"unsupported field {field!r}")
    if symmetry not in _SYMMETRIES:
        raise MatrixMarketError(path, 1, f"unsupported symmetry {symmetry!r}")
    return fmt, field, symmetry


def _parse_value(path, lineno, field, parts, offset):
    try:
        if field == "pattern":
            return 1.0 + 0.0j
        if field == "complex":
            return complex(float(parts[offset]), float(parts[offset + 1]))
        return complex(float(parts[offset]))
    except (ValueError, IndexError):
        raise MatrixMarketError(path, lineno, "could not parse numeric value") from None


def _entry_width(field):
    return {"pattern": 0, "real": 1, "integer": 1, "complex": 2}[field]


def load_matrix_market(path) -> RowOperator:
    """Parse a Matrix Market file into a sparse or dense operator."""
    with open(path, "r", encoding="ascii") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise MatrixMarketError(path, 1, "empty file")
    fmt, field, symmetry = _parse_banner(path, lines[0])

    lineno = 1
    # skip comments and blank padding up to the dimension line
    while lineno < len(lines) and (lines[lineno].startswith("%") or not lines[lineno].strip()):
        lineno += 1
    if lineno >= len(lines):
        raise MatrixMarketError(path, len(lines), "missing dimension line")
    dim_lineno = lineno + 1
    dims = lines[lineno].split()
    expected_dims = 3 if fmt == "coordinate" else 2
    if len(dims) != expected_dims:
        raise MatrixMarketError(path, dim_lineno, f"dimension line needs {expected_dims} integers")
    try:
        dims = [int(v) for v in dims]
    except ValueError:
        raise MatrixMarketError(path, dim_lineno, "dimension line needs integers") from None
    if any(v < 0 for v in dims) or dims[0] == 0 or dims[1] == 0:
        raise MatrixMarketError(path, dim_lineno, "matrix dimensions must be positive")
    m, n = dims[0], dims[1]
    if symmetry != "general" and m != n:
        raise MatrixMarketError(path, dim_lineno, f"{symmetry} storage requires a square matrix")

    if fmt == "coordinate":
        return _load_coordinate(path, lines, lineno + 1, m, n, dims[2], field, symmetry)
    return _load_array(path, lines, lineno + 1, m, n, field, symmetry)


def _load_coordinate(path, lines, start, m, n, nnz, field, symmetry):
    width = _entry_width(field)
    rows, cols, vals = [], [], []
    seen = 0
    lineno = start
    for lineno in range(start, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        if seen >= nnz:
            raise MatrixMarketError(path, lineno + 1, f"more than the declared {nnz} entries")
        parts = text.split()
        if len(parts) != 2 + width:
            raise MatrixMarketError(path, lineno + 1, f"entry needs {2 + width} fields, got {len(parts)}")
        try:
            i, j = int(parts[0]), int(parts[1])
        except ValueError:
            raise MatrixMarketError(path, lineno + 1, "row/column indices must be integers") from None
        if not (1 <= i <= m and 1 <= j <= n):
            raise MatrixMarketError(path, lineno + 1, f"index ({i}, {j}) outside declared {m}x{n} bounds")
        v = _parse_value(path, lineno + 1, field, parts, 2)
        if symmetry != "general" and i < j:
            raise MatrixMarketError(path, lineno + 1, f"{symmetry} storage must keep entries on or below the diagonal")
        rows.append(i - 1)
        cols.append(j - 1)
        vals.append(v)
        if symmetry != "general" and i != j:
            rows.append(j - 1)
            cols.append(i - 1)
            if symmetry == "symmetric":
                vals.append(v)
            elif symmetry == "skew-symmetric":
                vals.append(-v)
            else:  # hermitian
                vals.append(np.conj(v))
        seen += 1
    if seen != nnz:
        raise MatrixMarketError(path, len(lines), f"file ended after {seen} of {nnz} declared entries")
    return SparseRowMatrix.from_coo((m, n), rows, cols, vals)


def _load_array(path, lines, start, m, n, field, symmetry):
    if field == "pattern":
        raise MatrixMarketError(path, 1, "pattern field is only valid for coordinate format")
    width = _entry_width(field)
    if symmetry == "general":
        positions = [(i, j) for j in range(n) for i in range(m)]
    else:
        positions = [(i, j) for j in range(n) for i in range(j, m)]
    a = np.zeros((m, n), dtype=np.complex128)
    seen = 0
    for lineno in range(start, len(lines)):
        text = lines[lineno].strip()
        if not text or text.startswith("%"):
            continue
        parts = text.split()
        if len(parts) != width:
            raise MatrixMarketError(path, lineno + 1, f"array entry needs {width} numeric fields")
        if seen >= len(positions):
            raise MatrixMarketError(path, lineno + 1, f"more than the expected {len(positions)} values")
        v = _parse_value(path, lineno + 1, field, parts, 0)
        i, j = positions[seen]
        a[i, j] = v
        if symmetry != "general" and i != j:
            a[j, i] = {"symmetric": v, "skew-symmetric": -v, "hermitian": np.conj(v)}[symmetry]
        seen += 1
    if seen != len(positions):
        raise MatrixMarketError(path, len(lines), f"file ended after {seen} of {len(positions)} values")
    return DenseMatrix(a)


def save_matrix_market(path, op: RowOperator, comment: str | None = None) -> None:
    """Write an operator with general symmetry; sparse storage goes out as
    coordinate format, dense as column-major array format.

    Values are printed with 17 significant digits, so a write/read round trip
    reproduces them bit for bit.
    """
    dense = isinstance(op, DenseMatrix)
    m, n = op.shape
    if dense:
        a = op.array
        complex_field = bool(np.any(a.imag != 0.0))
    else:
        complex_field = any(np.any(op.row_view(i)[1].imag != 0.0) for i in range(m))
    field = "complex" if complex_field else "real"
    fmt = "array" if dense else "coordinate"

    def fmt_value(v):
        if field == "complex":
            return f"{v.real:.17g} {v.imag:.17g}"
        return f"{v.real:.17g}"

    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"%%MatrixMarket matrix {fmt} {field} general\n")
        if comment:
            for line in comment.splitlines():
                fh.write(f"% {line}\n")
        if dense:
            fh.write(f"{m} {n}\n")
            for j in range(n):
                for i in range(m):
                    fh.write(fmt_value(a[i, j]) + "\n")
        else:
            if isinstance(op, SparseRowMatrix):
                triplets = [
                    (i, int(op.indices[p]), op.data[p])
                    for i in range(m)
                    for p in range(op.indptr[i], op.indptr[i + 1])
                ]
            else:
                triplets = [
                    (i, int(c), v)
                    for i in range(m)
                    for c, v in zip(*op.row_view(i))
                ]
            fh.write(f"{m} {n} {len(triplets)}\n")
            for i, j, v in triplets:
                fh.write(f"{i + 1} {j + 1} {fmt_value(v)}\n")
