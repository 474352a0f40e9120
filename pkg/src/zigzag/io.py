"""Target files and CSV emission.

Target file layout (whitespace separated, ``#`` starts a comment line)::

    d
    mu_1 ... mu_d
    Phi_11 ... Phi_1d
    ...
    Phi_d1 ... Phi_dd
    y_1 ... y_d          # each of +1, -1, * (unconstrained)

CSV files always carry a header row; floats are written with 17 significant
digits so that parsing and re-emitting reproduces the file byte for byte.
"""

from __future__ import annotations

import csv
import io as _io
import math
import os
from numbers import Integral, Real

import numpy as np

from .model import TruncatedGaussianTarget, dense_target

__all__ = ["TargetFileError", "load_target", "save_target", "write_csv", "write_array_csv", "read_csv", "format_value"]


class TargetFileError(ValueError):
    """Malformed target file; message carries the offending line number."""


_ORTHANT_TOKENS = {"+1": 1, "1": 1, "-1": -1, "*": 0}


def _content_lines(text):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield lineno, line.split()


def _floats(tokens, lineno, expected, what):
    if len(tokens) != expected:
        raise TargetFileError(f"line {lineno}: expected {expected} values for {what}, got {len(tokens)}")
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise TargetFileError(f"line {lineno}: {exc}") from None


def parse_target(text: str, name: str = "file") -> TruncatedGaussianTarget:
    lines = list(_content_lines(text))
    if not lines:
        raise TargetFileError("empty target file")
    lineno, tokens = lines[0]
    if len(tokens) != 1:
        raise TargetFileError(f"line {lineno}: first line must hold the dimension only")
    try:
        d = int(tokens[0])
    except ValueError:
        raise TargetFileError(f"line {lineno}: dimension {tokens[0]!r} is not an integer") from None
    if d < 1:
        raise TargetFileError(f"line {lineno}: dimension must be positive")
    if len(lines) != d + 3:
        raise TargetFileError(
            f"expected {d + 3} non-comment lines for d={d} (dimension, mean, {d} matrix rows, orthant), "
            f"found {len(lines)}"
        )
    mean = _floats(lines[1][1], lines[1][0], d, "the mean")
    rows = [_floats(tok, ln, d, f"precision row {k + 1}") for k, (ln, tok) in enumerate(lines[2 : 2 + d])]
    ln, tok = lines[-1]
    if len(tok) != d:
        raise TargetFileError(f"line {ln}: expected {d} orthant tokens, got {len(tok)}")
    try:
        orth = [_ORTHANT_TOKENS[t] for t in tok]
    except KeyError as exc:
        raise TargetFileError(f"line {ln}: orthant token {exc.args[0]!r} not in {{+1, -1, *}}") from None
    try:
        return dense_target(mean, np.array(rows), orth, name=name)
    except ValueError as exc:
        raise TargetFileError(str(exc)) from None


def load_target(path) -> TruncatedGaussianTarget:
    with open(path) as fh:
        text = fh.read()
    return parse_target(text, name=os.path.basename(str(path)))


def save_target(path, target: TruncatedGaussianTarget) -> None:
    tokens = {1: "+1", -1: "-1", 0: "*"}
    dense = target.precision.to_dense()
    with open(path, "w") as fh:
        fh.write(f"{target.dim}\n")
        fh.write(" ".join(format_value(m) for m in target.mean) + "\n")
        for row in dense:
            fh.write(" ".join(format_value(v) for v in row) + "\n")
        fh.write(" ".join(tokens[int(y)] for y in target.orthant) + "\n")


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, Integral):
        return str(int(value))
    if isinstance(value, Real):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return "%.17g" % v
    return str(value)


def _parse_value(token: str):
    if token == "-0":
        return -0.0
    try:
        return int(token)
    except ValueError:
        pass
    try:
        return float(token)
    except ValueError:
        return token


def write_csv(path_or_buffer, header, rows) -> None:
    """Write ``rows`` (iterables matching ``header``) with exact float formatting."""
    close = False
    if isinstance(path_or_buffer, (str, os.PathLike)):
        fh = open(path_or_buffer, "w", newline="")
        close = True
    else:
        fh = path_or_buffer
    try:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
    finally:
        if close:
            fh.close()


def write_array_csv(path, header, array) -> None:
    """Fast path of :func:`write_csv` for a 2-D float array.

    Integer-valued entries print without a decimal point, so the bytes match
    what :func:`write_csv` gives for the same rows with int columns.
    """
    array = np.asarray(array, dtype=float)
    if array.ndim != 2 or array.shape[1] != len(header):
        raise ValueError(f"expected a 2-D array with {len(header)} columns")
    line = ",".join(["%.17g"] * array.shape[1])
    with open(path, "w", newline="") as fh:
        csv.writer(fh, lineterminator="\n").writerow(header)
        for row in array:
            fh.write(line % tuple(row))
            fh.write("\n")


def read_csv(path_or_text):
    """Return ``(header, rows)`` with ints and floats converted back."""
    if isinstance(path_or_text, (str, os.PathLike)) and os.path.exists(path_or_text):
        with open(path_or_text, newline="") as fh:
            text = fh.read()
    else:
        text = str(path_or_text)
    reader = csv.reader(_io.StringIO(text))
    header = next(reader)
    rows = [[_parse_value(t) for t in row] for row in reader]
    return header, rows
