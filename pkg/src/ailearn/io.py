"""CSV and ARFF readers/writers for feature datasets.

CSV layout: header ``f0,...,f{d-1},label,material``; ``label`` is ``live``
or ``spoof`` (any case); ``material`` is empty on live rows.

ARFF subset: ``@relation``, numeric ``@attribute``s, ``@attribute class
{live,spoof}``, an optional ``@attribute material string`` (or nominal),
``@data`` with comma-separated rows. ``%`` starts a comment.
"""

from __future__ import annotations

import csv
import math
import os
import shlex
from pathlib import Path
from typing import Optional, Union

from .dataset import Dataset, Label
from .errors import ConfigError, DataError, EmptyInputError, ParseError

PathLike = Union[str, os.PathLike]

FORMATS = ("csv", "arff")


def guess_format(path: PathLike) -> str:
    ext = Path(path).suffix.lower().lstrip(".")
    if ext not in FORMATS:
        raise ConfigError(f"cannot infer data format from {path!s}; use csv or arff")
    return ext


def load_dataset(path: PathLike, format: Optional[str] = None) -> Dataset:
    fmt = format or guess_format(path)
    if fmt not in FORMATS:
        raise ConfigError(f"unknown data format {fmt!r}")
    try:
        return _load_csv(Path(path)) if fmt == "csv" else _load_arff(Path(path))
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror or exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataError(f"{path}: not UTF-8 text ({exc.reason})") from exc


def save_dataset(dataset: Dataset, path: PathLike, format: Optional[str] = None,
                 relation: str = "ailearn") -> None:
    fmt = format or guess_format(path)
    if fmt == "csv":
        _save_csv(dataset, Path(path))
    elif fmt == "arff":
        _save_arff(dataset, Path(path), relation)
    else:
        raise ConfigError(f"unknown data format {fmt!r}")


def _parse_feature(text: str, line: int, column: str, path: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"non-numeric value {text!r} in column {column}", line, path) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value {text!r} in column {column}", line, path)
    return value


def _parse_label(text: str, line: int, path: str) -> Label:
    try:
        return Label.parse(text)
    except ValueError:
        raise ParseError(f"unknown label {text!r} (expected live or spoof)", line, path) from None


def _row_material(label: Label, text: Optional[str], line: int, path: str) -> Optional[str]:
    mat = (text or "").strip() or None
    if mat is not None and label == Label.LIVE:
        raise ParseError(f"live row carries material {mat!r}", line, path)
    return mat


def _build(rows, labels, materials, dimension, path) -> Dataset:
    if not rows:
        raise EmptyInputError(f"{path}: no data rows")
    return Dataset(rows, labels, materials, dimension=dimension)


def _load_csv(path: Path) -> Dataset:
    where = str(path)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = None
        for header in reader:
            if any(cell.strip() for cell in header):
                break
        else:
            raise EmptyInputError(f"{where}: empty file")
        names = [h.strip().lower() for h in header]
        if "label" not in names:
            raise ParseError("header has no 'label' column", reader.line_num, where)
        label_col = names.index("label")
        mat_col = names.index("material") if "material" in names else None
        feat_cols = [i for i, n in enumerate(names) if n not in ("label", "material")]
        if not feat_cols:
            raise ParseError("header has no feature columns", reader.line_num, where)
        rows, labels, mats = [], [], []
        for record in reader:
            line = reader.line_num
            if not record or all(not c.strip() for c in record):
                continue
            if len(record) != len(names):
                raise ParseError(f"expected {len(names)} fields, got {len(record)}", line, where)
            label = _parse_label(record[label_col], line, where)
            rows.append([_parse_feature(record[i], line, header[i].strip(), where)
                         for i in feat_cols])
            labels.append(label)
            mats.append(_row_material(label, record[mat_col] if mat_col is not None else None,
                                      line, where))
    return _build(rows, labels, mats, len(feat_cols), where)


def _save_csv(dataset: Dataset, path: Path) -> None:
    header = [f"f{i}" for i in range(dataset.dimension)] + ["label", "material"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for inst in dataset:
            writer.writerow([repr(v) for v in inst.features]
                            + [str(inst.label), inst.material or ""])


def _split_arff_row(text: str, line: int, path: str) -> list[str]:
    lexer = shlex.shlex(text, posix=True)
    lexer.whitespace = ","
    lexer.whitespace_split = True
    lexer.commenters = ""
    try:
        return [tok.strip() for tok in lexer]
    except ValueError as exc:
        raise ParseError(f"malformed row: {exc}", line, path) from None


def _load_arff(path: Path) -> Dataset:
    where = str(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not any(ln.strip() for ln in lines):
        raise EmptyInputError(f"{where}: empty file")

    attrs: list[tuple[str, str]] = []  # (name, kind)
    in_data = False
    rows, labels, mats = [], [], []
    label_idx = mat_idx = None
    feat_idx: list[int] = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text or text.startswith("%"):
            continue
        if not in_data:
            lower = text.lower()
            if lower.startswith("@relation"):
                continue
            if lower.startswith("@attribute"):
                parts = text.split(None, 2)
                if len(parts) < 3:
                    raise ParseError("incomplete @attribute declaration", lineno, where)
                name = parts[1].strip("'\"")
                kind = parts[2].strip()
                lname = name.lower()
                if lname in ("class", "label"):
                    values = {v.strip().strip("'\"").lower()
                              for v in kind.strip("{}").split(",")}
                    if not kind.startswith("{") or values != {"live", "spoof"}:
                        raise ParseError("class attribute must be {live,spoof}", lineno, where)
                    label_idx = len(attrs)
                    attrs.append((name, "class"))
                elif lname == "material":
                    mat_idx = len(attrs)
                    attrs.append((name, "material"))
                elif kind.lower() in ("numeric", "real", "integer"):
                    feat_idx.append(len(attrs))
                    attrs.append((name, "numeric"))
                else:
                    raise ParseError(f"unsupported attribute type {kind!r}", lineno, where)
                continue
            if lower.startswith("@data"):
                if label_idx is None:
                    raise ParseError("no class attribute declared before @data", lineno, where)
                if not feat_idx:
                    raise ParseError("no numeric attributes declared", lineno, where)
                in_data = True
                continue
            raise ParseError(f"unexpected header line {text!r}", lineno, where)

        fields = _split_arff_row(text, lineno, where)
        if len(fields) != len(attrs):
            raise ParseError(f"expected {len(attrs)} fields, got {len(fields)}", lineno, where)
        label = _parse_label(fields[label_idx], lineno, where)
        rows.append([_parse_feature(fields[i], lineno, attrs[i][0], where) for i in feat_idx])
        labels.append(label)
        mat = None
        if mat_idx is not None and fields[mat_idx] != "?":
            mat = fields[mat_idx]
        mats.append(_row_material(label, mat, lineno, where))
    if not in_data:
        raise ParseError("missing @data section", len(lines), where)
    return _build(rows, labels, mats, len(feat_idx), where)


def _arff_quote(text: str) -> str:
    if text and all(c.isalnum() or c in "_-." for c in text):
        return text
    if "'" not in text and "\\" not in text:
        return f"'{text}'"
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _save_arff(dataset: Dataset, path: Path, relation: str) -> None:
    out = [f"@relation {_arff_quote(relation)}", ""]
    out += [f"@attribute f{i} numeric" for i in range(dataset.dimension)]
    out += ["@attribute class {live,spoof}", "@attribute material string", "", "@data"]
    for inst in dataset:
        mat = _arff_quote(inst.material) if inst.material else "?"
        out.append(",".join([repr(v) for v in inst.features] + [str(inst.label), mat]))
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
