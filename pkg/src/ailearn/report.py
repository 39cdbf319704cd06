"""Table-shaped report emission (markdown, csv, json-lines) and read-back.

Every format carries the same numbers: accuracy and rates at two decimals,
``N/A`` (``null`` in json) for a rate whose class is absent from the test
set, ``undefined`` for a relative delta with a zero denominator.
"""

from __future__ import annotations

import csv
import io
import json
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .metrics import Deltas, EvalCell, StabilityPlasticityReport

FORMATS = ("markdown", "csv", "jsonl")
EXTENSIONS = {"markdown": "md", "csv": "csv", "jsonl": "jsonl"}

CELL_METRICS = ("accuracy", "bpcer", "apcer")
DELTA_METRICS = ("gain_nf", "loss_kf", "fpr_loss_nf", "fpr_change_kf")
DELTA_HEADERS = {
    "gain_nf": "%gain on NF",
    "loss_kf": "%loss on KF",
    "fpr_loss_nf": "%loss in FPR on NF",
    "fpr_change_kf": "%change in FPR on KF",
}
CELL_HEADERS = {"accuracy": "Acc (%)", "bpcer": "BPCER (0-1)", "apcer": "APCER (0-1)"}

Rows = Sequence[tuple[str, StabilityPlasticityReport]]


def roman(n: int) -> str:
    table = [(10, "X"), (9, "IX"), (5, "V"), (4, "IV"), (1, "I")]
    out = ""
    for value, sym in table:
        while n >= value:
            out += sym
            n -= value
    return out


def fmt(value: Optional[float], missing: str = "N/A") -> str:
    if value is None:
        return missing
    text = f"{value:.2f}"
    return "0.00" if text == "-0.00" else text


def _cell_names(report: StabilityPlasticityReport) -> list[str]:
    names = []
    for p in range(len(report.cells)):
        names += [f"{roman(p + 1)}.KF", f"{roman(p + 1)}.NF"]
    return names


def _cell_values(report: StabilityPlasticityReport) -> list[EvalCell]:
    return [c for pair in report.cells for c in pair]


def _delta_values(d: Deltas) -> list[Optional[float]]:
    return [getattr(d, m) for m in DELTA_METRICS]


def records(rows: Rows) -> list[dict]:
    """Flat records shared by the csv and json-lines emitters."""
    out = []
    for label, rep in rows:
        for name, cell in zip(_cell_names(rep), _cell_values(rep)):
            out.append({"dataset": label, "row": name,
                        **{m: getattr(cell, m) for m in CELL_METRICS}})
        out.append({"dataset": label, "row": "deltas", "convention": rep.deltas.convention,
                    **{m: getattr(rep.deltas, m) for m in DELTA_METRICS}})
    return out


def to_markdown(rows: Rows, sections: Iterable[str] = ()) -> str:
    if not rows:
        return ""
    names = _cell_names(rows[0][1])
    head = ["Dataset"] + [f"{n} {CELL_HEADERS[m]}" for n in names for m in CELL_METRICS]
    lines = ["# Stability-plasticity report", "",
             "| " + " | ".join(head) + " |", "|" + "---|" * len(head)]
    for label, rep in rows:
        vals = [fmt(getattr(c, m)) for c in _cell_values(rep) for m in CELL_METRICS]
        lines.append("| " + " | ".join([label] + vals) + " |")
    convention = rows[0][1].deltas.convention
    lines += ["", f"## Deltas ({convention})", ""]
    dhead = ["Dataset"] + [DELTA_HEADERS[m] for m in DELTA_METRICS]
    lines += ["| " + " | ".join(dhead) + " |", "|" + "---|" * len(dhead)]
    for label, rep in rows:
        vals = [fmt(v, "undefined") for v in _delta_values(rep.deltas)]
        lines.append("| " + " | ".join([label] + vals) + " |")
    for section in sections:
        lines += ["", section.rstrip()]
    return "\n".join(lines) + "\n"


def to_csv(rows: Rows) -> str:
    buf = io.StringIO()
    fields = ["dataset", "row", *CELL_METRICS, "convention", *DELTA_METRICS]
    writer = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    writer.writeheader()
    for rec in records(rows):
        out = {}
        for k in fields:
            v = rec.get(k, "")
            if k in CELL_METRICS and k in rec:
                v = fmt(v)
            elif k in DELTA_METRICS and k in rec:
                v = fmt(v, "undefined")
            out[k] = v
        writer.writerow(out)
    return buf.getvalue()


def to_jsonl(rows: Rows) -> str:
    lines = []
    for rec in records(rows):
        out = {}
        for k, v in rec.items():
            if isinstance(v, float):
                v = round(v, 2) + 0.0
            out[k] = v
        lines.append(json.dumps(out, separators=(",", ":")))
    return "\n".join(lines) + "\n"


def render(rows: Rows, format: str, sections: Iterable[str] = ()) -> str:
    if format == "markdown":
        return to_markdown(rows, sections)
    if format == "csv":
        return to_csv(rows)
    if format == "jsonl":
        return to_jsonl(rows)
    raise ValueError(f"unknown report format {format!r}")


def write_report(rows: Rows, out_dir, formats: Sequence[str], sections: Iterable[str] = (),
                 stem: str = "report") -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    sections = list(sections)
    paths = []
    for f in formats:
        path = out / f"{stem}.{EXTENSIONS[f]}"
        path.write_text(render(rows, f, sections), encoding="utf-8")
        paths.append(path)
    return paths


# -- read-back ------------------------------------------------------------

def _num(text: str) -> Optional[float]:
    text = text.strip()
    return None if text in ("N/A", "undefined", "") else float(text)


def parse_csv(text: str) -> dict[tuple[str, str, str], Optional[float]]:
    """Map ``(dataset, row, metric)`` to the value written in a csv report."""
    out = {}
    for rec in csv.DictReader(io.StringIO(text)):
        metrics = DELTA_METRICS if rec["row"] == "deltas" else CELL_METRICS
        for m in metrics:
            out[(rec["dataset"], rec["row"], m)] = _num(rec[m])
    return out


def parse_jsonl(text: str) -> dict[tuple[str, str, str], Optional[float]]:
    out = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        metrics = DELTA_METRICS if rec["row"] == "deltas" else CELL_METRICS
        for m in metrics:
            out[(rec["dataset"], rec["row"], m)] = rec[m]
    return out


def parse_markdown(text: str) -> dict[tuple[str, str, str], Optional[float]]:
    """Read the two leading tables of a markdown report back into values."""
    out = {}
    tables: list[list[list[str]]] = []
    current: list[list[str]] = []
    for line in text.splitlines():
        if line.startswith("|"):
            cells = [c.strip() for c in line.strip().strip("|").split("|")]
            if all(set(c) <= {"-"} for c in cells):
                continue
            current.append(cells)
        elif current:
            tables.append(current)
            current = []
    if current:
        tables.append(current)
    cells_table, delta_table = tables[0], tables[1]
    header = cells_table[0][1:]
    for row in cells_table[1:]:
        for col, value in zip(header, row[1:]):
            name, metric_head = col.split(" ", 1)
            metric = next(m for m, h in CELL_HEADERS.items() if h == metric_head)
            out[(row[0], name, metric)] = _num(value)
    for row in delta_table[1:]:
        for m, value in zip(DELTA_METRICS, row[1:]):
            out[(row[0], "deltas", m)] = _num(value)
    return out
