"""Command line front end: ``ailearn train|sweep|predict|synth``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from .config import KEYS, build_config, dump_config, parse_value, read_config_file
from .dataset import generate_synthetic
from .ensemble import load_ensemble, predict_many, save_ensemble
from .errors import AILearnError, ConfigError
from .experiment import ExperimentReport, run_experiment, run_sweep
from .io import load_dataset, save_dataset
from .report import FORMATS, write_report

logger = logging.getLogger("ailearn")

BOOLEAN_KEYS = {"rt", "phase-holdout", "kmeans-hartigan"}
DEFAULT_OUT = "ailearn-out"


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", metavar="PATH", help="flat key = value config file")
    for key in KEYS:
        dest = key.name.replace("-", "_")
        if key.name in BOOLEAN_KEYS:
            p.add_argument(f"--{key.name}", dest=dest, action=argparse.BooleanOptionalAction,
                           default=None, help=key.help)
        else:
            p.add_argument(f"--{key.name}", dest=dest, default=None, help=key.help)


def _merged_values(args: argparse.Namespace) -> dict:
    values = read_config_file(args.config) if args.config else {}
    for key in KEYS:
        raw = getattr(args, key.name.replace("-", "_"), None)
        if raw is None:
            continue
        values[key.name] = raw if isinstance(raw, bool) else parse_value(key.name, raw)
    return values


def _formats(values: dict) -> tuple[str, ...]:
    formats = values.get("format") or FORMATS
    bad = [f for f in formats if f not in FORMATS]
    if bad:
        raise ConfigError(f"unknown report format(s) {bad}; choose from {', '.join(FORMATS)}")
    return tuple(formats)


def _run_values(values: dict) -> tuple[dict, Path, tuple[str, ...]]:
    out = Path(values.pop("out", DEFAULT_OUT))
    formats = _formats(values)
    values.pop("format", None)
    return values, out, formats


def _phase_section(rep: ExperimentReport) -> str:
    lines = ["## Ensembles", "",
             "| Variant | Phase | Candidates | Admitted | Pruned | Ensemble size |",
             "|---|---|---|---|---|---|"]
    for v in rep.variants:
        for s in v.phases:
            lines.append(f"| {v.label} | {s.phase_index} | {s.candidates} | {s.admitted} | "
                         f"{s.candidates - s.admitted} | {s.ensemble_size} |")
    lines += ["", "## Phase-1 training reads after phase 1", ""]
    lines += [f"- {v.label}: {v.phase1_reads_in_later_phases}" for v in rep.variants]
    return "\n".join(lines)


def _config_section(text: str) -> str:
    return "## Configuration\n\n```\n" + text + "```"


def cmd_train(args: argparse.Namespace) -> int:
    values, out, formats = _run_values(_merged_values(args))
    config = build_config(values)
    rep = run_experiment(config)
    echo = dump_config(config, {"kf-resolved": ",".join(rep.kf), "nf-resolved": ",".join(rep.nf)})
    out.mkdir(parents=True, exist_ok=True)
    paths = write_report(rep.rows(), out, formats, [_phase_section(rep), _config_section(echo)])
    (out / "config.txt").write_text(echo, encoding="utf-8")
    (out / "timings.json").write_text(json.dumps(rep.timings, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    save_ensemble(rep.ailearn.ensemble, out / "ensemble.txt", rep.standardizer)
    if rep.rt is not None:
        save_ensemble(rep.rt.ensemble, out / "ensemble-rt.txt", rep.standardizer)
    for p in paths:
        logger.info("wrote %s", p)
    if "markdown" in formats:
        sys.stdout.write((out / "report.md").read_text(encoding="utf-8"))
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    values, out, formats = _run_values(_merged_values(args))
    config = build_config(values)
    rep = run_sweep(config, args.kf_size)
    echo = dump_config(config)
    sections = [_config_section(echo),
                "Mean rows are unweighted means over known-fake combinations."]
    paths = write_report(rep.rows(), out, formats, sections)
    (out / "config.txt").write_text(echo, encoding="utf-8")
    timings = {key: r.timings for key, r in rep.runs}
    (out / "timings.json").write_text(json.dumps(timings, indent=2, sort_keys=True) + "\n",
                                      encoding="utf-8")
    for p in paths:
        logger.info("wrote %s", p)
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    z, standardizer = load_ensemble(args.model)
    data = load_dataset(args.data, args.data_format)
    x = data.features
    if standardizer is not None:
        x = standardizer.transform(x)
    labels = predict_many(z, x)
    text = "".join(("spoof" if v else "live") + "\n" for v in labels)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    acc = 100.0 * float((labels == data.labels).mean()) if len(data) else float("nan")
    logger.info("accuracy against file labels: %.2f%%", acc)
    return 0


def cmd_synth(args: argparse.Namespace) -> int:
    values = _merged_values(args)
    out = Path(values.pop("out", DEFAULT_OUT))
    fmt = values.pop("data-format", None) or "csv"
    values.pop("format", None)
    config = build_config(values)
    config.synthetic.validate()
    train, test = generate_synthetic(config.synthetic, config.seed)
    out.mkdir(parents=True, exist_ok=True)
    for name, d in (("train", train), ("test", test)):
        path = out / f"{name}.{fmt}"
        save_dataset(d, path, fmt)
        logger.info("wrote %s (%d rows)", path, len(d))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ailearn",
                                     description="Incremental ensemble learning for liveness detection.")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="run the two-phase experiment on one known-fake split")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("sweep", help="run every known-fake material combination")
    _add_config_flags(p)
    p.add_argument("--kf-size", type=int, default=None,
                   help="known-fake materials per combination (default: size of --kf, else 2)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("predict", help="label a dataset with a saved ensemble")
    p.add_argument("--model", required=True, help="ensemble file written by train")
    p.add_argument("--data", required=True, help="csv or arff dataset")
    p.add_argument("--data-format", choices=("csv", "arff"), default=None)
    p.add_argument("--out", default=None, help="write labels here instead of stdout")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="write a synthetic train/test pair")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except AILearnError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
