"""Flat ``key = value`` experiment configuration.

Keys use the same spelling as the CLI flags (``prune-theta`` <-> ``--prune-theta``);
underscores are accepted in files. ``#`` starts a comment.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Callable, Optional

from .classifier import SvmParams
from .clustering import KMeansParams
from .dataset import MaterialBlob, SyntheticSpec
from .ensemble import SINGLE_CLASS_MODES, WEIGHT_MODES, EnsembleConfig
from .errors import ConfigError
from .experiment import STANDARDIZE_MODES, ExperimentConfig
from .metrics import CONVENTIONS
from .report import FORMATS


def parse_bool(text: str) -> bool:
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def parse_list(text: str) -> tuple[str, ...]:
    return tuple(p.strip() for p in str(text).split(",") if p.strip())


def parse_int_list(text: str) -> tuple[int, ...]:
    return tuple(int(p) for p in parse_list(text))


def parse_gamma(text: str):
    return "auto" if str(text).strip().lower() == "auto" else float(text)


def parse_materials(text: str) -> tuple[MaterialBlob, ...]:
    """``name:size:offset,name:size:offset,...``"""
    blobs = []
    for item in parse_list(text):
        parts = item.split(":")
        if len(parts) != 3:
            raise ValueError(f"material blob {item!r} is not name:size:offset")
        blobs.append(MaterialBlob(parts[0], int(parts[1]), float(parts[2])))
    return tuple(blobs)


def format_materials(blobs) -> str:
    return ",".join(f"{b.name}:{b.size}:{b.offset!r}" for b in blobs)


def choice(options) -> Callable[[str], str]:
    def parse(text: str) -> str:
        if text not in options:
            raise ValueError(f"expected one of {', '.join(options)}")
        return text
    return parse


@dataclass(frozen=True)
class Key:
    name: str
    parse: Callable[[str], Any]
    help: str


KEYS: tuple[Key, ...] = (
    Key("seed", int, "master random seed"),
    Key("name", str, "dataset label used in report rows"),
    Key("train", str, "training data file (csv or arff)"),
    Key("test", str, "test data file (csv or arff)"),
    Key("data-format", choice(("csv", "arff")), "data file format (default: from extension)"),
    Key("kf", parse_list, "known-fake materials, comma separated"),
    Key("clusters", int, "clusters (= base classifiers) per phase"),
    Key("phase-clusters", parse_int_list, "per-phase cluster counts, comma separated"),
    Key("prune-theta", float, "prune threshold on validation weight"),
    Key("validation-fraction", float, "stratified validation holdout fraction"),
    Key("phase-holdout", parse_bool, "hold out validation rows from later phases too"),
    Key("weight-mode", choice(WEIGHT_MODES), "how abstentions enter validation weights"),
    Key("single-class-mode", choice(SINGLE_CLASS_MODES), "classifier for single-label clusters"),
    Key("radius-quantile", float, "prototype radius quantile"),
    Key("standardize", choice(STANDARDIZE_MODES), "feature standardization"),
    Key("convention", choice(CONVENTIONS), "delta convention"),
    Key("rt", parse_bool, "also run the retrain baseline"),
    Key("svm-c", float, "SVM box constraint C"),
    Key("svm-gamma", parse_gamma, "RBF gamma or 'auto' (1/dimension)"),
    Key("svm-kernel", choice(("rbf", "linear")), "SVM kernel"),
    Key("svm-tol", float, "SMO KKT tolerance"),
    Key("svm-eps", float, "SMO numerical epsilon"),
    Key("svm-max-passes", int, "SMO iteration cap, in multiples of the sample count"),
    Key("kmeans-max-iter", int, "Lloyd iteration cap"),
    Key("kmeans-tol", float, "Lloyd convergence tolerance on inertia change"),
    Key("kmeans-restarts", int, "k-means++ restarts"),
    Key("kmeans-hartigan", parse_bool, "refine Lloyd results with single-point transfers"),
    Key("synth-dimension", int, "synthetic feature dimension"),
    Key("synth-live-size", int, "synthetic live rows per split"),
    Key("synth-live-blobs", int, "synthetic live blob count"),
    Key("synth-blob-std", float, "synthetic blob standard deviation"),
    Key("synth-materials", parse_materials, "synthetic material blobs name:size:offset,..."),
    Key("out", str, "output directory"),
    Key("format", parse_list, f"report formats, comma separated ({', '.join(FORMATS)})"),
)
KEY_INDEX = {k.name: k for k in KEYS}


def normalize_key(key: str) -> str:
    return key.strip().lower().replace("_", "-")


def parse_value(key: str, raw: str) -> Any:
    name = normalize_key(key)
    if name not in KEY_INDEX:
        raise ConfigError(f"unknown config key {key!r}")
    try:
        return KEY_INDEX[name].parse(raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad value for {name}: {exc}") from None


def read_config_file(path) -> dict[str, Any]:
    values = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, value = line.split("=", 1)
        try:
            values[normalize_key(key)] = parse_value(key, value.strip())
        except ConfigError as exc:
            raise ConfigError(f"{path}:{lineno}: {exc}") from None
    return values


def build_config(values: dict[str, Any]) -> ExperimentConfig:
    """Apply parsed key values on top of the defaults."""
    v = {normalize_key(k): val for k, val in values.items()}
    unknown = set(v) - set(KEY_INDEX)
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    base = ExperimentConfig()
    svm = base.ensemble.svm
    svm = SvmParams(
        c=v.get("svm-c", svm.c), gamma=v.get("svm-gamma", svm.gamma),
        kernel=v.get("svm-kernel", svm.kernel), tolerance=v.get("svm-tol", svm.tolerance),
        epsilon=v.get("svm-eps", svm.epsilon), max_passes=v.get("svm-max-passes", svm.max_passes))
    km = base.ensemble.kmeans
    km = KMeansParams(
        k=km.k, max_iterations=v.get("kmeans-max-iter", km.max_iterations),
        tolerance=v.get("kmeans-tol", km.tolerance), restarts=v.get("kmeans-restarts", km.restarts),
        hartigan=v.get("kmeans-hartigan", km.hartigan))
    ens = base.ensemble
    ens = EnsembleConfig(
        n_clusters=v.get("clusters", ens.n_clusters),
        phase_clusters=v.get("phase-clusters", ens.phase_clusters),
        theta=v.get("prune-theta", ens.theta), svm=svm, kmeans=km,
        single_class_mode=v.get("single-class-mode", ens.single_class_mode),
        radius_quantile=v.get("radius-quantile", ens.radius_quantile),
        weight_mode=v.get("weight-mode", ens.weight_mode))
    syn = base.synthetic
    syn = SyntheticSpec(
        dimension=v.get("synth-dimension", syn.dimension),
        live_blobs=v.get("synth-live-blobs", syn.live_blobs),
        live_size=v.get("synth-live-size", syn.live_size),
        materials=v.get("synth-materials", syn.materials),
        blob_std=v.get("synth-blob-std", syn.blob_std))
    return replace(
        base,
        seed=v.get("seed", base.seed), name=v.get("name", base.name),
        train_path=v.get("train"), test_path=v.get("test"),
        data_format=v.get("data-format"), synthetic=syn, kf=v.get("kf", base.kf),
        ensemble=ens, validation_fraction=v.get("validation-fraction", base.validation_fraction),
        phase_holdout=v.get("phase-holdout", base.phase_holdout),
        standardize=v.get("standardize", base.standardize),
        convention=v.get("convention", base.convention), rt=v.get("rt", base.rt))


def config_items(config: ExperimentConfig) -> list[tuple[str, str]]:
    """The experiment-relevant keys of ``config`` as text, in table order."""
    e, s = config.ensemble, config.synthetic
    items = [
        ("seed", str(config.seed)), ("name", config.name),
        ("train", config.train_path or ""), ("test", config.test_path or ""),
        ("data-format", config.data_format or ""), ("kf", ",".join(config.kf)),
        ("clusters", str(e.n_clusters)), ("phase-clusters", ",".join(map(str, e.phase_clusters))),
        ("prune-theta", repr(e.theta)), ("validation-fraction", repr(config.validation_fraction)),
        ("phase-holdout", str(config.phase_holdout).lower()), ("weight-mode", e.weight_mode),
        ("single-class-mode", e.single_class_mode), ("radius-quantile", repr(e.radius_quantile)),
        ("standardize", config.standardize), ("convention", config.convention),
        ("rt", str(config.rt).lower()), ("svm-c", repr(e.svm.c)), ("svm-gamma", str(e.svm.gamma)),
        ("svm-kernel", e.svm.kernel), ("svm-tol", repr(e.svm.tolerance)),
        ("svm-eps", repr(e.svm.epsilon)), ("svm-max-passes", str(e.svm.max_passes)),
        ("kmeans-max-iter", str(e.kmeans.max_iterations)), ("kmeans-tol", repr(e.kmeans.tolerance)),
        ("kmeans-restarts", str(e.kmeans.restarts)),
        ("kmeans-hartigan", str(e.kmeans.hartigan).lower()),
    ]
    if config.train_path is None:
        items += [
            ("synth-dimension", str(s.dimension)), ("synth-live-size", str(s.live_size)),
            ("synth-live-blobs", str(s.live_blobs)), ("synth-blob-std", repr(s.blob_std)),
            ("synth-materials", format_materials(s.materials)),
        ]
    return [(k, val) for k, val in items if val != ""]


def dump_config(config: ExperimentConfig, extra: Optional[dict[str, str]] = None) -> str:
    lines = [f"{k} = {v}" for k, v in config_items(config)]
    for k, v in (extra or {}).items():
        lines.append(f"{k} = {v}")
    return "\n".join(lines) + "\n"
