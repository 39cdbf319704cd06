"""Two-phase Known-Fake / New-Fake experiment runner with the retrain baseline."""

from __future__ import annotations

import itertools
import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .dataset import (
    AccessCounter,
    Dataset,
    PhasePlan,
    Standardizer,
    SyntheticSpec,
    apply_standardizer,
    fit_standardizer,
    generate_synthetic,
    holdout_validation,
    partition_phases,
)
from .ensemble import (
    AILearnResult,
    EnsembleConfig,
    PhaseSnapshot,
    ScoredEnsemble,
    derive_seed,
    admit_candidates,
    ailearn,
    predict_many,
    train_phase_candidates,
)
from .errors import AILearnError, ConfigError
from .io import load_dataset
from .metrics import CONVENTIONS, EvalCell, StabilityPlasticityReport, confusion, rates

logger = logging.getLogger(__name__)

STANDARDIZE_MODES = ("none", "phase1")


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    name: str = "syn"
    train_path: Optional[str] = None
    test_path: Optional[str] = None
    data_format: Optional[str] = None
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)
    kf: tuple[str, ...] = ()  # empty: the first two materials in sorted order
    ensemble: EnsembleConfig = field(default_factory=EnsembleConfig)
    validation_fraction: float = 0.2
    phase_holdout: bool = True
    standardize: str = "none"
    convention: str = "relative"
    rt: bool = True

    def validate(self) -> None:
        if (self.train_path is None) != (self.test_path is None):
            raise ConfigError("give both train and test paths, or neither for synthetic data")
        if self.standardize not in STANDARDIZE_MODES:
            raise ConfigError(f"standardize must be one of {STANDARDIZE_MODES}")
        if self.convention not in CONVENTIONS:
            raise ConfigError(f"convention must be one of {CONVENTIONS}")
        if not 0.0 < self.validation_fraction < 1.0:
            raise ConfigError("validation fraction must lie in (0, 1)")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        if self.train_path is None:
            self.synthetic.validate()
        self.ensemble.validate()


@dataclass(frozen=True, eq=False)
class PhaseStats:
    phase_index: int
    candidates: int
    admitted: int
    ensemble_size: int
    weights: tuple[float, ...]  # every candidate's weight, pruned ones included
    kinds: tuple[str, ...]


@dataclass(frozen=True, eq=False)
class VariantResult:
    label: str
    report: StabilityPlasticityReport
    phases: tuple[PhaseStats, ...]
    phase1_reads_in_later_phases: int
    ensemble: ScoredEnsemble


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: ExperimentConfig
    kf: tuple[str, ...]
    nf: tuple[str, ...]
    variants: tuple[VariantResult, ...]
    standardizer: Optional[Standardizer]
    plan_sizes: dict
    timings: dict  # wall-clock seconds; never part of the report body

    def variant(self, label: str) -> VariantResult:
        for v in self.variants:
            if v.label == label:
                return v
        raise KeyError(label)

    @property
    def ailearn(self) -> VariantResult:
        return self.variants[0]

    @property
    def rt(self) -> Optional[VariantResult]:
        return self.variants[1] if len(self.variants) > 1 else None

    def rows(self) -> list[tuple[str, StabilityPlasticityReport]]:
        return [(v.label, v.report) for v in self.variants]


def _stage(name: str):
    class _Ctx:
        def __enter__(self):
            return self

        def __exit__(self, exc_type, exc, tb):
            if isinstance(exc, AILearnError) and exc.stage is None:
                exc.stage = name
            return False
    return _Ctx()


def load_data(config: ExperimentConfig) -> tuple[Dataset, Dataset]:
    if config.train_path is not None:
        with _stage("load"):
            return (load_dataset(config.train_path, config.data_format),
                    load_dataset(config.test_path, config.data_format))
    with _stage("synthesize"):
        return generate_synthetic(config.synthetic, config.seed)


def evaluate(z: ScoredEnsemble, data: Dataset) -> EvalCell:
    return rates(confusion(predict_many(z, data.features), data.labels))


def _standardize_plan(plan: PhasePlan, s: Standardizer) -> PhasePlan:
    def ap(d: Dataset) -> Dataset:
        return apply_standardizer(s, d)
    return PhasePlan(tuple(ap(d) for d in plan.phase_trains), ap(plan.test_kf), ap(plan.test_nf),
                     ap(plan.validation), tuple(ap(d) for d in plan.phase_holdouts))


def _phase_stats(snap: PhaseSnapshot) -> PhaseStats:
    cands = snap.candidates.scored
    return PhaseStats(snap.phase_index, len(cands), snap.admitted, len(snap.ensemble),
                      tuple(m.weight for m in cands), tuple(m.kind for m in cands))


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    """Run AILearn over the KF/NF phases and, optionally, the retrain baseline.

    Every phase snapshot is scored on both test sets. Phase-1 training data
    is wrapped in an access counter so the report can show how many of its
    instances later phases read.
    """
    with _stage("config"):
        config.validate()
    timings: dict[str, float] = {}
    t0 = time.perf_counter()
    train, test = load_data(config)

    with _stage("partition"):
        kf = tuple(sorted(config.kf)) if config.kf else tuple(sorted(train.material_set())[:2])
        plan = partition_phases(train, test, kf, derive_seed(config.seed, 10),
                                config.validation_fraction, config.phase_holdout)
    nf = tuple(sorted(plan.phase_trains[1].material_set() | plan.test_nf.material_set()))
    standardizer = None
    if config.standardize == "phase1":
        with _stage("standardize"):
            standardizer = fit_standardizer(plan.phase_trains[0])
            plan = _standardize_plan(plan, standardizer)

    counter = AccessCounter()
    phase1 = plan.phase_trains[0].tracked(counter)
    plan = replace(plan, phase_trains=(phase1,) + plan.phase_trains[1:])
    reads_at: dict[int, int] = {}
    mark = [time.perf_counter()]

    def on_phase(snap: PhaseSnapshot) -> None:
        now = time.perf_counter()
        timings[f"ailearn_phase{snap.phase_index}"] = now - mark[0]
        mark[0] = now
        reads_at[snap.phase_index] = counter.reads

    seed_ailearn = derive_seed(config.seed, 20)
    with _stage("ailearn"):
        result: AILearnResult = ailearn(plan, config.ensemble, seed_ailearn, on_phase)
    ailearn_later_reads = counter.reads - reads_at[1]

    with _stage("evaluate"):
        cells = [(evaluate(s.ensemble, plan.test_kf), evaluate(s.ensemble, plan.test_nf))
                 for s in result.snapshots]
    variants = [VariantResult(
        config.name,
        StabilityPlasticityReport.build(cells, config.convention),
        tuple(_phase_stats(s) for s in result.snapshots),
        ailearn_later_reads,
        result.final,
    )]

    if config.rt:
        before = counter.reads
        t_rt = time.perf_counter()
        with _stage("retrain baseline"):
            union = Dataset.concat([*plan.phase_trains, plan.validation,
                                    *[h for h in plan.phase_holdouts if len(h)]])
            rt_train, rt_valid = holdout_validation(union, config.validation_fraction,
                                                    derive_seed(config.seed, 30))
            last = plan.phases
            cands = train_phase_candidates(rt_train, rt_valid, config.ensemble, last,
                                           derive_seed(config.seed, 31))
            rt_z = admit_candidates(cands, config.ensemble.theta, union.dimension)
        timings["rt_phase2"] = time.perf_counter() - t_rt
        rt_reads = counter.reads - before
        with _stage("evaluate"):
            rt_cells = cells[:-1] + [(evaluate(rt_z, plan.test_kf), evaluate(rt_z, plan.test_nf))]
        rt_stats = PhaseStats(last, len(cands.scored), len(rt_z), len(rt_z),
                              tuple(m.weight for m in cands.scored),
                              tuple(m.kind for m in cands.scored))
        variants.append(VariantResult(
            f"{config.name}-RT",
            StabilityPlasticityReport.build(rt_cells, config.convention),
            variants[0].phases[:-1] + (rt_stats,),
            rt_reads,
            rt_z,
        ))
    timings["total"] = time.perf_counter() - t0

    sizes = {
        "phase_trains": [len(d) for d in plan.phase_trains],
        "validation": len(plan.validation),
        "phase_holdouts": [len(d) for d in plan.phase_holdouts],
        "test_kf": len(plan.test_kf),
        "test_nf": len(plan.test_nf),
    }
    return ExperimentReport(config, kf, nf, tuple(variants), standardizer, sizes, timings)


@dataclass(frozen=True, eq=False)
class SweepReport:
    config: ExperimentConfig
    runs: tuple[tuple[str, ExperimentReport], ...]  # sorted by combination key
    means: tuple[tuple[str, StabilityPlasticityReport], ...]

    def rows(self) -> list[tuple[str, StabilityPlasticityReport]]:
        out = []
        for key, rep in self.runs:
            for v in rep.variants:
                out.append((f"{v.label}[{key}]", v.report))
        return out + list(self.means)


def _mean(values):
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def mean_report(reports: list[StabilityPlasticityReport], convention: str) -> StabilityPlasticityReport:
    """Unweighted mean of cells over runs; deltas recomputed from the means."""
    phases = len(reports[0].cells)
    cells = []
    for p in range(phases):
        pair = []
        for t in range(2):
            group = [r.cells[p][t] for r in reports]
            pair.append(EvalCell(_mean(c.accuracy for c in group), _mean(c.bpcer for c in group),
                                 _mean(c.apcer for c in group)))
        cells.append(tuple(pair))
    return StabilityPlasticityReport.build(cells, convention)


def run_sweep(config: ExperimentConfig, kf_size: Optional[int] = None) -> SweepReport:
    """Run one experiment per known-fake material combination."""
    config.validate()
    train, _ = load_data(config)
    materials = sorted(train.material_set())
    size = kf_size or (len(config.kf) if config.kf else 2)
    if not 0 < size < len(materials):
        raise ConfigError(f"cannot pick {size} known-fake materials out of {len(materials)}")
    runs = []
    for combo in itertools.combinations(materials, size):
        key = "+".join(combo)
        logger.info("sweep: kf=%s", key)
        runs.append((key, run_experiment(replace(config, kf=combo))))
    runs.sort(key=lambda kv: kv[0])
    means = []
    for i, v in enumerate(runs[0][1].variants):
        means.append((f"{v.label}-mean", mean_report([r.variants[i].report for _, r in runs],
                                                     config.convention)))
    return SweepReport(config, tuple(runs), tuple(means))
