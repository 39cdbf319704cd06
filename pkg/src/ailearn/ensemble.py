"""AILearn ensemble: per-phase cluster ensembles, validation weights,
pruning, merging and weighted-majority prediction."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Sequence

import numpy as np

from .classifier import (
    ABSTAIN,
    BaseClassifier,
    BinarySvm,
    SvmParams,
    classify,
    constant_classifier,
    from_record,
    to_record,
    train_binary_svm,
    train_one_class_prototype,
)
from .clustering import KMeansParams, kmeans
from .dataset import Dataset, Label, PhasePlan, Standardizer
from .errors import ConfigError, DataError, DegeneratePhaseError, EmptyInputError, ShapeError, StateError

logger = logging.getLogger(__name__)

FORMAT_NAME = "ailearn-ensemble"
FORMAT_VERSION = 1

SINGLE_CLASS_MODES = ("prototype", "constant")
WEIGHT_MODES = ("covered", "full")


@dataclass(frozen=True)
class EnsembleConfig:
    """Settings for building phase ensembles.

    ``weight_mode`` controls how abstentions enter a classifier's validation
    accuracy: ``covered`` scores it on the validation rows it votes on,
    ``full`` divides by the whole validation set (abstentions count as
    errors).
    """

    n_clusters: int = 2
    phase_clusters: tuple[int, ...] = ()  # per-phase override of n_clusters
    theta: float = 0.5
    svm: SvmParams = field(default_factory=SvmParams)
    kmeans: KMeansParams = field(default_factory=KMeansParams)
    single_class_mode: str = "prototype"
    radius_quantile: float = 0.95
    weight_mode: str = "covered"

    def clusters_for(self, phase_index: int) -> int:
        if 0 < phase_index <= len(self.phase_clusters):
            return self.phase_clusters[phase_index - 1]
        return self.n_clusters

    def validate(self) -> None:
        if self.n_clusters < 1 or any(k < 1 for k in self.phase_clusters):
            raise ConfigError("cluster counts must be >= 1")
        if not 0.0 <= self.theta <= 1.0:
            raise ConfigError(f"prune threshold must lie in [0, 1], got {self.theta}")
        if self.single_class_mode not in SINGLE_CLASS_MODES:
            raise ConfigError(f"single_class_mode must be one of {SINGLE_CLASS_MODES}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ConfigError(f"weight_mode must be one of {WEIGHT_MODES}")
        if not 0.0 < self.radius_quantile <= 1.0:
            raise ConfigError("radius_quantile must lie in (0, 1]")
        self.svm.validate()
        self.kmeans.validate()


@dataclass(frozen=True, eq=False)
class ScoredClassifier:
    classifier: BaseClassifier
    weight: float
    phase_index: int

    @property
    def kind(self) -> str:
        return "svm" if isinstance(self.classifier, BinarySvm) else "prototype"


@dataclass(frozen=True, eq=False)
class ScoredEnsemble:
    members: tuple[ScoredClassifier, ...]
    theta: float
    dimension: Optional[int] = None

    def __len__(self) -> int:
        return len(self.members)

    @property
    def weights(self) -> tuple[float, ...]:
        return tuple(m.weight for m in self.members)

    @property
    def phases(self) -> int:
        return max((m.phase_index for m in self.members), default=0)

    @classmethod
    def empty(cls, theta: float, dimension: Optional[int] = None) -> "ScoredEnsemble":
        return cls((), theta, dimension)


@dataclass(frozen=True)
class VoteTally:
    """Per-label weight totals.

    ``margin`` is ``spoof - live`` computed from the individual weights in a
    single exactly rounded sum, so its sign is the sign of the exact
    difference even when the two totals round to the same float.
    """

    live: float = 0.0
    spoof: float = 0.0
    margin: Optional[float] = None

    def __getitem__(self, label: Label) -> float:
        return self.live if label == Label.LIVE else self.spoof

    def winner(self) -> Label:
        m = self.spoof - self.live if self.margin is None else self.margin
        return Label.SPOOF if m > 0 else Label.LIVE


def _tally(live: Sequence[float], spoof: Sequence[float]) -> VoteTally:
    # fsum is exactly rounded, so nothing here depends on member order
    return VoteTally(math.fsum(live), math.fsum(spoof),
                     math.fsum([*spoof, *(-w for w in live)]))


def weigh_classifier(c: BaseClassifier, valid: Dataset, mode: str = "covered") -> float:
    """Validation accuracy of one base classifier.

    In ``full`` mode the denominator is the whole validation set. In
    ``covered`` mode it is the number of rows the classifier votes on; a
    classifier that never votes scores 0.
    """
    if len(valid) == 0:
        raise EmptyInputError("validation set is empty")
    codes = c.vote_codes(valid.features)
    correct = int(np.count_nonzero(codes == valid.labels))
    if mode == "full":
        return correct / len(valid)
    voted = int(np.count_nonzero(codes != ABSTAIN))
    return correct / voted if voted else 0.0


def prune(members: Sequence[ScoredClassifier], theta: float) -> list[ScoredClassifier]:
    return [m for m in members if m.weight >= theta]


@dataclass(frozen=True, eq=False)
class PhaseCandidates:
    """Every base classifier one phase produced, before pruning."""

    phase_index: int
    scored: tuple[ScoredClassifier, ...]
    cluster_sizes: tuple[int, ...]
    cluster_labels: tuple[tuple[int, int], ...]  # (live, spoof) count per cluster


def derive_seed(seed: int, *path: int) -> int:
    # the path length goes in too: SeedSequence zero-pads, so (s, 1) == (s, 1, 0) otherwise
    entropy = [seed & 0xFFFFFFFFFFFFFFFF, len(path), *path]
    return int(np.random.SeedSequence(entropy).generate_state(1)[0])


def train_phase_candidates(phase_train: Dataset, valid: Dataset, config: EnsembleConfig,
                           phase_index: int, seed: int) -> PhaseCandidates:
    """Cluster one phase's data, fit one classifier per cluster and weigh it."""
    config.validate()
    if len(phase_train) == 0:
        raise EmptyInputError(f"phase {phase_index}: training data is empty")
    if valid.count(Label.LIVE) == 0 or valid.count(Label.SPOOF) == 0:
        raise DataError("validation set must contain both labels")
    if valid.dimension != phase_train.dimension:
        raise ShapeError("validation and training dimensions differ")
    x = phase_train.features
    y = phase_train.labels
    k = config.clusters_for(phase_index)
    params = replace(config.kmeans, k=k)
    clustering = kmeans(x, params, derive_seed(seed, 0))

    scored, sizes, compositions = [], [], []
    for j in range(k):
        idx = clustering.members(j)
        xs, ys = x[idx], y[idx]
        n_live = int(np.count_nonzero(ys == Label.LIVE))
        sizes.append(len(idx))
        compositions.append((n_live, len(idx) - n_live))
        if 0 < n_live < len(idx):
            clf = train_binary_svm(xs, ys, config.svm, derive_seed(seed, 1, j))
        elif config.single_class_mode == "constant":
            clf = constant_classifier(xs, Label(int(ys[0])))
        else:
            clf = train_one_class_prototype(xs, Label(int(ys[0])), config.radius_quantile)
        weight = weigh_classifier(clf, valid, config.weight_mode)
        scored.append(ScoredClassifier(clf, weight, phase_index))
        logger.debug("phase %d cluster %d: n=%d live=%d weight=%.4f",
                     phase_index, j, len(idx), n_live, weight)
    return PhaseCandidates(phase_index, tuple(scored), tuple(sizes), tuple(compositions))


def build_phase_ensemble(phase_train: Dataset, valid: Dataset, config: EnsembleConfig,
                         phase_index: int, seed: int) -> ScoredEnsemble:
    cands = train_phase_candidates(phase_train, valid, config, phase_index, seed)
    return admit_candidates(cands, config.theta, phase_train.dimension)


def admit_candidates(cands: PhaseCandidates, theta: float, dimension: int) -> ScoredEnsemble:
    """Prune a phase's candidates into its ensemble; all pruned is an error."""
    kept = prune(cands.scored, theta)
    if not kept:
        weights = [m.weight for m in cands.scored]
        raise DegeneratePhaseError(
            f"phase {cands.phase_index}: every classifier fell below theta={theta} "
            f"(weights {', '.join(f'{w:.4f}' for w in weights)})", weights)
    return ScoredEnsemble(tuple(kept), theta, dimension)


def merge(z_prev: ScoredEnsemble, z_new: ScoredEnsemble) -> ScoredEnsemble:
    if z_prev.theta != z_new.theta:
        raise ConfigError(f"cannot merge ensembles with theta {z_prev.theta} and {z_new.theta}")
    dims = {d for d in (z_prev.dimension, z_new.dimension) if d is not None}
    if len(dims) > 1:
        raise ShapeError(f"cannot merge ensembles of dimensions {sorted(dims)}")
    return ScoredEnsemble(z_prev.members + z_new.members, z_new.theta,
                          dims.pop() if dims else None)


def tally(z: ScoredEnsemble, x) -> VoteTally:
    """Summed weight of the members voting for each label at ``x``."""
    live, spoof = [], []
    for m in z.members:
        vote = classify(m.classifier, x)
        if vote.label == Label.LIVE:
            live.append(m.weight)
        elif vote.label == Label.SPOOF:
            spoof.append(m.weight)
    return _tally(live, spoof)


def predict(z: ScoredEnsemble, x) -> Label:
    if not z.members:
        raise StateError("cannot predict with an empty ensemble")
    return tally(z, x).winner()


def vote_matrix(z: ScoredEnsemble, x: np.ndarray) -> np.ndarray:
    """``(n_rows, n_members)`` vote codes, -1 where a member abstains."""
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if z.dimension is not None and x.shape[1] != z.dimension:
        raise ShapeError(f"ensemble expects dimension {z.dimension}, got {x.shape[1]}")
    if not z.members:
        return np.zeros((len(x), 0), dtype=np.int8)
    return np.stack([m.classifier.vote_codes(x) for m in z.members], axis=1)


def predict_many(z: ScoredEnsemble, x) -> np.ndarray:
    """Vectorised :func:`predict`; returns label codes."""
    if not z.members:
        raise StateError("cannot predict with an empty ensemble")
    votes = vote_matrix(z, x)
    w = np.array(z.weights)
    out = np.empty(len(votes), dtype=np.int8)
    for r, row in enumerate(votes):
        out[r] = _tally(w[row == Label.LIVE].tolist(), w[row == Label.SPOOF].tolist()).winner()
    return out


@dataclass(frozen=True, eq=False)
class PhaseSnapshot:
    phase_index: int
    ensemble: ScoredEnsemble  # merged ensemble after this phase
    candidates: PhaseCandidates

    @property
    def admitted(self) -> int:
        return len(self.ensemble) - sum(1 for m in self.ensemble.members
                                        if m.phase_index != self.phase_index)

    @property
    def pruned(self) -> int:
        return len(self.candidates.scored) - self.admitted


@dataclass(frozen=True, eq=False)
class AILearnResult:
    final: ScoredEnsemble
    snapshots: tuple[PhaseSnapshot, ...]


def ailearn(plan: PhasePlan, config: EnsembleConfig, seed: int,
            on_phase: Optional[Callable[[PhaseSnapshot], None]] = None) -> AILearnResult:
    """Learn the phases of ``plan`` one after another.

    Phase ``i`` sees only its own training set and its validation set; the
    earlier phases' classifiers are kept as they are, weights included.
    ``on_phase`` is called after every phase with that phase's snapshot.
    """
    config.validate()
    dimension = plan.phase_trains[0].dimension
    z = ScoredEnsemble.empty(config.theta, dimension)
    snapshots = []
    for i, train in enumerate(plan.phase_trains):
        phase_index = i + 1
        cands = train_phase_candidates(train, plan.validation_for(i), config, phase_index,
                                       derive_seed(seed, phase_index))
        z = merge(z, admit_candidates(cands, config.theta, dimension))
        snap = PhaseSnapshot(phase_index, z, cands)
        snapshots.append(snap)
        logger.info("phase %d: %d candidates, %d admitted, ensemble size %d",
                    phase_index, len(cands.scored), snap.admitted, len(z))
        if on_phase:
            on_phase(snap)
    return AILearnResult(z, tuple(snapshots))


# -- serialization -----------------------------------------------------------

def _dumps(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), allow_nan=True)


def dumps_ensemble(z: ScoredEnsemble, standardizer: Optional[Standardizer] = None) -> str:
    """Line-oriented text form: a JSON header line, then one line per member.

    Floats are written with their shortest round-trip repr, so loading and
    re-dumping reproduces the text exactly.
    """
    if z.dimension is None:
        raise StateError("ensemble has no dimension; nothing to serialize")
    header = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "theta": z.theta,
        "dimension": z.dimension,
        "phases": z.phases,
        "members": len(z.members),
        "standardizer": None if standardizer is None else {
            "mean": standardizer.mean.tolist(), "scale": standardizer.scale.tolist()},
    }
    lines = [_dumps(header)]
    for m in z.members:
        lines.append(_dumps({"phase": m.phase_index, "weight": m.weight,
                             **to_record(m.classifier)}))
    return "\n".join(lines) + "\n"


def loads_ensemble(text: str) -> tuple[ScoredEnsemble, Optional[Standardizer]]:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise EmptyInputError("empty ensemble file")
    try:
        header = json.loads(lines[0])
        if header.get("format") != FORMAT_NAME:
            raise DataError("not an ailearn ensemble file")
        if header.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported ensemble format version {header.get('version')}")
        dim = int(header["dimension"])
        members = []
        for ln in lines[1:]:
            rec = json.loads(ln)
            members.append(ScoredClassifier(from_record(rec, dim), float(rec["weight"]),
                                            int(rec["phase"])))
        if len(members) != header["members"]:
            raise DataError(f"header announces {header['members']} members, found {len(members)}")
        std = header.get("standardizer")
        standardizer = None if std is None else Standardizer(
            np.array(std["mean"], dtype=np.float64), np.array(std["scale"], dtype=np.float64))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, DataError):
            raise
        raise DataError(f"malformed ensemble file: {exc}") from exc
    return ScoredEnsemble(tuple(members), float(header["theta"]), dim), standardizer


def save_ensemble(z: ScoredEnsemble, path, standardizer: Optional[Standardizer] = None) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps_ensemble(z, standardizer))


def load_ensemble(path) -> tuple[ScoredEnsemble, Optional[Standardizer]]:
    with open(path, encoding="utf-8") as fh:
        return loads_ensemble(fh.read())
