"""Data model, phase partitioning, validation holdout, standardization and
the synthetic blob generator."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DataError,
    EmptyInputError,
    ProtocolError,
    ShapeError,
    StratificationError,
    TaggingError,
)


class Label(IntEnum):
    """Binary class label. The integer order (LIVE < SPOOF) breaks every tie."""

    LIVE = 0
    SPOOF = 1

    @classmethod
    def parse(cls, text: str) -> "Label":
        key = text.strip().lower()
        if key == "live":
            return cls.LIVE
        if key == "spoof":
            return cls.SPOOF
        raise ValueError(f"unknown label {text!r}")

    def __str__(self) -> str:
        return self.name.lower()


@dataclass(frozen=True)
class Instance:
    features: tuple[float, ...]
    label: Label
    material: Optional[str] = None


class AccessCounter:
    """Counts instance reads on every dataset sharing this counter."""

    def __init__(self) -> None:
        self.reads = 0


class Dataset:
    """Immutable collection of labelled feature vectors.

    Features live in a read-only ``(n, dimension)`` float array, labels in an
    int8 array of :class:`Label` codes. Reading ``features`` or ``labels``
    is recorded on an attached :class:`AccessCounter`, which is how the
    harness proves that an incremental phase never touches earlier data.
    """

    __slots__ = ("_features", "_labels", "_materials", "dimension", "counter")

    def __init__(
        self,
        features,
        labels,
        materials: Optional[Sequence[Optional[str]]] = None,
        dimension: Optional[int] = None,
        allow_empty: bool = False,
    ):
        x = np.array(features, dtype=np.float64)
        if x.ndim == 1 and x.size == 0:
            x = x.reshape(0, dimension or 0)
        if x.ndim != 2:
            raise ShapeError(f"features must be 2-D, got shape {x.shape}")
        if dimension is not None and x.shape[1] != dimension:
            raise ShapeError(f"expected dimension {dimension}, got {x.shape[1]}")
        n, d = x.shape
        if d < 1:
            raise ShapeError("dimension must be positive")
        if n == 0 and not allow_empty:
            raise EmptyInputError("dataset is empty")
        if not np.all(np.isfinite(x)):
            raise DataError("features contain NaN or infinite values")
        y = np.array([int(v) for v in labels], dtype=np.int8)
        if y.shape != (n,):
            raise ShapeError(f"{n} feature rows but {y.shape[0]} labels")
        if n and not np.all((y == Label.LIVE) | (y == Label.SPOOF)):
            raise DataError("labels must be LIVE or SPOOF")
        if materials is None:
            mats: tuple[Optional[str], ...] = (None,) * n
        else:
            mats = tuple(m if m else None for m in materials)
            if len(mats) != n:
                raise ShapeError(f"{n} feature rows but {len(mats)} material tags")
        for i, m in enumerate(mats):
            if m is not None and y[i] == Label.LIVE:
                raise TaggingError(f"instance {i}: live instance carries material {m!r}")
        x.setflags(write=False)
        y.setflags(write=False)
        self._features = x
        self._labels = y
        self._materials = mats
        self.dimension = d
        self.counter: Optional[AccessCounter] = None

    @classmethod
    def from_instances(cls, instances: Iterable[Instance], dimension: Optional[int] = None,
                       allow_empty: bool = False) -> "Dataset":
        items = list(instances)
        feats = [inst.features for inst in items]
        if not items:
            feats = np.zeros((0, dimension or 1))
        return cls(feats, [inst.label for inst in items], [inst.material for inst in items],
                   dimension=dimension, allow_empty=allow_empty)

    @classmethod
    def empty(cls, dimension: int) -> "Dataset":
        return cls(np.zeros((0, dimension)), [], dimension=dimension, allow_empty=True)

    def _touch(self) -> None:
        if self.counter is not None:
            self.counter.reads += len(self._labels)

    @property
    def features(self) -> np.ndarray:
        self._touch()
        return self._features

    @property
    def labels(self) -> np.ndarray:
        self._touch()
        return self._labels

    @property
    def materials(self) -> tuple[Optional[str], ...]:
        return self._materials

    @property
    def instances(self) -> list[Instance]:
        return list(self)

    def __iter__(self) -> Iterator[Instance]:
        self._touch()
        for row, lab, mat in zip(self._features, self._labels, self._materials):
            yield Instance(tuple(float(v) for v in row), Label(int(lab)), mat)

    def __len__(self) -> int:
        return len(self._labels)

    def __repr__(self) -> str:
        return (f"Dataset(n={len(self)}, dimension={self.dimension}, "
                f"live={self.count(Label.LIVE)}, spoof={self.count(Label.SPOOF)})")

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Dataset):
            return NotImplemented
        return (self.dimension == other.dimension
                and np.array_equal(self._features, other._features)
                and np.array_equal(self._labels, other._labels)
                and self._materials == other._materials)

    __hash__ = None  # type: ignore[assignment]

    def count(self, label: Label) -> int:
        return int(np.count_nonzero(self._labels == label))

    def material_set(self) -> set[str]:
        return {m for m in self._materials if m is not None}

    def subset(self, index) -> "Dataset":
        """Rows selected by an integer index array or boolean mask, in order.

        The result shares this dataset's access counter.
        """
        self._touch()
        idx = np.asarray(index)
        if idx.dtype == bool:
            idx = np.flatnonzero(idx)
        out = Dataset(self._features[idx], self._labels[idx],
                      [self._materials[i] for i in idx], dimension=self.dimension,
                      allow_empty=True)
        out.counter = self.counter
        return out

    def tracked(self, counter: AccessCounter) -> "Dataset":
        """A copy whose reads are recorded on ``counter``."""
        out = Dataset(self._features, self._labels, self._materials,
                      dimension=self.dimension, allow_empty=True)
        out.counter = counter
        return out

    def with_features(self, features: np.ndarray) -> "Dataset":
        return Dataset(features, self._labels, self._materials, dimension=self.dimension,
                       allow_empty=True)

    @staticmethod
    def concat(parts: Sequence["Dataset"]) -> "Dataset":
        if not parts:
            raise EmptyInputError("nothing to concatenate")
        dims = {p.dimension for p in parts}
        if len(dims) != 1:
            raise ShapeError(f"cannot concatenate dimensions {sorted(dims)}")
        mats: list[Optional[str]] = []
        for p in parts:
            mats.extend(p.materials)
        return Dataset(np.vstack([p.features for p in parts]),
                       np.concatenate([p.labels for p in parts]), mats,
                       dimension=parts[0].dimension, allow_empty=True)


@dataclass(frozen=True)
class PhasePlan:
    """Per-phase training data plus the fixed evaluation sets.

    ``validation`` is the shared held-out set carved from phase 1.
    ``phase_holdouts[i]`` is the extra validation slice held out from phase
    ``i``'s own training data (empty for phase 1, and for every phase when
    per-phase holdout is disabled).
    """

    phase_trains: tuple[Dataset, ...]
    test_kf: Dataset
    test_nf: Dataset
    validation: Dataset
    phase_holdouts: tuple[Dataset, ...] = ()

    @property
    def phases(self) -> int:
        return len(self.phase_trains)

    def validation_for(self, phase: int) -> Dataset:
        """Validation set seen by the 0-based ``phase``."""
        if phase < len(self.phase_holdouts) and len(self.phase_holdouts[phase]):
            return Dataset.concat([self.validation, self.phase_holdouts[phase]])
        return self.validation


def holdout_validation(train: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Stratified split into ``(remainder, validation)``.

    Each label present gets ``round(fraction * count)`` validation rows
    (half rounds up). Both parts keep the input order.
    """
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"validation fraction must lie in (0, 1), got {fraction}")
    rng = np.random.default_rng(seed)
    labels = train.labels
    chosen: list[np.ndarray] = []
    for label in Label:
        members = np.flatnonzero(labels == label)
        if len(members) == 0:
            continue
        if len(members) < 2:
            raise StratificationError(
                f"class {label} has {len(members)} instance(s); stratification needs 2")
        take = int(math.floor(fraction * len(members) + 0.5))
        chosen.append(rng.permutation(members)[:take])
    mask = np.zeros(len(train), dtype=bool)
    for c in chosen:
        mask[c] = True
    return train.subset(~mask), train.subset(mask)


def partition_phases(
    full_train: Dataset,
    full_test: Dataset,
    kf_materials: Iterable[str],
    seed: int,
    validation_fraction: float = 0.2,
    phase_holdout: bool = True,
) -> PhasePlan:
    """Split data into the two-phase Known-Fake / New-Fake protocol.

    Phase 1 trains on all live rows plus the known-fake materials, phase 2
    on the remaining (new-fake) spoof rows only. The shared validation set is
    a stratified holdout of phase 1. With ``phase_holdout`` a same-fraction
    holdout of phase 2 is kept as that phase's extra validation slice.
    """
    kf = set(kf_materials)
    if not kf:
        raise ProtocolError("kf_materials must not be empty")
    if full_train.dimension != full_test.dimension:
        raise ShapeError(f"train dimension {full_train.dimension} != "
                         f"test dimension {full_test.dimension}")
    for name, ds in (("train", full_train), ("test", full_test)):
        spoof_untagged = [i for i, (lab, m) in enumerate(zip(ds.labels, ds.materials))
                          if lab == Label.SPOOF and m is None]
        if spoof_untagged:
            raise TaggingError(f"{len(spoof_untagged)} {name} spoof instance(s) without a "
                               f"material tag (first at row {spoof_untagged[0]})")
    present = full_train.material_set()
    unknown = kf - present
    if unknown:
        raise ProtocolError(f"kf materials not present in training data: {sorted(unknown)}")
    if kf >= present:
        raise ProtocolError("kf materials cover every material; the new-fake set would be empty")
    if full_train.count(Label.LIVE) == 0:
        raise ProtocolError("training data has no live instances")

    labels = full_train.labels
    mats = full_train.materials
    live = labels == Label.LIVE
    is_kf = np.array([m in kf for m in mats])
    phase1 = full_train.subset(live | is_kf)
    phase2 = full_train.subset(~live & ~is_kf)

    ss = np.random.SeedSequence(seed)
    seed1, seed2 = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    phase1, validation = holdout_validation(phase1, validation_fraction, seed1)
    if validation.count(Label.LIVE) == 0 or validation.count(Label.SPOOF) == 0:
        raise ProtocolError("validation holdout does not contain both labels")
    holdouts = (Dataset.empty(full_train.dimension),)
    if phase_holdout:
        phase2, hold2 = holdout_validation(phase2, validation_fraction, seed2)
        holdouts += (hold2,)
    else:
        holdouts += (Dataset.empty(full_train.dimension),)

    tl = full_test.labels
    tmats = full_test.materials
    t_kf = np.array([m in kf for m in tmats])
    test_kf = full_test.subset((tl == Label.LIVE) | t_kf)
    test_nf = full_test.subset((tl == Label.SPOOF) & ~t_kf)
    return PhasePlan((phase1, phase2), test_kf, test_nf, validation, holdouts)


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def identity(cls, dimension: int) -> "Standardizer":
        return cls(np.zeros(dimension), np.ones(dimension))

    @property
    def dimension(self) -> int:
        return len(self.mean)

    def transform(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.dimension:
            raise ShapeError(f"standardizer has {self.dimension} features, input has {x.shape[-1]}")
        return (x - self.mean) / self.scale


def fit_standardizer(train: Dataset) -> Standardizer:
    """Per-feature mean and population standard deviation.

    A zero-variance feature is stored with deviation 1, so applying the
    standardizer only re-centres it.
    """
    if len(train) == 0:
        raise EmptyInputError("cannot fit a standardizer on an empty dataset")
    x = train.features
    mean = x.mean(axis=0)
    std = x.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    return Standardizer(mean, std)


def apply_standardizer(s: Standardizer, d: Dataset) -> Dataset:
    if d.dimension != s.dimension:
        raise ShapeError(f"standardizer has {s.dimension} features, dataset has {d.dimension}")
    out = d.with_features(s.transform(d.features))
    out.counter = d.counter
    return out


@dataclass(frozen=True)
class MaterialBlob:
    name: str
    size: int
    offset: float  # centre distance from the origin, in blob deviations


@dataclass(frozen=True)
class SyntheticSpec:
    """Isotropic Gaussian blobs. ``live_size`` and each material ``size`` are
    per split: train and test each get that many rows."""

    dimension: int = 8
    live_blobs: int = 1
    live_size: int = 800
    materials: tuple[MaterialBlob, ...] = field(default_factory=lambda: tuple(
        MaterialBlob(name, 200, 6.0) for name in ("ecoflex", "gelatin", "latex", "woodglue")))
    blob_std: float = 1.0

    def validate(self) -> None:
        if self.dimension < 1:
            raise ConfigError("dimension must be positive")
        if self.live_blobs < 1 or self.live_size < self.live_blobs:
            raise ConfigError("need at least one live blob and one live row per blob")
        if len(self.materials) < 2:
            raise ConfigError("need at least two material blobs")
        if len({m.name for m in self.materials}) != len(self.materials):
            raise ConfigError("material names must be unique")
        for m in self.materials:
            if m.size <= 0 or not m.name:
                raise ConfigError(f"bad material blob {m!r}")
            if m.offset < 0:
                raise ConfigError(f"material {m.name}: offset must be >= 0")
        if not self.blob_std > 0:
            raise ConfigError("blob_std must be positive")


def material_direction(index: int, dimension: int) -> np.ndarray:
    """Unit direction of the ``index``-th material centre.

    Materials take the coordinate axes in turn, then the negative axes, then
    diagonals of consecutive axis pairs.
    """
    v = np.zeros(dimension)
    if index < dimension:
        v[index] = 1.0
    elif index < 2 * dimension:
        v[index - dimension] = -1.0
    else:
        j = index - 2 * dimension
        v[j % dimension] = 1.0
        v[(j + 1) % dimension] += 1.0
        v /= np.linalg.norm(v)
    return v


def _live_centre(index: int, dimension: int, std: float) -> np.ndarray:
    c = np.zeros(dimension)
    if index:
        # extra live blobs sit 2 deviations out along the trailing axes
        c[(dimension - index) % dimension] = -2.0 * std
    return c


def generate_synthetic(spec: SyntheticSpec, seed: int) -> tuple[Dataset, Dataset]:
    spec.validate()
    rng = np.random.default_rng(seed)
    d, s = spec.dimension, spec.blob_std

    def draw() -> Dataset:
        xs, ys, ms = [], [], []
        per_blob = np.full(spec.live_blobs, spec.live_size // spec.live_blobs)
        per_blob[: spec.live_size % spec.live_blobs] += 1
        for b, count in enumerate(per_blob):
            xs.append(_live_centre(b, d, s) + s * rng.standard_normal((count, d)))
            ys += [Label.LIVE] * int(count)
            ms += [None] * int(count)
        for i, m in enumerate(spec.materials):
            centre = material_direction(i, d) * m.offset * s
            xs.append(centre + s * rng.standard_normal((m.size, d)))
            ys += [Label.SPOOF] * m.size
            ms += [m.name] * m.size
        return Dataset(np.vstack(xs), ys, ms, dimension=d)

    train = draw()
    test = draw()
    return train, test
