"""Confusion counts, Acc/BPCER/APCER cells and stability-plasticity deltas."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .dataset import Label
from .errors import EmptyInputError, ShapeError

CONVENTIONS = ("relative", "absolute")


@dataclass(frozen=True)
class ConfusionCounts:
    live_correct: int = 0
    live_as_spoof: int = 0
    spoof_correct: int = 0
    spoof_as_live: int = 0

    @property
    def live_total(self) -> int:
        return self.live_correct + self.live_as_spoof

    @property
    def spoof_total(self) -> int:
        return self.spoof_correct + self.spoof_as_live

    @property
    def total(self) -> int:
        return self.live_total + self.spoof_total


@dataclass(frozen=True)
class EvalCell:
    """Accuracy in percent; error rates in [0, 1], ``None`` meaning N/A."""

    accuracy: float
    bpcer: Optional[float]
    apcer: Optional[float]

    def rounded(self) -> "EvalCell":
        return EvalCell(round(self.accuracy, 2), _round(self.bpcer), _round(self.apcer))


def _round(v: Optional[float]) -> Optional[float]:
    return None if v is None else round(v, 2)


def confusion(predictions: Sequence, truth: Sequence) -> ConfusionCounts:
    p = np.asarray([int(v) for v in predictions])
    t = np.asarray([int(v) for v in truth])
    if len(p) != len(t):
        raise ShapeError(f"{len(p)} predictions for {len(t)} labels")
    if len(t) == 0:
        raise EmptyInputError("nothing to score")
    live, spoof = t == Label.LIVE, t == Label.SPOOF
    return ConfusionCounts(
        live_correct=int(np.count_nonzero(live & (p == Label.LIVE))),
        live_as_spoof=int(np.count_nonzero(live & (p == Label.SPOOF))),
        spoof_correct=int(np.count_nonzero(spoof & (p == Label.SPOOF))),
        spoof_as_live=int(np.count_nonzero(spoof & (p == Label.LIVE))),
    )


def rates(c: ConfusionCounts) -> EvalCell:
    if c.total == 0:
        raise EmptyInputError("confusion counts are all zero")
    acc = 100.0 * (c.live_correct + c.spoof_correct) / c.total
    bpcer = c.live_as_spoof / c.live_total if c.live_total else None
    apcer = c.spoof_as_live / c.spoof_total if c.spoof_total else None
    return EvalCell(acc, bpcer, apcer)


@dataclass(frozen=True)
class Deltas:
    """Phase-I to phase-II changes; ``None`` marks an undefined value
    (zero denominator under the relative convention, or a missing rate)."""

    gain_nf: Optional[float]
    loss_kf: Optional[float]
    fpr_loss_nf: Optional[float]
    fpr_change_kf: Optional[float]
    convention: str = "relative"


def _change(before: Optional[float], after: Optional[float], convention: str) -> Optional[float]:
    """Signed change ``after - before``, relative to ``before`` in percent when asked."""
    if before is None or after is None:
        return None
    if convention == "absolute":
        return after - before
    if before == 0:
        return None
    return (after - before) / before * 100.0


def phase_deltas(kf_i: EvalCell, nf_i: EvalCell, kf_ii: EvalCell, nf_ii: EvalCell,
                 convention: str = "relative") -> Deltas:
    """Stability-plasticity deltas between two phases.

    FPR here is the share of spoofs accepted as live, i.e. APCER. Gains and
    losses are signed so that a positive number is good news for gain and
    bad news for loss.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"convention must be one of {CONVENTIONS}")

    def neg(v):
        return None if v is None else -v

    return Deltas(
        gain_nf=_change(nf_i.accuracy, nf_ii.accuracy, convention),
        loss_kf=neg(_change(kf_i.accuracy, kf_ii.accuracy, convention)),
        fpr_loss_nf=neg(_change(nf_i.apcer, nf_ii.apcer, convention)),
        fpr_change_kf=_change(kf_i.apcer, kf_ii.apcer, convention),
        convention=convention,
    )


@dataclass(frozen=True)
class StabilityPlasticityReport:
    """Cells per phase as ``(kf, nf)`` pairs plus first-to-last deltas.

    Deltas are computed from the cells rounded to report precision, so they
    can be recomputed from the printed table.
    """

    cells: tuple[tuple[EvalCell, EvalCell], ...]
    deltas: Deltas

    @classmethod
    def build(cls, cells: Sequence[tuple[EvalCell, EvalCell]], convention: str = "relative"
              ) -> "StabilityPlasticityReport":
        cells = tuple((kf.rounded(), nf.rounded()) for kf, nf in cells)
        (kf_i, nf_i), (kf_ii, nf_ii) = cells[0], cells[-1]
        return cls(cells, phase_deltas(kf_i, nf_i, kf_ii, nf_ii, convention))

    def check_consistency(self, tol: float = 0.01) -> bool:
        (kf_i, nf_i), (kf_ii, nf_ii) = self.cells[0], self.cells[-1]
        again = phase_deltas(kf_i, nf_i, kf_ii, nf_ii, self.deltas.convention)
        for a, b in zip(_values(again), _values(self.deltas)):
            if (a is None) != (b is None):
                return False
            if a is not None and abs(a - b) > tol:
                return False
        return True


def _values(d: Deltas) -> tuple[Optional[float], ...]:
    return d.gain_nf, d.loss_kf, d.fpr_loss_nf, d.fpr_change_kf
