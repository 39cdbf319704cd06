"""Base classifiers: an SMO-trained binary SVM and a one-class prototype.

The SVM solves the soft-margin dual

    max  sum(a) - 1/2 sum_ij a_i a_j y_i y_j K(x_i, x_j)
    s.t. 0 <= a_i <= C,  sum_i a_i y_i = 0

by sequential minimal optimization. Each step picks the maximal violating
pair (the b_up / b_low rule of Keerthi et al.'s SMO modification) and
solves the two-variable subproblem analytically.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .dataset import Label
from .errors import ConfigError, EmptyInputError, ShapeError, SingleClassError

ABSTAIN = -1


@dataclass(frozen=True)
class SvmParams:
    c: float = 1.0
    gamma: Union[float, str] = "auto"
    kernel: str = "rbf"
    tolerance: float = 1e-3
    epsilon: float = 1e-12
    max_passes: int = 200

    def validate(self) -> None:
        if not self.c > 0:
            raise ConfigError(f"C must be positive, got {self.c}")
        if self.kernel not in ("rbf", "linear"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
            raise ConfigError(f"gamma must be positive or 'auto', got {self.gamma!r}")
        if not self.tolerance > 0:
            raise ConfigError("tolerance must be positive")
        if self.epsilon < 0:
            raise ConfigError("epsilon must be >= 0")
        if self.max_passes < 1:
            raise ConfigError("max_passes must be >= 1")

    def resolve_gamma(self, dimension: int) -> float:
        return 1.0 / dimension if self.gamma == "auto" else float(self.gamma)


def kernel_matrix(a: np.ndarray, b: np.ndarray, kernel: str, gamma: float) -> np.ndarray:
    if kernel == "linear":
        return a @ b.T
    sq = (a * a).sum(axis=1)[:, None] + (b * b).sum(axis=1)[None, :] - 2.0 * (a @ b.T)
    np.maximum(sq, 0.0, out=sq)
    return np.exp(-gamma * sq)


def dual_objective(alpha: np.ndarray, y: np.ndarray, gram: np.ndarray) -> float:
    ay = alpha * y
    return float(alpha.sum() - 0.5 * ay @ gram @ ay)


@dataclass(frozen=True)
class SmoResult:
    alpha: np.ndarray
    b: float
    iterations: int
    converged: bool
    gap: float  # b_low - b_up at exit; <= 2*tolerance when converged


def smo(gram: np.ndarray, y: np.ndarray, c: float, tolerance: float = 1e-3,
        epsilon: float = 1e-12, max_iterations: Optional[int] = None) -> SmoResult:
    """Solve the SVM dual for a precomputed Gram matrix and +-1 targets.

    Stops when the largest KKT violation is within ``tolerance`` or after
    ``max_iterations`` pair updates. The decision function is
    ``f(x) = sum_i alpha_i y_i K(x_i, x) + b``.
    """
    n = len(y)
    y = np.asarray(y, dtype=np.float64)
    if max_iterations is None:
        max_iterations = 200 * n
    alpha = np.zeros(n)
    grad = -y.copy()  # F_i = sum_j alpha_j y_j K_ij - y_i
    diag = np.diag(gram)
    pos = y > 0
    iterations = 0
    converged = False
    gap = math.inf
    snap = c * 1e-12

    while True:
        below_c = alpha < c
        above_0 = alpha > 0
        in_up = (pos & below_c) | (~pos & above_0)
        in_low = (pos & above_0) | (~pos & below_c)
        f_up = np.where(in_up, grad, np.inf)
        f_low = np.where(in_low, grad, -np.inf)
        i_up = int(np.argmin(f_up))
        i_low = int(np.argmax(f_low))
        b_up, b_low = f_up[i_up], f_low[i_low]
        gap = float(b_low - b_up)
        if gap <= 2.0 * tolerance:
            converged = True
            break
        if iterations >= max_iterations:
            break

        i1, i2 = i_low, i_up
        y1, y2 = y[i1], y[i2]
        a1_old, a2_old = alpha[i1], alpha[i2]
        s = y1 * y2
        if s > 0:
            lo, hi = max(0.0, a1_old + a2_old - c), min(c, a1_old + a2_old)
        else:
            lo, hi = max(0.0, a2_old - a1_old), min(c, c + a2_old - a1_old)
        if lo >= hi:
            break
        eta = diag[i1] + diag[i2] - 2.0 * gram[i1, i2]
        slope = y2 * (grad[i1] - grad[i2])
        if eta > 0:
            a2 = min(max(a2_old + slope / eta, lo), hi)
        else:
            # objective is linear (or convex) along the pair: take the better end
            w_lo = slope * (lo - a2_old) - 0.5 * eta * (lo - a2_old) ** 2
            w_hi = slope * (hi - a2_old) - 0.5 * eta * (hi - a2_old) ** 2
            if abs(w_hi - w_lo) <= epsilon:
                break
            a2 = hi if w_hi > w_lo else lo
        if abs(a2 - a2_old) < epsilon * (a2 + a2_old + epsilon):
            break
        a1 = a1_old + s * (a2_old - a2)
        if a1 < snap:
            a2 += s * a1
            a1 = 0.0
        elif a1 > c - snap:
            a2 += s * (a1 - c)
            a1 = c
        a2 = 0.0 if a2 < snap else (c if a2 > c - snap else a2)
        alpha[i1], alpha[i2] = a1, a2
        grad += (y1 * (a1 - a1_old)) * gram[:, i1] + (y2 * (a2 - a2_old)) * gram[:, i2]
        iterations += 1

    ends = [v for v in (b_up, b_low) if np.isfinite(v)]
    b = -float(np.mean(ends)) if ends else 0.0
    return SmoResult(alpha, float(b), iterations, converged, gap)


@dataclass(frozen=True, eq=False)
class BinarySvm:
    support_vectors: np.ndarray  # (m, d)
    coef: np.ndarray  # alpha_i * y_i per support vector
    b: float
    kernel: str
    gamma: float
    c: float
    positive: Label = Label.SPOOF  # label encoded as +1

    @property
    def dimension(self) -> int:
        return self.support_vectors.shape[1]

    def decision_function(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dimension:
            raise ShapeError(f"classifier expects dimension {self.dimension}, got {x.shape[1]}")
        if len(self.coef) == 0:
            return np.full(len(x), self.b)
        return kernel_matrix(x, self.support_vectors, self.kernel, self.gamma) @ self.coef + self.b

    def vote_codes(self, x: np.ndarray) -> np.ndarray:
        f = self.decision_function(x)
        negative = Label.LIVE if self.positive == Label.SPOOF else Label.SPOOF
        codes = np.where(f > 0, int(self.positive), int(negative))
        codes[f == 0] = int(Label.LIVE)
        return codes.astype(np.int8)


@dataclass(frozen=True, eq=False)
class PrototypeClassifier:
    """Votes ``label`` within ``radius`` of ``centroid`` and abstains outside."""

    centroid: np.ndarray
    radius: float
    label: Label

    @property
    def dimension(self) -> int:
        return len(self.centroid)

    def distances(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != self.dimension:
            raise ShapeError(f"classifier expects dimension {self.dimension}, got {x.shape[1]}")
        return np.sqrt(((x - self.centroid) ** 2).sum(axis=1))

    def vote_codes(self, x: np.ndarray) -> np.ndarray:
        inside = self.distances(x) <= self.radius
        return np.where(inside, int(self.label), ABSTAIN).astype(np.int8)


BaseClassifier = Union[BinarySvm, PrototypeClassifier]


@dataclass(frozen=True)
class Vote:
    label: Optional[Label]  # None means abstain
    decision: Optional[float] = None

    @property
    def abstained(self) -> bool:
        return self.label is None


def train_binary_svm(samples, labels, params: SvmParams, seed: int = 0,
                     positive: Label = Label.SPOOF) -> BinarySvm:
    """Fit an SVM with SMO.

    Pair selection is deterministic (lowest index wins ties), so ``seed`` has
    no effect on the result; it is accepted to keep every trainer's
    signature alike.
    """
    params.validate()
    x = np.asarray(samples, dtype=np.float64)
    lab = np.asarray([int(v) for v in labels])
    if x.ndim != 2 or len(x) != len(lab):
        raise ShapeError("samples must be (n, d) with one label per row")
    if len(x) < 2 or len(np.unique(lab)) < 2:
        raise SingleClassError("binary SVM needs at least two samples from both labels")
    # solve in one fixed encoding so the other is an exact sign flip
    y = np.where(lab == int(Label.SPOOF), 1.0, -1.0)
    gamma = params.resolve_gamma(x.shape[1])
    gram = kernel_matrix(x, x, params.kernel, gamma)
    res = smo(gram, y, params.c, params.tolerance, params.epsilon,
              max_iterations=params.max_passes * len(x))
    sv = res.alpha > 0
    sign = 1.0 if Label(positive) == Label.SPOOF else -1.0
    return BinarySvm(x[sv].copy(), sign * (res.alpha * y)[sv], sign * res.b, params.kernel,
                     gamma, params.c, Label(positive))


def train_one_class_prototype(samples, label: Label, radius_quantile: float = 0.95) -> PrototypeClassifier:
    """Centroid of ``samples`` plus a radius covering ``radius_quantile`` of them.

    The radius is the empirical (inverted-CDF) quantile of member distances
    to the centroid, so at least that fraction of members lies inside it.
    """
    if not 0.0 < radius_quantile <= 1.0:
        raise ConfigError(f"radius_quantile must lie in (0, 1], got {radius_quantile}")
    x = np.asarray(samples, dtype=np.float64)
    if x.size == 0:
        raise EmptyInputError("prototype needs at least one sample")
    x = np.atleast_2d(x)
    centroid = x.mean(axis=0)
    dist = np.sqrt(((x - centroid) ** 2).sum(axis=1))
    radius = float(np.quantile(dist, radius_quantile, method="inverted_cdf"))
    return PrototypeClassifier(centroid, radius, Label(label))


def constant_classifier(samples, label: Label) -> PrototypeClassifier:
    """Prototype with infinite radius: votes ``label`` everywhere."""
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if x.size == 0:
        raise EmptyInputError("classifier needs at least one sample")
    return PrototypeClassifier(x.mean(axis=0), math.inf, Label(label))


def classify(classifier: BaseClassifier, x) -> Vote:
    v = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if isinstance(classifier, BinarySvm):
        f = float(classifier.decision_function(v)[0])
        return Vote(Label(int(classifier.vote_codes(v)[0])), f)
    code = int(classifier.vote_codes(v)[0])
    return Vote(None if code == ABSTAIN else Label(code))


def vote_codes(classifier: BaseClassifier, x) -> np.ndarray:
    """Vectorised :func:`classify`: label codes per row, -1 for abstain."""
    return classifier.vote_codes(x)


# -- serialization records ---------------------------------------------------

def to_record(classifier: BaseClassifier) -> dict:
    if isinstance(classifier, BinarySvm):
        return {
            "kind": "svm",
            "kernel": classifier.kernel,
            "gamma": classifier.gamma,
            "c": classifier.c,
            "positive": str(classifier.positive),
            "b": classifier.b,
            "support": classifier.support_vectors.tolist(),
            "coef": classifier.coef.tolist(),
        }
    return {
        "kind": "prototype",
        "label": str(classifier.label),
        "radius": classifier.radius,
        "centroid": classifier.centroid.tolist(),
    }


def from_record(record: dict, dimension: int) -> BaseClassifier:
    kind = record.get("kind")
    if kind == "svm":
        sv = np.array(record["support"], dtype=np.float64).reshape(-1, dimension)
        return BinarySvm(sv, np.array(record["coef"], dtype=np.float64), float(record["b"]),
                         record["kernel"], float(record["gamma"]), float(record["c"]),
                         Label.parse(record["positive"]))
    if kind == "prototype":
        centroid = np.array(record["centroid"], dtype=np.float64)
        if centroid.shape != (dimension,):
            raise ShapeError(f"prototype centroid has shape {centroid.shape}")
        return PrototypeClassifier(centroid, float(record["radius"]), Label.parse(record["label"]))
    raise ValueError(f"unknown classifier kind {kind!r}")
