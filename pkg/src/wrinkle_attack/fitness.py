"""Adversarial score, success indicator, and the hierarchical fitness.

Failed candidates score a convex blend of normalized adversarial score and
perceptual similarity in [0, 1]; successful candidates score 1 plus a
perceptual bonus, so every success ranks at or above every failure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class FitnessError(Exception):
    """Invalid probabilities, labels, or fitness inputs."""


@dataclass(frozen=True)
class FitnessConfig:
    alpha2: float = 0.3
    eta: float = 0.5
    eps_adv: float = 1e-8

    def __post_init__(self):
        if not 0.0 <= self.alpha2 <= 1.0:
            raise FitnessError("alpha2 must lie in [0, 1]")
        if not 0.0 <= self.eta <= 1.0:
            raise FitnessError("eta must lie in [0, 1]")
        if self.eps_adv <= 0:
            raise FitnessError("eps_adv must be > 0")

    @property
    def adv_ceiling(self) -> float:
        """Largest attainable adversarial score, -log(eps)."""
        return -math.log(self.eps_adv)


@dataclass(frozen=True)
class ProbVector:
    """Class-probability distribution returned by an oracle."""

    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", v)
        if v.ndim != 1 or v.size < 2:
            raise FitnessError(f"probability vector must be 1-D with >= 2 classes, got {v.shape}")
        if not np.isfinite(v).all():
            raise FitnessError("probability vector contains non-finite values")
        if v.min() < 0.0 or v.max() > 1.0:
            raise FitnessError("probabilities must lie in [0, 1]")
        if abs(float(v.sum()) - 1.0) > 1e-6:
            raise FitnessError(f"probabilities sum to {v.sum()}, expected 1 +/- 1e-6")

    @property
    def num_classes(self) -> int:
        return int(self.values.size)

    def top_class(self) -> int:
        """Argmax with ties broken toward the lowest class index."""
        return int(np.argmax(self.values))

    def prob_of(self, label: int) -> float:
        if not 0 <= label < self.num_classes:
            raise FitnessError(f"label {label} out of range for {self.num_classes} classes")
        return float(self.values[label])


def success_indicator(probs: ProbVector, label: int) -> bool:
    """True iff the predicted class differs from the true label."""
    if not 0 <= label < probs.num_classes:
        raise FitnessError(f"label {label} out of range for {probs.num_classes} classes")
    return probs.top_class() != label


def adversarial_score(probs: ProbVector, label: int,
                      cfg: FitnessConfig = FitnessConfig()) -> float:
    """-log of the true-class probability, stabilized away from log(0)."""
    return -math.log(probs.prob_of(label) + cfg.eps_adv)


def normalize_adv(s_adv: float, cfg: FitnessConfig = FitnessConfig()) -> float:
    """Map the adversarial score onto [0, 1] by its attainable ceiling."""
    return min(1.0, max(0.0, s_adv / cfg.adv_ceiling))


def hierarchical_fitness(s_ladv: float, s_perc: float, success: bool,
                         cfg: FitnessConfig = FitnessConfig()) -> float:
    if not 0.0 <= s_ladv <= 1.0:
        raise FitnessError(f"s_ladv {s_ladv} outside [0, 1]")
    if not 0.0 <= s_perc <= 1.0:
        raise FitnessError(f"s_perc {s_perc} outside [0, 1]")
    if success:
        return 1.0 + cfg.eta * s_perc
    return (1.0 - cfg.alpha2) * s_ladv + cfg.alpha2 * s_perc


def softmax(logits: np.ndarray) -> ProbVector:
    """Numerically stable softmax producing a validated ProbVector."""
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max()
    e = np.exp(z)
    return ProbVector(e / e.sum())
