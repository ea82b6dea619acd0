"""Keypoint-transfer metrics on externally supplied 2D predictions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch

DEFAULT_AP_THRESHOLDS = (15.0, 30.0, 45.0)  # pixels


@dataclass(eq=False)
class KeypointAnnotationSet:
    """Index-paired ground-truth and predicted 2D pixel keypoints."""

    ground_truth: np.ndarray
    predictions: np.ndarray

    def __post_init__(self):
        self.ground_truth = np.asarray(self.ground_truth, dtype=float).reshape(-1, 2)
        self.predictions = np.asarray(self.predictions, dtype=float).reshape(-1, 2)
        if self.ground_truth.shape[0] < 1:
            raise LengthMismatch("annotation set must be non-empty")
        if self.ground_truth.shape != self.predictions.shape:
            raise LengthMismatch("ground truth and predictions differ in length")

    def distances(self) -> np.ndarray:
        return np.linalg.norm(self.ground_truth - self.predictions, axis=1)


def akd(ann: KeypointAnnotationSet) -> float:
    """Average keypoint distance in pixels."""
    return float(ann.distances().mean())


def ap_at(ann: KeypointAnnotationSet, threshold: float) -> float:
    """Fraction of keypoints within `threshold` pixels of ground truth."""
    return float((ann.distances() <= threshold).mean())


def metrics_table(ann: KeypointAnnotationSet,
                  thresholds=DEFAULT_AP_THRESHOLDS) -> dict:
    table = {"akd": akd(ann)}
    for th in thresholds:
        table[f"ap@{th:g}"] = ap_at(ann, th)
    return table
