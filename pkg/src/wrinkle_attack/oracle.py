"""Black-box classifier boundary: query accounting, a deterministic builtin
linear-softmax classifier for offline work, and an HTTP JSON client for
real model servers."""

from __future__ import annotations

import base64
import threading
import time
from dataclasses import dataclass

import numpy as np
import requests

from .fitness import FitnessError, ProbVector, softmax
from .image_io import Image, png_bytes, resize_bilinear
from .rng import Xoshiro256

POOL_GRID = 8  # builtin feature extractor: POOL_GRID x POOL_GRID mean pooling


class OracleError(Exception):
    """Oracle unreachable, malformed, or returning invalid probabilities."""


class BudgetExhausted(OracleError):
    """The query budget was already spent."""


class QueryLedger:
    """Thread-safe query counter with an optional hard budget."""

    def __init__(self, budget: int | None = None):
        if budget is not None and budget < 0:
            raise ValueError("budget must be >= 0")
        self.budget = budget
        self.count = 0
        self.latencies: list[float] = []
        self._lock = threading.Lock()

    def consume(self) -> None:
        """Atomically charge one query, or raise if the budget is spent."""
        with self._lock:
            if self.budget is not None and self.count >= self.budget:
                raise BudgetExhausted(f"query budget of {self.budget} exhausted")
            self.count += 1

    def grant(self, wanted: int) -> int:
        """How many of ``wanted`` queries still fit in the budget."""
        with self._lock:
            if self.budget is None:
                return wanted
            return max(0, min(wanted, self.budget - self.count))

    def record_latency(self, seconds: float) -> None:
        with self._lock:
            self.latencies.append(seconds)

    @property
    def remaining(self) -> int | None:
        with self._lock:
            return None if self.budget is None else self.budget - self.count


class Oracle:
    """Prediction interface; subclasses implement ``predict_probs``."""

    model_id: str = "oracle"
    input_size: tuple[int, int] | None = None  # (height, width) if fixed
    labels: list[str] | None = None

    def predict_probs(self, img: Image) -> ProbVector:
        raise NotImplementedError

    def describe(self) -> dict:
        return {
            "kind": type(self).__name__,
            "model_id": self.model_id,
            "input_size": list(self.input_size) if self.input_size else None,
            "labels": self.labels,
        }


def predict(oracle: Oracle, img: Image, ledger: QueryLedger | None = None) -> ProbVector:
    """One counted oracle query; validates the returned distribution."""
    if ledger is not None:
        ledger.consume()
    if oracle.input_size is not None and (img.height, img.width) != oracle.input_size:
        img = resize_bilinear(img, *oracle.input_size)
    start = time.perf_counter()
    try:
        probs = oracle.predict_probs(img)
    except FitnessError as exc:
        raise OracleError(f"oracle returned an invalid probability vector: {exc}") from exc
    if ledger is not None:
        ledger.record_latency(time.perf_counter() - start)
    return probs


def pooled_features(img: Image, grid: int = POOL_GRID) -> np.ndarray:
    """Grayscale mean-pooled to a grid x grid feature vector."""
    lum = img.luminance()
    h, w = lum.shape
    rows = (np.arange(grid + 1) * h) // grid
    cols = (np.arange(grid + 1) * w) // grid
    feats = np.empty(grid * grid, dtype=np.float64)
    for i in range(grid):
        for j in range(grid):
            feats[i * grid + j] = lum[rows[i]:rows[i + 1], cols[j]:cols[j + 1]].mean()
    return feats


@dataclass
class LinearSoftmaxOracle(Oracle):
    """Softmax over a linear map of pooled grayscale features.

    Weight rows are one per class; each query pools the image, applies the
    weights, and softmaxes, so predictions respond to spatial rearrangement
    of image content.
    """

    weights: np.ndarray
    labels: list[str] | None = None
    scale: float = 1.0
    model_id: str = "builtin-linear"
    input_size: tuple[int, int] | None = None
    seed: int | None = None

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.ndim != 2 or self.weights.shape[0] < 2:
            raise OracleError("weights must be (classes, features) with >= 2 classes")
        if not np.isfinite(self.weights).all():
            raise OracleError("weights must be finite")
        if self.weights.shape[1] != POOL_GRID * POOL_GRID:
            raise OracleError(f"expected {POOL_GRID * POOL_GRID} features per class")
        if self.labels is not None and len(self.labels) != self.weights.shape[0]:
            raise OracleError("label count must match class count")

    @property
    def num_classes(self) -> int:
        return int(self.weights.shape[0])

    def predict_probs(self, img: Image) -> ProbVector:
        logits = self.scale * (self.weights @ pooled_features(img))
        return softmax(logits)

    def describe(self) -> dict:
        d = super().describe()
        d["seed"] = self.seed
        d["scale"] = self.scale
        d["num_classes"] = self.num_classes
        return d


def load_weight_oracle(path: str, scale: float = 1.0) -> LinearSoftmaxOracle:
    """Builtin oracle from a JSON weight fixture.

    The file holds either a (classes x 64) nested array or an object
    {"weights": [...], "labels": [...], "scale": ...}.
    """
    import json
    from pathlib import Path

    try:
        payload = json.loads(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise OracleError(f"cannot read weight fixture {path}: {exc}") from exc
    labels = None
    if isinstance(payload, dict):
        weights = payload.get("weights")
        labels = payload.get("labels")
        scale = float(payload.get("scale", scale))
    else:
        weights = payload
    if weights is None:
        raise OracleError(f"weight fixture {path} has no weights")
    return LinearSoftmaxOracle(weights=np.asarray(weights, dtype=np.float64),
                               labels=labels, scale=scale,
                               model_id=f"builtin-linear-file:{Path(path).name}")


def build_toy_oracle(seed: int, num_classes: int = 3, scale: float = 1.0,
                     labels: list[str] | None = None) -> LinearSoftmaxOracle:
    """Deterministic desk-scale classifier with seeded zero-sum weight rows.

    Zero-sum rows make a uniform image score uniform probabilities, so the
    classifier reacts to structure rather than global brightness.
    """
    if num_classes < 2:
        raise OracleError("need at least two classes")
    rng = Xoshiro256(seed, stream=97)
    w = np.array(
        [[rng.uniform_in(-1.0, 1.0) for _ in range(POOL_GRID * POOL_GRID)]
         for _ in range(num_classes)]
    )
    w -= w.mean(axis=1, keepdims=True)
    if labels is None:
        labels = [f"class{i}" for i in range(num_classes)]
    return LinearSoftmaxOracle(
        weights=w, labels=labels, scale=scale,
        model_id=f"builtin-linear-seed{seed}-k{num_classes}", seed=seed,
    )


@dataclass
class RemoteOracle(Oracle):
    """HTTP JSON client for the /v1/predict protocol."""

    endpoint: str = ""
    labels: list[str] | None = None
    timeout: float = 10.0
    retries: int = 2
    input_size: tuple[int, int] | None = None
    model_id: str = "remote"

    def __post_init__(self):
        if not self.endpoint.startswith(("http://", "https://")):
            raise OracleError(f"malformed endpoint {self.endpoint!r}")
        if self.timeout <= 0:
            raise OracleError("timeout must be > 0")

    def predict_probs(self, img: Image) -> ProbVector:
        body: dict = {"image_png_b64": base64.b64encode(png_bytes(img)).decode("ascii")}
        if self.labels is not None:
            body["labels"] = self.labels
        url = self.endpoint.rstrip("/") + "/v1/predict"
        last_exc: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                resp = requests.post(url, json=body, timeout=self.timeout)
                resp.raise_for_status()
                payload = resp.json()
                break
            except Exception as exc:  # noqa: BLE001 - retried, re-raised below
                last_exc = exc
        else:
            raise OracleError(f"remote oracle unreachable: {last_exc}")
        if "probs" not in payload:
            raise OracleError(f"malformed oracle response: {payload!r}")
        self.model_id = str(payload.get("model_id", self.model_id))
        return ProbVector(np.asarray(payload["probs"], dtype=np.float64))

    def describe(self) -> dict:
        d = super().describe()
        d["endpoint"] = self.endpoint
        return d
