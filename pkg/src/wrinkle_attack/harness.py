"""Dataset-level orchestration: per-image attacks, ACC/ASR summaries,
ablation sweeps, transfer evaluation, and reproducible run manifests."""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import json
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from . import __version__
from .fitness import FitnessConfig
from .ga import GAConfig, random_probe, run_attack
from .genes import GeneBox, ScaleMask, default_box
from .image_io import ImageError, load_image, resize_bilinear, save_image
from .oracle import Oracle, OracleError, RemoteOracle, predict
from .perceptual import PerceptualConfig
from .rng import derive_seed

SWEEP_AXES = ("budget", "population", "alpha1", "alpha2", "components")


class HarnessError(Exception):
    pass


@dataclass(frozen=True)
class DatasetItem:
    image_id: str
    path: Path
    label: int
    label_name: str


@dataclass(frozen=True)
class AttackSettings:
    """Everything besides the oracle that defines a run."""

    ga: GAConfig = field(default_factory=GAConfig)
    fitness: FitnessConfig = field(default_factory=FitnessConfig)
    perceptual: PerceptualConfig = field(default_factory=PerceptualConfig)
    box: GeneBox = field(default_factory=default_box)
    mask: ScaleMask = field(default_factory=ScaleMask)
    random_baseline: bool = False

    def to_dict(self) -> dict:
        return {
            "ga": dataclasses.asdict(self.ga),
            "fitness": dataclasses.asdict(self.fitness),
            "perceptual": dataclasses.asdict(self.perceptual),
            "box": self.box.to_dict(),
            "mask": dataclasses.asdict(self.mask),
            "random_baseline": self.random_baseline,
        }


def load_dataset(index_path: str | Path) -> list[DatasetItem]:
    """Read a dataset index CSV with columns filename,label_index,label_name."""
    index_path = Path(index_path)
    if not index_path.is_file():
        raise HarnessError(f"dataset index not found: {index_path}")
    items = []
    with open(index_path, newline="") as fh:
        for row in csv.DictReader(fh):
            try:
                path = index_path.parent / row["filename"]
                items.append(DatasetItem(
                    image_id=Path(row["filename"]).stem,
                    path=path,
                    label=int(row["label_index"]),
                    label_name=row.get("label_name", str(row["label_index"])),
                ))
            except (KeyError, ValueError) as exc:
                raise HarnessError(f"bad index row {row!r}: {exc}") from exc
    if not items:
        raise HarnessError(f"dataset index {index_path} lists no images")
    return items


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def build_manifest(items: list[DatasetItem], oracle: Oracle,
                   settings: AttackSettings) -> dict:
    return {
        "tool_version": __version__,
        "master_seed": settings.ga.seed,
        "oracle": oracle.describe(),
        "config": settings.to_dict(),
        "dataset": [
            {
                "id": it.image_id,
                "file": str(it.path),
                "sha256": _sha256(it.path),
                "label": it.label,
                "label_name": it.label_name,
            }
            for it in items
        ],
    }


def _write_json(path: Path, payload: dict) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True))
    os.replace(tmp, path)


def _attack_one(item: DatasetItem, index: int, oracle: Oracle,
                settings: AttackSettings, out_dir: Path | None) -> dict:
    record: dict = {
        "id": item.image_id,
        "label": item.label,
        "label_name": item.label_name,
        "seed": derive_seed(settings.ga.seed, index),
    }
    start = time.perf_counter()
    try:
        img = load_image(item.path)
        if oracle.input_size is not None and (img.height, img.width) != oracle.input_size:
            img = resize_bilinear(img, *oracle.input_size)
    except ImageError as exc:
        record.update(status="error", error_kind="io", error=str(exc))
        record["duration_s"] = time.perf_counter() - start
        return record
    try:
        clean = predict(oracle, img)
    except OracleError as exc:
        record.update(status="error", error_kind="oracle", error=str(exc))
        record["duration_s"] = time.perf_counter() - start
        return record
    record["clean_prediction"] = clean.top_class()
    record["clean_correct"] = clean.top_class() == item.label
    if not record["clean_correct"]:
        record.update(status="clean-error")
        record["duration_s"] = time.perf_counter() - start
        return record

    cfg = replace(settings.ga, seed=record["seed"])
    if settings.random_baseline:
        result = random_probe(img, item.label, oracle, record["seed"],
                              settings.fitness, settings.perceptual,
                              settings.box, settings.mask)
    else:
        result = run_attack(img, item.label, oracle, cfg, settings.fitness,
                            settings.perceptual, settings.box, settings.mask)
    record["status"] = "aborted" if result.aborted else "attacked"
    record.update(result.to_dict())
    if out_dir is not None and result.best_image is not None:
        adv_dir = out_dir / "adversarial"
        adv_dir.mkdir(parents=True, exist_ok=True)
        adv_path = adv_dir / f"{item.image_id}.png"
        tmp_path = adv_dir / f".{item.image_id}.png.tmp"
        save_image(result.best_image, tmp_path)
        os.replace(tmp_path, adv_path)
        record["adversarial_path"] = str(adv_path)
    record["duration_s"] = time.perf_counter() - start
    return record


def summarize(records: list[dict]) -> dict:
    """Aggregate metrics; deterministic function of the persisted records."""
    total = len(records)
    clean_correct = sum(1 for r in records if r.get("clean_correct"))
    attacked = [r for r in records if r.get("status") == "attacked"]
    successes = [r for r in records if r.get("status") == "attacked" and r.get("success")]
    post_correct = clean_correct - len(successes)
    summary = {
        "images": total,
        "clean_correct": clean_correct,
        "clean_acc": clean_correct / total if total else 0.0,
        "attacked": len(attacked),
        "successes": len(successes),
        "asr": len(successes) / len(attacked) if attacked else 0.0,
        "post_attack_correct": post_correct,
        "post_attack_acc": post_correct / total if total else 0.0,
        "mean_queries": (sum(r["queries"] for r in attacked) / len(attacked)
                         if attacked else 0.0),
        "mean_success_s_perc": (sum(r["s_perc"] for r in successes) / len(successes)
                                if successes else 0.0),
    }
    return summary


# duration_s stays out: results.csv must be byte-identical across reruns.
_CSV_FIELDS = ("id", "label", "label_name", "status", "clean_prediction",
               "clean_correct", "success", "queries", "best_fitness",
               "s_ladv", "s_perc", "restarts")


def _write_results_csv(path: Path, records: list[dict]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS, extrasaction="ignore")
        writer.writeheader()
        for r in records:
            writer.writerow({k: r.get(k, "") for k in _CSV_FIELDS})


def attack_dataset(items: list[DatasetItem], oracle: Oracle,
                   settings: AttackSettings, out_dir: str | Path | None = None,
                   workers: int = 1) -> tuple[list[dict], dict]:
    """Attack every initially-correct image; persist records and a summary.

    Per-image seeds are derived from the master seed by dataset position,
    so reruns and sweep cells share the same seed schedule.
    """
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        _write_json(out_path / "manifest.json", build_manifest(items, oracle, settings))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(
                lambda pair: _attack_one(pair[1], pair[0], oracle, settings, out_path),
                enumerate(items)))
    else:
        records = [_attack_one(it, i, oracle, settings, out_path)
                   for i, it in enumerate(items)]

    summary = summarize(records)
    if out_path is not None:
        rec_dir = out_path / "records"
        rec_dir.mkdir(exist_ok=True)
        for r in records:
            _write_json(rec_dir / f"{r['id']}.json", r)
        _write_results_csv(out_path / "results.csv", records)
        _write_json(out_path / "summary.json", summary)
    return records, summary


def apply_axis(settings: AttackSettings, axis: str, value: str) -> AttackSettings:
    """Return settings with one ablation axis overridden."""
    if axis == "budget":
        return replace(settings, ga=replace(settings.ga, budget=int(value)))
    if axis == "population":
        return replace(settings, ga=replace(settings.ga, population=int(value)))
    if axis == "alpha1":
        return replace(settings, perceptual=replace(settings.perceptual,
                                                    alpha1=float(value)))
    if axis == "alpha2":
        return replace(settings, fitness=replace(settings.fitness,
                                                 alpha2=float(value)))
    if axis == "components":
        return replace(settings, mask=ScaleMask.from_token(value))
    raise HarnessError(f"unknown ablation axis {axis!r}; choose from {SWEEP_AXES}")


def ablation_sweep(axis: str, values: list[str], items: list[DatasetItem],
                   oracle: Oracle, settings: AttackSettings,
                   out_dir: str | Path | None = None,
                   workers: int = 1) -> list[dict]:
    """One attack_dataset run per axis value, all else (and seeds) fixed."""
    rows = []
    out_path = Path(out_dir) if out_dir is not None else None
    for value in values:
        cell = apply_axis(settings, axis, str(value))
        cell_dir = out_path / f"{axis}_{value}" if out_path is not None else None
        _, summary = attack_dataset(items, oracle, cell, cell_dir, workers=workers)
        rows.append({
            "axis": axis,
            "value": str(value),
            "asr": summary["asr"],
            "post_attack_acc": summary["post_attack_acc"],
            "clean_acc": summary["clean_acc"],
            "mean_success_s_perc": summary["mean_success_s_perc"],
            "mean_queries": summary["mean_queries"],
        })
    return rows


def write_sweep_csv(path: str | Path, rows: list[dict]) -> None:
    if not rows:
        raise HarnessError("sweep produced no rows")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(rows[0].keys()))
        writer.writeheader()
        writer.writerows(rows)


def transfer_eval(run_dir: str | Path, second_oracle: Oracle) -> dict:
    """Re-query a second oracle on a finished run's clean and adversarial images."""
    run_dir = Path(run_dir)
    manifest_path = run_dir / "manifest.json"
    if not manifest_path.is_file():
        raise HarnessError(f"no manifest in {run_dir}")
    manifest = json.loads(manifest_path.read_text())
    entries = manifest.get("dataset", [])
    if not entries:
        raise HarnessError("manifest lists no images")
    clean_correct = 0
    adv_correct = 0
    adv_total = 0
    for entry in entries:
        img = load_image(entry["file"])
        if predict(second_oracle, img).top_class() == entry["label"]:
            clean_correct += 1
        adv_path = run_dir / "adversarial" / f"{entry['id']}.png"
        if adv_path.is_file():
            adv = load_image(adv_path)
            adv_total += 1
            if predict(second_oracle, adv).top_class() == entry["label"]:
                adv_correct += 1
    return {
        "model_id": second_oracle.model_id,
        "images": len(entries),
        "clean_acc": clean_correct / len(entries),
        "adversarial_images": adv_total,
        "adversarial_acc": adv_correct / adv_total if adv_total else 0.0,
    }


def oracle_from_descriptor(desc: dict) -> Oracle:
    """Rebuild an oracle from a manifest descriptor (builtin or remote)."""
    kind = desc.get("kind")
    if kind == "LinearSoftmaxOracle":
        if desc.get("seed") is None:
            raise HarnessError("builtin oracle descriptor lacks a seed")
        from .oracle import build_toy_oracle

        return build_toy_oracle(int(desc["seed"]), int(desc["num_classes"]),
                                scale=float(desc.get("scale", 1.0)),
                                labels=desc.get("labels"))
    if kind == "RemoteOracle":
        return RemoteOracle(endpoint=desc["endpoint"], labels=desc.get("labels"))
    raise HarnessError(f"cannot rebuild oracle of kind {kind!r}")


def replay_run(manifest_path: str | Path,
               out_dir: str | Path | None = None,
               workers: int = 1) -> tuple[list[dict], dict]:
    """Re-execute a run from its manifest (bit-reproducible for builtin oracles)."""
    manifest = json.loads(Path(manifest_path).read_text())
    cfg = manifest["config"]
    settings = AttackSettings(
        ga=GAConfig(**cfg["ga"]),
        fitness=FitnessConfig(**cfg["fitness"]),
        perceptual=PerceptualConfig(**cfg["perceptual"]),
        box=default_box({k: tuple(v) for k, v in cfg["box"].items()}),
        mask=ScaleMask(**cfg["mask"]),
        random_baseline=cfg.get("random_baseline", False),
    )
    items = [
        DatasetItem(image_id=e["id"], path=Path(e["file"]),
                    label=e["label"], label_name=e.get("label_name", ""))
        for e in manifest["dataset"]
    ]
    oracle = oracle_from_descriptor(manifest["oracle"])
    return attack_dataset(items, oracle, settings, out_dir, workers=workers)
