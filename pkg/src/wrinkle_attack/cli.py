"""Command-line harness: attack, render, sweep, and transfer workflows.

Configuration resolves in layers: built-in defaults, then an optional JSON
config file, then command-line flags. The fully resolved configuration is
what the run manifest records.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 oracle failure,
5 internal invariant violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .fitness import FitnessConfig, FitnessError
from .ga import GAConfig, GAConfigError
from .genes import ScaleMask, WrinkleGene, default_box, identity_gene
from .harness import (AttackSettings, HarnessError, SWEEP_AXES, ablation_sweep,
                      attack_dataset, load_dataset, replay_run, transfer_eval,
                      write_sweep_csv)
from .image_io import Image, ImageError, load_image, save_image
from .oracle import (Oracle, OracleError, RemoteOracle, build_toy_oracle,
                     load_weight_oracle)
from .perceptual import PerceptualConfig, PerceptualError
from .warp import render_debug, render_perturbation

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_ORACLE = 4
EXIT_INTERNAL = 5


def _build_oracle(args) -> Oracle:
    spec = args.oracle
    if spec == "builtin":
        if getattr(args, "oracle_weights", None):
            return load_weight_oracle(args.oracle_weights, scale=args.oracle_scale)
        return build_toy_oracle(args.oracle_seed, args.oracle_classes,
                                scale=args.oracle_scale)
    if spec.startswith(("http://", "https://")):
        labels = args.labels.split(",") if getattr(args, "labels", None) else None
        return RemoteOracle(endpoint=spec, labels=labels, timeout=args.oracle_timeout)
    raise HarnessError(f"unknown oracle {spec!r}: use 'builtin' or an http(s) URL")


def _load_config_file(path: str | None) -> dict:
    if not path:
        return {}
    p = Path(path)
    if not p.is_file():
        raise HarnessError(f"config file not found: {p}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise HarnessError(f"config file {p} is not valid JSON: {exc}") from exc


def _resolve_settings(args) -> AttackSettings:
    """defaults < config file < flags."""
    cfg = _load_config_file(getattr(args, "config", None))
    ga = GAConfig(**cfg.get("ga", {}))
    fitness = FitnessConfig(**cfg.get("fitness", {}))
    perceptual = PerceptualConfig(**cfg.get("perceptual", {}))
    box = default_box({k: tuple(v) for k, v in cfg.get("box", {}).items()})
    mask = ScaleMask(**cfg.get("mask", {}))

    if args.seed is not None:
        ga = replace(ga, seed=args.seed)
    if getattr(args, "budget", None) is not None:
        ga = replace(ga, budget=args.budget)
    if getattr(args, "population", None) is not None:
        ga = replace(ga, population=args.population)
    if getattr(args, "ga_workers", None) is not None:
        ga = replace(ga, workers=args.ga_workers)
    if getattr(args, "alpha1", None) is not None:
        perceptual = replace(perceptual, alpha1=args.alpha1)
    if getattr(args, "alpha2", None) is not None:
        fitness = replace(fitness, alpha2=args.alpha2)
    if getattr(args, "perceptual_backend", None):
        perceptual = replace(perceptual, backend="external",
                             endpoint=args.perceptual_backend)
    if getattr(args, "components", None):
        mask = ScaleMask.from_token(args.components)
    return AttackSettings(ga=ga, fitness=fitness, perceptual=perceptual,
                          box=box, mask=mask,
                          random_baseline=getattr(args, "random_baseline", False))


def _print_summary(summary: dict) -> None:
    print(f"images            {summary['images']}")
    print(f"clean accuracy    {summary['clean_acc']:.4f}")
    print(f"attacked          {summary['attacked']}")
    print(f"attack successes  {summary['successes']}")
    print(f"ASR               {summary['asr']:.4f}")
    print(f"post-attack acc   {summary['post_attack_acc']:.4f}")
    print(f"mean queries      {summary['mean_queries']:.1f}")
    print(f"mean s_perc       {summary['mean_success_s_perc']:.4f}")


def cmd_attack(args) -> int:
    if args.from_manifest:
        records, summary = replay_run(args.from_manifest, args.out,
                                      workers=args.workers)
        _print_summary(summary)
        return EXIT_OK
    items = load_dataset(args.dataset)
    oracle = _build_oracle(args)
    settings = _resolve_settings(args)
    records, summary = attack_dataset(items, oracle, settings, args.out,
                                      workers=args.workers)
    _print_summary(summary)
    oracle_failures = [r for r in records if r.get("error_kind") == "oracle"
                       or r.get("status") == "aborted"]
    if len(oracle_failures) == len(records):
        print("oracle error: every image failed at the oracle", file=sys.stderr)
        return EXIT_ORACLE
    return EXIT_OK


def _dump_gray(arr: np.ndarray, path: Path) -> None:
    lo, hi = float(arr.min()), float(arr.max())
    scaled = (arr - lo) / (hi - lo) if hi > lo else np.zeros_like(arr)
    save_image(Image(scaled[:, :, None]), path)


def cmd_render(args) -> int:
    img = load_image(args.image)
    if args.gene:
        gene_path = Path(args.gene)
        if not gene_path.is_file():
            raise HarnessError(f"gene file not found: {gene_path}")
        try:
            payload = json.loads(gene_path.read_text())
            if isinstance(payload, dict) and "best_gene" in payload:
                payload = payload["best_gene"]  # accept whole attack records
            gene = WrinkleGene.from_dict(payload)
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise HarnessError(f"malformed gene file {gene_path}: {exc}") from exc
    else:
        gene = identity_gene()
    rendered = render_perturbation(img, gene)
    save_image(rendered, args.out)
    if args.dump_field:
        out = Path(args.out)
        maps = render_debug(img, gene)
        _dump_gray(maps["field"], out.with_name(out.stem + "_field.png"))
        _dump_gray(maps["displacement"], out.with_name(out.stem + "_displacement.png"))
        _dump_gray(maps["brightness"], out.with_name(out.stem + "_brightness.png"))
    print(f"rendered {args.out}")
    return EXIT_OK


def cmd_sweep(args) -> int:
    if args.axis not in SWEEP_AXES:
        raise HarnessError(f"unknown ablation axis {args.axis!r}; choose from {SWEEP_AXES}")
    items = load_dataset(args.dataset)
    oracle = _build_oracle(args)
    settings = _resolve_settings(args)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise HarnessError("no sweep values given")
    rows = ablation_sweep(args.axis, values, items, oracle, settings,
                          args.out, workers=args.workers)
    csv_path = Path(args.out) / "sweep.csv" if args.out else Path("sweep.csv")
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    write_sweep_csv(csv_path, rows)
    for row in rows:
        print(f"{row['axis']}={row['value']}: ASR={row['asr']:.4f} "
              f"ACC={row['post_attack_acc']:.4f} s_perc={row['mean_success_s_perc']:.4f}")
    print(f"wrote {csv_path}")
    return EXIT_OK


def cmd_transfer(args) -> int:
    oracle = _build_oracle(args)
    report = transfer_eval(args.run, oracle)
    out_path = Path(args.out) if args.out else Path(args.run) / "transfer.json"
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(json.dumps(report, indent=2, sort_keys=True))
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _add_oracle_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--oracle", default="builtin",
                   help="'builtin' or an http(s) oracle server URL")
    p.add_argument("--oracle-seed", type=int, default=7)
    p.add_argument("--oracle-classes", type=int, default=3)
    p.add_argument("--oracle-scale", type=float, default=1.0)
    p.add_argument("--oracle-weights", default=None,
                   help="JSON weight fixture for the builtin oracle")
    p.add_argument("--oracle-timeout", type=float, default=10.0)
    p.add_argument("--labels", default=None,
                   help="comma-separated label prompts for remote oracles")


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--budget", type=int, default=None)
    p.add_argument("--population", type=int, default=None)
    p.add_argument("--alpha1", type=float, default=None)
    p.add_argument("--alpha2", type=float, default=None)
    p.add_argument("--components", default=None,
                   help="scale mask: L, M, S, LM, or full")
    p.add_argument("--perceptual-backend", default=None,
                   help="http(s) URL of a deep-perceptual metric server")
    p.add_argument("--random-baseline", action="store_true",
                   help="single uniform gene per image instead of the search")
    p.add_argument("--workers", type=int, default=1,
                   help="parallel per-image attacks")
    p.add_argument("--ga-workers", type=int, default=None,
                   help="parallel candidate evaluations inside one attack")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wrinkle-attack",
        description="Structural adversarial attack through wrinkle-like warping",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_attack = sub.add_parser("attack", help="attack a labeled image dataset")
    p_attack.add_argument("--dataset", help="dataset index CSV")
    p_attack.add_argument("--out", default=None, help="output run directory")
    p_attack.add_argument("--from-manifest", default=None,
                          help="replay a run from its manifest.json")
    _add_oracle_flags(p_attack)
    _add_run_flags(p_attack)
    p_attack.set_defaults(func=cmd_attack)

    p_render = sub.add_parser("render", help="apply a saved gene to an image")
    p_render.add_argument("--image", required=True)
    p_render.add_argument("--gene", default=None, help="gene JSON (identity if omitted)")
    p_render.add_argument("--out", required=True)
    p_render.add_argument("--dump-field", action="store_true",
                          help="also write field/displacement/brightness PNGs")
    p_render.set_defaults(func=cmd_render)

    p_sweep = sub.add_parser("sweep", help="ablation sweep over one axis")
    p_sweep.add_argument("--axis", required=True, help=f"one of {SWEEP_AXES}")
    p_sweep.add_argument("--values", required=True, help="comma-separated values")
    p_sweep.add_argument("--dataset", required=True)
    p_sweep.add_argument("--out", default=None)
    _add_oracle_flags(p_sweep)
    _add_run_flags(p_sweep)
    p_sweep.set_defaults(func=cmd_sweep)

    p_transfer = sub.add_parser("transfer",
                                help="re-query another oracle on a finished run")
    p_transfer.add_argument("--run", required=True, help="run directory")
    p_transfer.add_argument("--out", default=None)
    _add_oracle_flags(p_transfer)
    p_transfer.set_defaults(func=cmd_transfer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "attack" and not args.dataset and not args.from_manifest:
        parser.error("attack requires --dataset (or --from-manifest)")
    try:
        return args.func(args)
    except OracleError as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except (HarnessError, GAConfigError, FitnessError, PerceptualError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ImageError, OSError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except AssertionError as exc:
        print(f"internal invariant violated: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
