#!/usr/bin/env python3
"""Generate the committed test fixtures.

Writes, under tests/data/:
  fixtures/img00.png .. img19.png + index.csv   20 smooth synthetic images
                                                labeled by the toy oracle's
                                                clean prediction
  golden/input.png, golden/gene.json,
  golden/output.png                             frozen render regression pair
  grid_provable.json                            fixture ids for which a coarse
                                                lattice over the gene box found
                                                a label-flipping gene, plus one
                                                witness gene per id

Rerunning regenerates everything deterministically.
"""

from __future__ import annotations

import csv
import json
import sys
from itertools import product
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from wrinkle_attack.genes import (AppearanceParams, ScaleMask, ScaleParams,
                                  WrinkleGene, default_box)
from wrinkle_attack.image_io import Image, load_image, save_image
from wrinkle_attack.oracle import build_toy_oracle, predict
from wrinkle_attack.warp import render_perturbation

DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"
SIZE = 64
ORACLE_SEED = 7
ORACLE_CLASSES = 3
GRID_SEEDS = (101, 202, 303)


def make_fixture(seed: int) -> Image:
    """Smooth structured image: gradient base plus wide soft blobs and bands."""
    r = np.random.default_rng(seed)
    yy, xx = np.meshgrid(np.linspace(0, 1, SIZE), np.linspace(0, 1, SIZE),
                         indexing="ij")
    base = 0.35 + 0.3 * (r.random() * xx + r.random() * yy)
    img = np.repeat(base[:, :, None], 3, axis=2)
    for _ in range(r.integers(2, 5)):
        cy, cx = r.random(), r.random()
        s = 0.18 + 0.25 * r.random()
        amp = r.uniform(-0.4, 0.4, size=3)
        blob = np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2 * s * s))
        img += blob[:, :, None] * amp[None, None, :]
    if r.random() < 0.5:
        phase, freq = r.random() * np.pi, 0.5 + r.random()
        band = 0.10 * np.sin(2 * np.pi * freq * (xx if r.random() < 0.5 else yy) + phase)
        img += band[:, :, None]
    return Image(np.clip(img, 0.02, 0.98))


def grid_genes() -> list[WrinkleGene]:
    """Coarse lattice over the default gene box used as the existence oracle."""
    box = {c.name: (c.lo, c.hi) for c in default_box().coords}
    genes = []
    mids = {k: (lo + hi) / 2 for k, (lo, hi) in box.items()}
    for a_l, a_m, a_s, gain, base, seed in product(
        box["large.intensity"], box["medium.intensity"], box["small.intensity"],
        box["gain_u"], box["appearance.base"], GRID_SEEDS,
    ):
        genes.append(WrinkleGene(
            large=ScaleParams(a_l, int(box["large.layers"][0]),
                              mids["large.decay"], (mids["large.freq"],)),
            medium=ScaleParams(a_m, int(box["medium.layers"][0]),
                               mids["medium.decay"],
                               (mids["medium.freq1"], mids["medium.freq2"])),
            small=ScaleParams(a_s, int(box["small.layers"][0]),
                              mids["small.decay"], (mids["small.freq"],)),
            gain_u=gain, gain_v=gain,
            appearance=AppearanceParams(base=base, amplitude=mids["appearance.amplitude"]),
            center_seed=seed, mask=ScaleMask(),
        ))
    return genes


def main() -> None:
    fix_dir = DATA_DIR / "fixtures"
    gold_dir = DATA_DIR / "golden"
    fix_dir.mkdir(parents=True, exist_ok=True)
    gold_dir.mkdir(parents=True, exist_ok=True)

    oracle = build_toy_oracle(ORACLE_SEED, ORACLE_CLASSES)
    rows = []
    images = {}
    for i in range(20):
        img = make_fixture(1000 + i)
        name = f"img{i:02d}.png"
        save_image(img, fix_dir / name)
        img = load_image(fix_dir / name)  # labels refer to the quantized file
        images[f"img{i:02d}"] = img
        label = predict(oracle, img).top_class()
        rows.append({"filename": name, "label_index": label,
                     "label_name": oracle.labels[label]})
    with open(fix_dir / "index.csv", "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["filename", "label_index", "label_name"])
        writer.writeheader()
        writer.writerows(rows)

    lattice = grid_genes()
    provable = {}
    for i, row in enumerate(rows):
        image_id = f"img{i:02d}"
        img = images[image_id]
        label = row["label_index"]
        for gene in lattice:
            adv = render_perturbation(img, gene)
            if predict(oracle, adv).top_class() != label:
                provable[image_id] = gene.to_dict()
                break
    (DATA_DIR / "grid_provable.json").write_text(json.dumps({
        "oracle_seed": ORACLE_SEED,
        "oracle_classes": ORACLE_CLASSES,
        "lattice_size": len(lattice),
        "provable": provable,
    }, indent=2, sort_keys=True))

    golden_img = images["img00"]
    golden_gene = WrinkleGene(
        large=ScaleParams(0.6, 3, 2.0, (2.0,)),
        medium=ScaleParams(0.5, 5, 3.5, (3.0, 4.0)),
        small=ScaleParams(0.4, 7, 6.0, (7.0,)),
        gain_u=0.5, gain_v=0.5,
        appearance=AppearanceParams(base=0.6, amplitude=0.3),
        center_seed=4242,
    )
    save_image(golden_img, gold_dir / "input.png")
    (gold_dir / "gene.json").write_text(json.dumps(golden_gene.to_dict(), indent=2))
    save_image(render_perturbation(golden_img, golden_gene), gold_dir / "output.png")

    print(f"fixtures: 20 images, {len(provable)} grid-provable")
    print(f"lattice size: {len(lattice)}")


if __name__ == "__main__":
    main()
