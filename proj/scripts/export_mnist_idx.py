#!/usr/bin/env python3
"""Convert the digit JSON files bundled with the npm `mnist` package into
standard IDX files.

The package ships ~10k genuine MNIST samples per-digit as JSON arrays of
pixel intensities in [0,1] (pixel/255 rounded to 3 decimals, which recovers
the original byte exactly). This script shuffles each class with a fixed
seed, takes the first 600 per class as the training split and the next 250
per class as the test split, and writes big-endian IDX files:

    train-images-idx3-ubyte / train-labels-idx1-ubyte   (6000 samples)
    t10k-images-idx3-ubyte  / t10k-labels-idx1-ubyte    (2500 samples)

Usage:
    npm install mnist
    python3 scripts/export_mnist_idx.py node_modules/mnist/src/digits data/mnist
"""

import json
import random
import struct
import sys
from pathlib import Path

TRAIN_PER_CLASS = 600
TEST_PER_CLASS = 250
SEED = 20240901


def write_idx(images, labels, img_path: Path, lab_path: Path) -> None:
    with open(img_path, "wb") as f:
        f.write(struct.pack(">IIII", 2051, len(images), 28, 28))
        for img in images:
            f.write(bytes(round(v * 255) for v in img))
    with open(lab_path, "wb") as f:
        f.write(struct.pack(">II", 2049, len(labels)))
        f.write(bytes(labels))


def main() -> None:
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    src = Path(sys.argv[1])
    dst = Path(sys.argv[2])
    dst.mkdir(parents=True, exist_ok=True)

    rng = random.Random(SEED)
    train, test = [], []
    for digit in range(10):
        data = json.loads((src / f"{digit}.json").read_text())["data"]
        samples = [data[i * 784:(i + 1) * 784] for i in range(len(data) // 784)]
        rng.shuffle(samples)
        if len(samples) < TRAIN_PER_CLASS + TEST_PER_CLASS:
            sys.exit(f"digit {digit}: only {len(samples)} samples available")
        train += [(s, digit) for s in samples[:TRAIN_PER_CLASS]]
        test += [(s, digit) for s in samples[TRAIN_PER_CLASS:TRAIN_PER_CLASS + TEST_PER_CLASS]]

    # interleave classes deterministically
    rng.shuffle(train)
    rng.shuffle(test)

    write_idx([s for s, _ in train], [d for _, d in train],
              dst / "train-images-idx3-ubyte", dst / "train-labels-idx1-ubyte")
    write_idx([s for s, _ in test], [d for _, d in test],
              dst / "t10k-images-idx3-ubyte", dst / "t10k-labels-idx1-ubyte")
    print(f"wrote {len(train)} train and {len(test)} test samples to {dst}")


if __name__ == "__main__":
    main()
