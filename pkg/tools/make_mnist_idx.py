#!/usr/bin/env python3
"""Build the repo's bundled MNIST subset in canonical IDX format.

Source: the ``mnist`` npm package (https://www.npmjs.com/package/mnist,
MIT license), which ships roughly 10k real MNIST digits as per-class JSON
arrays of 784 floats in [0, 1].  This script converts them back to 28x28
uint8 rasters and writes the standard 4-file gzipped IDX layout, holding
out the last `--test-per-class` examples of every class as the test split.

Usage:
    npm install mnist
    python tools/make_mnist_idx.py --src node_modules/mnist/src/digits \
        --dest data/mnist
"""

import argparse
import gzip
import json
import os
import struct

import numpy as np


def _gzip_out(path):
    # mtime pinned to zero so rebuilding yields byte-identical files
    return gzip.GzipFile(path, "wb", compresslevel=9, mtime=0)


def write_idx_images(path, images):
    n, rows, cols = images.shape
    with _gzip_out(path) as f:
        f.write(struct.pack(">IIII", 0x00000803, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path, labels):
    with _gzip_out(path) as f:
        f.write(struct.pack(">II", 0x00000801, labels.size))
        f.write(labels.astype(np.uint8).tobytes())


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--src", required=True, help="directory with 0.json .. 9.json")
    ap.add_argument("--dest", default="data/mnist")
    ap.add_argument("--test-per-class", type=int, default=150)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    train_imgs, train_labels, test_imgs, test_labels = [], [], [], []
    for digit in range(10):
        with open(os.path.join(args.src, f"{digit}.json")) as f:
            flat = np.asarray(json.load(f)["data"], dtype=np.float64)
        imgs = np.rint(flat.reshape(-1, 28, 28) * 255.0).astype(np.uint8)
        if imgs.shape[0] <= args.test_per_class:
            raise SystemExit(f"digit {digit}: only {imgs.shape[0]} examples")
        split = imgs.shape[0] - args.test_per_class
        train_imgs.append(imgs[:split])
        test_imgs.append(imgs[split:])
        train_labels.append(np.full(split, digit, dtype=np.uint8))
        test_labels.append(np.full(args.test_per_class, digit, dtype=np.uint8))
        print(f"digit {digit}: {split} train, {args.test_per_class} test")

    rng = np.random.default_rng(args.seed)
    os.makedirs(args.dest, exist_ok=True)
    for prefix, imgs, labels in (("train", train_imgs, train_labels),
                                 ("t10k", test_imgs, test_labels)):
        imgs = np.concatenate(imgs)
        labels = np.concatenate(labels)
        order = rng.permutation(imgs.shape[0])
        imgs, labels = imgs[order], labels[order]
        write_idx_images(os.path.join(args.dest, f"{prefix}-images-idx3-ubyte.gz"), imgs)
        write_idx_labels(os.path.join(args.dest, f"{prefix}-labels-idx1-ubyte.gz"), labels)
        print(f"{prefix}: {imgs.shape[0]} examples -> {args.dest}")


if __name__ == "__main__":
    main()
