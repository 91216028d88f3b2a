#!/usr/bin/env python3
"""Build local MNIST IDX files from the npm ``mnist`` package.

The official MNIST host is often unreachable from build sandboxes, but the npm
package ``mnist`` (1.1.0) bundles 10,000 real MNIST digits as JSON with
intensities in [0,1] rounded to three decimals.  Intensities are mapped back
to bytes with round(v * 255), which recovers the original byte values.

The digits are interleaved by class and split into a training prefix and a
held-out suffix (default 8000 / 2000).

Outputs (big-endian IDX, unsigned bytes):
  <out>/train-images-idx3-ubyte  <out>/train-labels-idx1-ubyte
  <out>/test-images-idx3-ubyte   <out>/test-labels-idx1-ubyte
"""

import argparse
import glob
import json
import os
import struct
import subprocess
import tarfile
import tempfile


def write_idx(out_dir, prefix, images, labels):
    with open(os.path.join(out_dir, f"{prefix}-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, len(images), 28, 28))
        for img in images:
            f.write(bytes(img))
    with open(os.path.join(out_dir, f"{prefix}-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x00000801, len(labels)))
        f.write(bytes(labels))


def load_npm_digits(tgz):
    per_digit = []
    with tarfile.open(tgz) as tar:
        for digit in range(10):
            member = tar.getmember(f"package/src/digits/{digit}.json")
            raw = json.load(tar.extractfile(member))["data"]
            assert len(raw) % 784 == 0
            per_digit.append([[min(255, max(0, round(v * 255))) for v in raw[k:k + 784]]
                              for k in range(0, len(raw), 784)])
    # Interleave classes so any prefix is close to class-balanced.
    images, labels = [], []
    for rank in range(max(len(d) for d in per_digit)):
        for digit, imgs in enumerate(per_digit):
            if rank < len(imgs):
                images.append(imgs[rank])
                labels.append(digit)
    return images, labels


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--out", default=os.path.join(os.path.dirname(__file__), "..", "data", "mnist"))
    ap.add_argument("--npm-tgz", help="pre-downloaded mnist-1.1.0.tgz (otherwise fetched with npm pack)")
    ap.add_argument("--train", type=int, default=8000, help="number of training images")
    args = ap.parse_args()

    os.makedirs(args.out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tgz = args.npm_tgz
        if not tgz:
            subprocess.run(["npm", "pack", "mnist@1.1.0"], cwd=tmp, check=True, capture_output=True)
            tgz = glob.glob(os.path.join(tmp, "mnist-*.tgz"))[0]
        images, labels = load_npm_digits(tgz)

    n = args.train
    write_idx(args.out, "train", images[:n], labels[:n])
    write_idx(args.out, "test", images[n:], labels[n:])
    print(f"train: {n} images, test: {len(images) - n} images -> {os.path.abspath(args.out)}")


if __name__ == "__main__":
    main()
