"""Convert the 5000-sample MNIST excerpt shipped in the `mlxtend` wheel to IDX files.

Usage: pip download mlxtend --no-deps -d /tmp/mlx
       python3 scripts/mnist5k_to_idx.py /tmp/mlx/mlxtend-*.whl data/mnist5k

The excerpt is sorted by class (500 per digit). Samples are interleaved
round-robin over classes so every prefix is class-balanced, then split
4000 train / 1000 test.
"""
import gzip
import io
import struct
import sys
import zipfile

import numpy as np


def write_idx_images(path, images):
    with open(path, "wb") as f:
        f.write(struct.pack(">IIII", 0x00000803, images.shape[0], 28, 28))
        f.write(images.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    with open(path, "wb") as f:
        f.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        f.write(labels.astype(np.uint8).tobytes())


def main(wheel, out_dir):
    with zipfile.ZipFile(wheel) as z:
        raw = z.read("mlxtend/data/data/mnist_5k.csv.gz")
    table = np.genfromtxt(gzip.open(io.BytesIO(raw)), delimiter=",")
    x, y = table[:, :-1], table[:, -1].astype(int)
    order = [c * 500 + j for j in range(500) for c in range(10)]
    x, y = x[order], y[order]
    write_idx_images(f"{out_dir}/train-images-idx3-ubyte", x[:4000])
    write_idx_labels(f"{out_dir}/train-labels-idx1-ubyte", y[:4000])
    write_idx_images(f"{out_dir}/t10k-images-idx3-ubyte", x[4000:])
    write_idx_labels(f"{out_dir}/t10k-labels-idx1-ubyte", y[4000:])


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
