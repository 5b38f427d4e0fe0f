#!/usr/bin/env python3
"""Build the desk-scale MNIST subset (2,000 train / 1,000 test) as IDX files.

Source: the 5,000-digit MNIST sample bundled in the mlxtend wheel
(mlxtend/data/data/mnist_5k.csv.gz, 500 digits per class, label in the
last column). Fetch it with `pip download mlxtend --no-deps`.

Per class, instances 0..199 go to train and 200..299 to test; each split is
then shuffled with a fixed seed so batches mix classes.
"""
import gzip
import hashlib
import io
import struct
import sys
import zipfile

import numpy as np


def write_idx(prefix, images, labels):
    n = images.shape[0]
    with open(prefix + "-images-idx3-ubyte", "wb") as f:
        f.write(struct.pack(">IIII", 0x803, n, 28, 28))
        f.write(images.astype(np.uint8).tobytes())
    with open(prefix + "-labels-idx1-ubyte", "wb") as f:
        f.write(struct.pack(">II", 0x801, n))
        f.write(labels.astype(np.uint8).tobytes())


def main(wheel, out_dir):
    z = zipfile.ZipFile(wheel)
    raw = gzip.decompress(z.read("mlxtend/data/data/mnist_5k.csv.gz"))
    data = np.loadtxt(io.BytesIO(raw), delimiter=",")
    x, y = data[:, :-1].astype(np.uint8), data[:, -1].astype(np.uint8)
    train_idx, test_idx = [], []
    for c in range(10):
        members = np.flatnonzero(y == c)
        train_idx.extend(members[:200])
        test_idx.extend(members[200:300])
    rng = np.random.RandomState(2021)
    train_idx = rng.permutation(np.array(train_idx))
    test_idx = rng.permutation(np.array(test_idx))
    write_idx(out_dir + "/train", x[train_idx], y[train_idx])
    write_idx(out_dir + "/t10k", x[test_idx], y[test_idx])

    # reference values for the loader check: independent numpy read-back
    with open(out_dir + "/t10k-images-idx3-ubyte", "rb") as f:
        buf = f.read()
    magic, n, rows, cols = struct.unpack(">IIII", buf[:16])
    pix = np.frombuffer(buf, dtype=np.uint8, offset=16).reshape(n, rows, cols)
    first = pix[:100]
    print("first100 sha256", hashlib.sha256(first.tobytes()).hexdigest())
    print("first100 sum", int(first.astype(np.int64).sum()))
    print("image0 sum", int(first[0].astype(np.int64).sum()))
    print("image99 [14,:] ", list(first[99, 14]))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
