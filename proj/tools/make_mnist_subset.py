#!/usr/bin/env python3
"""Build the bundled MNIST {3,8,9} IDX files from the npm `mnist` package.

The npm package (cazala/mnist, MIT) ships ~10k MNIST digits as JSON arrays of
pixel/255 values rounded to three decimals. Pixels are recovered exactly by
rounding v*255. Samples are written class-interleaved in package order.

usage: npm pack mnist && tar xzf mnist-*.tgz
       python3 tools/make_mnist_subset.py package/src/digits data
"""
import json
import os
import struct
import sys


def main(src, dst, classes=(3, 8, 9)):
    per_class = {}
    for c in classes:
        with open(os.path.join(src, f"{c}.json")) as f:
            vals = json.load(f)["data"]
        n = len(vals) // 784
        per_class[c] = [bytes(round(v * 255) for v in vals[k * 784:(k + 1) * 784])
                        for k in range(n)]
    images, labels = [], []
    longest = max(len(v) for v in per_class.values())
    for k in range(longest):
        for c in classes:
            if k < len(per_class[c]):
                images.append(per_class[c][k])
                labels.append(c)
    os.makedirs(dst, exist_ok=True)
    with open(os.path.join(dst, "mnist389-images-idx3-ubyte"), "wb") as f:
        f.write(struct.pack(">IIII", 0x803, len(images), 28, 28))
        f.writelines(images)
    with open(os.path.join(dst, "mnist389-labels-idx1-ubyte"), "wb") as f:
        f.write(struct.pack(">II", 0x801, len(labels)))
        f.write(bytes(labels))
    print({c: len(v) for c, v in per_class.items()}, "total", len(images))


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
