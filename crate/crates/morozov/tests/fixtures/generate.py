"""Regenerates the Matrix Market fixtures in this directory.

    python3 generate.py

ash219_like.mtx   219 x 85, two nonzeros (+1, -1) per row, every column hit.
                  Same shape and sparsity pattern class as ash219; A @ ones = 0.
blur120_sym.mtx   120 x 120 banded Gaussian blur, symmetric storage.
"""

import numpy as np

rng = np.random.default_rng(20240219)


def ash_like(m=219, n=85):
    cols = np.concatenate([np.arange(n), rng.integers(0, n, size=2 * m - n)])
    rng.shuffle(cols)
    entries = []
    for i in range(m):
        a, b = cols[2 * i], cols[2 * i + 1]
        while b == a:
            b = rng.integers(0, n)
        entries.append((i, a, 1.0))
        entries.append((i, b, -1.0))
    with open("ash219_like.mtx", "w") as f:
        f.write("%%MatrixMarket matrix coordinate real general\n")
        f.write("% synthetic stand-in with the shape of ash219\n")
        f.write(f"{m} {n} {len(entries)}\n")
        for i, j, v in entries:
            f.write(f"{i + 1} {j + 1} {v:g}\n")


def blur_sym(n=120, sigma=2.0, band=6):
    lower = []
    for j in range(n):
        for i in range(j, min(n, j + band + 1)):
            d = i - j
            lower.append((i, j, np.exp(-d * d / (2 * sigma * sigma)) / (np.sqrt(2 * np.pi) * sigma)))
    with open("blur120_sym.mtx", "w") as f:
        f.write("%%MatrixMarket matrix coordinate real symmetric\n")
        f.write("% banded Gaussian blur, sigma = 2, half-bandwidth 6\n")
        f.write(f"{n} {n} {len(lower)}\n")
        for i, j, v in lower:
            f.write(f"{i + 1} {j + 1} {v:.17g}\n")


ash_like()
blur_sym()
