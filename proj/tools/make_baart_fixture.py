#!/usr/bin/env python3
"""Generate the baart test matrix fixture in the T3D1 container.

Discretization of the Fredholm integral equation of the first kind
    int_0^pi exp(s * cos(t)) x(t) dt = b(s),  0 <= s <= pi/2,
by a Galerkin method with piecewise-constant basis functions and midpoint
quadrature: A[i, j] = sqrt(hs * ht) * exp(s_i * cos(t_j)) with cell midpoints
s_i, t_j. The smooth kernel makes the matrix severely ill-conditioned, which
is all downstream consumers rely on (the script prints the condition number).
"""

import argparse
import struct
import sys

import numpy as np


def baart(n: int) -> np.ndarray:
    hs = (np.pi / 2) / n
    ht = np.pi / n
    s = (np.arange(n) + 0.5) * hs
    t = (np.arange(n) + 0.5) * ht
    return np.sqrt(hs * ht) * np.exp(np.outer(s, np.cos(t)))


def save_t3d1(a: np.ndarray, path: str) -> None:
    l, m = a.shape
    with open(path, "wb") as f:
        f.write(b"T3D1")
        f.write(struct.pack("<QQQ", l, m, 1))
        f.write(np.asfortranarray(a).astype("<f8").tobytes(order="F"))


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--out", default="fixtures/baart100.t3d1")
    args = ap.parse_args()

    a = baart(args.n)
    sv = np.linalg.svd(a, compute_uv=False)
    cond = sv[0] / sv[-1]
    print(f"n={args.n} sigma_max={sv[0]:.3e} sigma_min={sv[-1]:.3e} cond={cond:.3e}")
    if cond < 1e12:
        print("warning: expected a condition number above 1e12", file=sys.stderr)
    save_t3d1(a, args.out)
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
