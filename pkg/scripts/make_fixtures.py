"""Regenerate the bundled CSV fixtures in src/gateprune/data/."""

from pathlib import Path

import numpy as np

OUT = Path(__file__).resolve().parents[1] / "src" / "gateprune" / "data"


def separable(m=200, seed=7):
    # Blob width matters more than the gap: the entangling phases move by
    # about 2*pi^2*(1 - x) radians per unit of x, so wide blobs give a rough
    # kernel. sd 0.08 with 120 rows dropped below 0.9 test accuracy on 3-12%
    # of split/solver seeds; sd 0.05 with 200 rows stayed above it on all
    # 100 combinations tried for three generator seeds.
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, m)
    centers = np.where(y[:, None] == 1, 0.75, 0.25)
    X = np.clip(centers + rng.normal(0, 0.05, (m, 4)), 0, 1)
    return X, np.where(y == 1, "pos", "neg")


def xor(m=100, seed=11):
    rng = np.random.default_rng(seed)
    X = rng.random((m, 3))
    y = (X[:, 0] > 0.5) ^ (X[:, 1] > 0.5)
    return X, y.astype(int)


def corral(m=160, seed=3):
    # (A0 and A1) or (B0 and B1), one irrelevant bit, one bit agreeing with
    # the class 75% of the time, one more irrelevant bit
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, (m, 5))
    a0, a1, b0, b1, irr = bits.T
    y = (a0 & a1) | (b0 & b1)
    corr = np.where(rng.random(m) < 0.75, y, 1 - y)
    irr2 = rng.integers(0, 2, m)
    X = np.column_stack([a0, a1, b0, b1, irr, corr, irr2])
    return X, y


def write(name, X, y, header):
    path = OUT / f"{name}.csv"
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(header + ["label"]) + "\n")
        for row, lab in zip(X, y):
            cells = [f"{v:.6f}" if isinstance(v, float) else str(v) for v in row.tolist()]
            fh.write(",".join(cells + [str(lab)]) + "\n")
    print(f"wrote {path} ({len(X)} rows)")


if __name__ == "__main__":
    OUT.mkdir(parents=True, exist_ok=True)
    X, y = separable()
    write("separable", X, y, [f"f{i}" for i in range(4)])
    X, y = xor()
    write("xor", X, y, ["u", "v", "noise"])
    X, y = corral()
    write("corral", X, y, ["A0", "A1", "B0", "B1", "Irrelevant", "Correlated", "Irrelevant2"])
