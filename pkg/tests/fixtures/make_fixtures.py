"""Regenerate the binary test fixtures without importing the package.

Run from the repository root: ``python3 tests/fixtures/make_fixtures.py``.
"""

import os

HERE = os.path.dirname(os.path.abspath(__file__))

W, H = 128, 32
TREE, SKY = 0, 3


def zone2_half_tree() -> bytes:
    rows = []
    for _ in range(H):
        rows.append(bytes([TREE] * (W // 2) + [SKY] * (W - W // 2)))
    return b"SEGMASK1\n%d %d\nclasses 5\n" % (W, H) + b"".join(rows)


if __name__ == "__main__":
    with open(os.path.join(HERE, "zone2_half_tree.segmask"), "wb") as fh:
        fh.write(zone2_half_tree())
