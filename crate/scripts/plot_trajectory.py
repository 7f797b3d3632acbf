#!/usr/bin/env python3
"""Top view of a `swarm-tuner run --out DIR` trajectory.

    python3 scripts/plot_trajectory.py out/trajectory.tsv \
        --scenario scenarios/hitsz_like.toml -o top.png

Draws building footprints and UGV routes from the scenario, the UAV paths
from the TSV, and marks the slots where a UAV serves nobody.
"""

import argparse
import csv
from collections import defaultdict

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Rectangle  # noqa: E402


def read_paths(path):
    paths = defaultdict(list)
    with open(path, newline="") as f:
        for row in csv.DictReader(f, delimiter="\t"):
            paths[int(row["m"])].append(
                (int(row["t"]), float(row["x"]), float(row["y"]), int(row["n"]))
            )
    return {m: sorted(rows) for m, rows in paths.items()}


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("trajectory", help="trajectory.tsv written by `swarm-tuner run`")
    ap.add_argument("--scenario", default="scenarios/hitsz_like.toml")
    ap.add_argument("-o", "--out", default="trajectory.png")
    args = ap.parse_args()

    with open(args.scenario, "rb") as f:
        sc = tomllib.load(f)
    g = sc["grid"]
    x0, y0, d = g["x_min_m"], g["y_min_m"], g["delta_m"]
    x1, y1 = x0 + d * g["dims"][0], y0 + d * g["dims"][1]

    fig, ax = plt.subplots(figsize=(5, 5 * (y1 - y0) / (x1 - x0)))
    for b in sc.get("buildings", []):
        (bx0, bx1), (by0, by1) = b["x_m"], b["y_m"]
        ax.add_patch(Rectangle((bx0, by0), bx1 - bx0, by1 - by0, color="0.85"))
        ax.text((bx0 + bx1) / 2, (by0 + by1) / 2, f"{b['height_m']:g} m",
                ha="center", va="center", fontsize=7, color="0.4")
    for u in sc.get("ugvs", []):
        xs, ys = zip(*[(w[0], w[1]) for w in u["waypoints"]])
        ax.plot(xs, ys, color="0.6", lw=1, ls="--")

    for m, rows in read_paths(args.trajectory).items():
        xs = [r[1] for r in rows]
        ys = [r[2] for r in rows]
        (line,) = ax.plot(xs, ys, marker=".", lw=1.5, label=f"UAV {m}")
        idle = [(r[1], r[2]) for r in rows if r[3] == 0]
        if idle:
            ax.scatter(*zip(*idle), marker="x", color=line.get_color(), s=30)
        ax.annotate("start", (xs[0], ys[0]), fontsize=7)

    ax.set_xlim(x0, x1)
    ax.set_ylim(y0, y1)
    ax.set_aspect("equal")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.legend(fontsize=7, loc="upper right")
    fig.tight_layout()
    fig.savefig(args.out, dpi=150)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
