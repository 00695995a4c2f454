#!/usr/bin/env python3
"""Example: plot a `tbounds sweep` table as bounds vs gamma.

Usage: plot_sweep.py results/sweep.csv [out.png]

This script is documentation for the sweep.csv schema, not a supported
component of the library.
"""

import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def main() -> None:
    if len(sys.argv) < 2:
        sys.exit(__doc__)
    table = pd.read_csv(sys.argv[1])
    out = sys.argv[2] if len(sys.argv) > 2 else "sweep.png"

    fig, ax = plt.subplots(figsize=(6, 4))
    colors = {"balanced": "tab:red", "unbalanced": "tab:purple"}
    for estimator, group in table.groupby("estimator"):
        color = colors.get(estimator, None)
        for side, rows in group.groupby("side"):
            rows = rows.sort_values("gamma")
            ax.plot(rows.gamma, rows.value, color=color, marker="o",
                    label=estimator if side == "upper" else None)
            if "ci_lo" in rows:
                ax.plot(rows.gamma, rows.ci_lo, color=color, ls="--", lw=0.8)
                ax.plot(rows.gamma, rows.ci_hi, color=color, ls="--", lw=0.8)
    ax.set_xlabel(r"assumed shift bound $\gamma = \log \Gamma$")
    ax.set_ylabel("treatment effect bounds")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out, dpi=150)
    print(f"wrote {out}")


if __name__ == "__main__":
    main()
