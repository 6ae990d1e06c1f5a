#!/usr/bin/env python3
"""Quick-look plots for waveform CSVs written by cvsr-sim.

Convenience only; the CSVs are the supported output contract.

    python scripts/plot_waveforms.py out/nominal-dc75mA.csv
    python scripts/plot_waveforms.py out/fault-dc5A.csv --save fig.png
"""

import argparse

import matplotlib
import numpy as np


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("csv", help="waveform CSV from cvsr-sim")
    parser.add_argument("--save", help="write a PNG instead of showing")
    args = parser.parse_args()

    if args.save:
        matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with open(args.csv) as fh:
        names = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    cols = {name: data[:, k] for k, name in enumerate(names)}
    t = cols["t_s"] * 1e3  # ms

    fig, axes = plt.subplots(4, 1, sharex=True, figsize=(10, 9))
    axes[0].plot(t, cols["v_source_V"], label="source")
    axes[0].plot(t, cols["v_ac_winding_V"], label="ac winding")
    axes[0].set_ylabel("V")
    axes[0].legend(loc="upper right")

    axes[1].plot(t, cols["i_ac_A"])
    axes[1].set_ylabel("ac current [A]")

    for name, label in (("b_left_T", "left"), ("b_middle_T", "middle"),
                        ("b_right_T", "right")):
        axes[2].plot(t, cols[name], label=label)
    axes[2].set_ylabel("B [T]")
    axes[2].legend(loc="upper right")

    axes[3].plot(t, cols["e_dc_V"])
    axes[3].set_ylabel("dc winding V")
    axes[3].set_xlabel("t [ms]")

    fig.suptitle(args.csv)
    fig.tight_layout()
    if args.save:
        fig.savefig(args.save, dpi=140)
        print(f"wrote {args.save}")
    else:
        plt.show()


if __name__ == "__main__":
    main()
