"""Plot the controller trace written by `cwds reconstruct-cwds --trace-out`.

Produces a 2x2 panel: sparsity ratio against its target, the regularization
weight, the integral gain, and the relative step size (log scale).

Usage:
    python scripts/plot_sparsity_trace.py TRACE.csv [-o OUT.png]
"""

import argparse
import pathlib
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from cwds.io import read_trace_csv


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("trace", help="trace CSV from a reconstruction run")
    parser.add_argument("-o", "--out", help="output image (default: TRACE.png)")
    args = parser.parse_args()

    trace = read_trace_csv(args.trace)
    if not trace.records:
        raise SystemExit(f"{args.trace}: trace holds no iterations")
    i = [r.i for r in trace.records]
    target = float(trace.metadata["C_pr"]) if "C_pr" in trace.metadata else None

    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    axes[0, 0].plot(i, [r.c for r in trace.records], lw=1.0)
    if target is not None:
        axes[0, 0].axhline(target, color="k", ls="--", lw=0.8, label=f"target {target:g}")
        axes[0, 0].legend(frameon=False)
    axes[0, 0].set_ylabel("sparsity ratio C")

    axes[0, 1].plot(i, [r.mu for r in trace.records], lw=1.0, color="tab:orange")
    axes[0, 1].set_ylabel("weight mu")

    axes[1, 0].plot(i, [r.beta for r in trace.records], lw=1.0, color="tab:green")
    axes[1, 0].set_ylabel("gain beta")
    axes[1, 0].set_xlabel("iteration")

    steps = [r.d for r in trace.records]
    axes[1, 1].semilogy(i, steps, lw=1.0, color="tab:red")
    axes[1, 1].set_ylabel("relative step d")
    axes[1, 1].set_xlabel("iteration")

    reason = trace.stop_reason or "unknown"
    fig.suptitle(f"{pathlib.Path(args.trace).name} — {len(i)} iterations ({reason})")
    fig.tight_layout()
    out = args.out or str(pathlib.Path(args.trace).with_suffix(".png"))
    fig.savefig(out, dpi=130)
    print(out)


if __name__ == "__main__":
    main()
