"""Measure the acceptance-ordering margins on the standard fixture.

Dev-only helper, not part of the package: prints per-subset base-model R2
and the fusion comparison across three seeds so generator constants and
experiment defaults can be tuned with real margins in view.
"""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

from creditfuse import experiments
from creditfuse.data import SUBSET_ORDER
from creditfuse.metrics import build_report_table

SEEDS = (42, 43, 44)


def main(which: str = "all") -> None:
    base_rows = {}
    fusion_rows = {}
    for seed in SEEDS:
        cfg = experiments.ExperimentConfig(seed=seed)
        if which in ("all", "bases"):
            t0 = time.perf_counter()
            base_rows[seed] = experiments.run_compare_bases(cfg)
            print(f"[seed {seed}] compare-bases in {time.perf_counter()-t0:.1f}s")
        if which in ("all", "fusion"):
            t0 = time.perf_counter()
            fusion_rows[seed] = experiments.run_compare_fusion(cfg)
            print(f"[seed {seed}] compare-fusion in {time.perf_counter()-t0:.1f}s")

    if base_rows:
        print("\n=== per-subset R2 (median of seeds) ===")
        r2 = {}
        for subset in SUBSET_ORDER:
            for method in experiments.METHOD_LABELS:
                vals = []
                for seed in SEEDS:
                    for s, m, rep in base_rows[seed]:
                        if s == subset and m == method:
                            vals.append(rep.r2)
                r2[(subset, method)] = float(np.median(vals))
        for subset in SUBSET_ORDER:
            line = f"{subset:22s} " + "  ".join(
                f"{m}={r2[(subset, m)]:.4f}" for m in experiments.METHOD_LABELS
            )
            print(line)
        print("\ncriterion 6 checks:")
        for subset in SUBSET_ORDER:
            g, rf, dt, lr = (r2[(subset, m)] for m in ("GBDT", "RF", "DT", "LR"))
            ok = g >= rf >= dt and g > lr
            print(f"  {subset:22s} GBDT>=RF>=DT and GBDT>LR: {ok}")
        gap = r2[("app_behavior", "GBDT")] - r2[("app_behavior", "LR")]
        print(f"  app_behavior GBDT-LR gap: {gap:.4f} (need >= 0.15)")
        cons = r2[("consumer_capacity", "GBDT")]
        loc = r2[("location_trajectory", "GBDT")]
        print(f"  consumer {cons:.4f} > location {loc:.4f}: {cons > loc}")

    if fusion_rows:
        print("\n=== fusion (median of seeds) ===")
        med = {}
        for i, (label, method) in enumerate(
            [("best", "GBDT"), ("full", "GBDT"), ("full", "GBDT+Voting"),
             ("full", "GBDT+Blending"), ("full", "GBDT+Stacking")]
        ):
            maes = [fusion_rows[s][i][2].mae for s in SEEDS]
            r2s = [fusion_rows[s][i][2].r2 for s in SEEDS]
            med[method if label == "full" else "best"] = (
                float(np.median(maes)), float(np.median(r2s))
            )
        for name, (mae, r2v) in med.items():
            print(f"  {name:16s} MAE={mae:.4f}  R2={r2v:.4f}")
        mae_s, r2_s = med["GBDT+Stacking"]
        mae_b, _ = med["GBDT+Blending"]
        mae_v, _ = med["GBDT+Voting"]
        mae_f, r2_f = med["GBDT"]
        _, r2_best = med["best"]
        print("\ncriterion 7 checks:")
        print(f"  stacking<=blending: {mae_s <= mae_b}  ({mae_s:.3f} vs {mae_b:.3f})")
        print(f"  blending<=voting:   {mae_b <= mae_v}  ({mae_b:.3f} vs {mae_v:.3f})")
        print(f"  voting<=1.02*full:  {mae_v <= 1.02 * mae_f}  ({mae_v:.3f} vs {1.02*mae_f:.3f})")
        print(f"  stackR2-fullR2>=0.01: {r2_s - r2_f >= 0.01}  (gap {r2_s - r2_f:.4f})")
        print(f"  full R2 > best single: {r2_f > r2_best}  ({r2_f:.4f} vs {r2_best:.4f})")
        print(f"  one fusion run wall time above")

        print("\nfull table (seed 42):")
        print(build_report_table(fusion_rows[42]))


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "all")
