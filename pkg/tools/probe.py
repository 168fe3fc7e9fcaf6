"""One-seed fast probe of the fusion criteria plus the oracle-combo bound."""

import sys
import time

import numpy as np

sys.path.insert(0, "src")

import creditfuse as cf
from creditfuse import experiments, fusion, learners


def probe(tag, booster, seed=42):
    t0 = time.perf_counter()
    cfg = experiments.ExperimentConfig(seed=seed, gbdt=booster)
    train, test = experiments.prepare_data(cfg)
    y = test.require_target()
    spec = cf.LearnerSpec("gbdt", booster, seed)
    models = fusion.fit_base_models(train, spec)
    P = fusion.base_prediction_matrix(models, test)
    full = learners.fit_learner(train, spec)
    pf = learners.predict(full, test)
    A = np.column_stack([P, np.ones(len(y))])
    w, *_ = np.linalg.lstsq(A, y, rcond=None)
    mse = lambda p: float(np.mean((p - y) ** 2))
    mae = lambda p: float(np.mean(np.abs(p - y)))

    vote = fusion.fit_voting(train, cf.FusionConfig("voting", seed=seed), spec)
    blend = fusion.fit_blending(train, cf.FusionConfig("blending", seed=seed), spec)
    stack = fusion.fit_stacking(train, cf.FusionConfig("stacking", seed=seed), spec)
    pv, pb, ps = (fusion.predict_fusion(m, test) for m in (vote, blend, stack))
    var_y = float(y.var())
    r2 = lambda p: 1 - mse(p) / var_y
    print(
        f"{tag:24s} seed{seed} full {mse(pf):6.1f} oracle {mse(A@w):6.1f} "
        f"avg {mse(P.mean(1)):6.1f} | vote {mse(pv):6.1f} blend {mse(pb):6.1f} "
        f"stack {mse(ps):6.1f} | MAE v/f {mae(pv)/mae(pf):5.3f} "
        f"R2 s-f {r2(ps)-r2(pf):+.4f} | bases {[round(mse(P[:,j])) for j in range(4)]} "
        f"[{time.perf_counter()-t0:.0f}s]"
    )


if __name__ == "__main__":
    B = cf.BoosterParams
    seeds = [42] if len(sys.argv) < 2 else [int(s) for s in sys.argv[1].split(",")]
    for seed in seeds:
        probe(
            "M 31/10 lr.1 120 bag.75 ff.8",
            B(num_iterations=120, num_leaves=31, min_data_in_leaf=10,
              bagging_fraction=0.75, bagging_freq=1, feature_fraction=0.8),
            seed,
        )
