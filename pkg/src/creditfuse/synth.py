"""Synthetic operator-record generator with a planted scoring function.

Rows share a single latent credit factor ``u``: most columns are noisy views
of it, so the four feature subsets carry correlated signal of different
strength and shape. Consumer and trust-related columns see ``u`` almost
cleanly, app-usage counts see it through non-monotone (bell-shaped) response
curves that defeat linear models, and location flags see it only faintly.
The target mixes linear, interaction, and threshold terms of the columns,
plus Gaussian noise, then clamps to a credit-score range.

All distribution constants below are fixture definitions. Draws happen in a
fixed documented order (factor, then columns in schema order, then noise), so
equal seeds give bit-identical datasets.
"""

from __future__ import annotations

import numpy as np

from .data import Dataset, Schema, canonical_schema

_GEN_STREAM = 0x5E11

NOISE_SD = 15.0
SCORE_MIN = 350.0
SCORE_MAX = 720.0


def _flag(u, z, sign, thr, noise):
    """Threshold flag: 1 where sign*u + noise*z exceeds thr."""
    return (sign * u + noise * z > thr).astype(np.float64)


def _bell(u, peak, width, height):
    """Non-monotone response curve peaking at ``peak``."""
    return height * np.exp(-width * (u - peak) ** 2)


def _columns(u: np.ndarray, rng: np.random.Generator) -> dict[str, np.ndarray]:
    n = len(u)
    z = lambda: rng.standard_normal(n)
    cny = lambda base, load, sd, hi: np.round(
        np.clip(base + load * u + sd * z(), 0.0, hi), 2
    )
    rcount = lambda mean_curve, sd, hi: np.round(
        np.clip(mean_curve + sd * z(), 0.0, hi)
    )

    cols: dict[str, np.ndarray] = {}
    # consumer capacity: monotone spend views; top-up recency is the one
    # hump-shaped column and feeds the score through its own term
    cols["top_up_month_diff"] = rcount(_bell(u, -0.5, 0.55, 24.0), 1.0, 40.0)
    cols["top_up_amount"] = cny(30.0, 16.0, 14.0, 200.0)
    cols["recent_6month_avg_use"] = cny(100.0, 14.0, 20.0, 400.0)
    cols["total_account_fee"] = cny(80.0, 12.0, 16.0, 300.0)
    cols["curr_month_balance"] = cny(20.0, 14.0, 20.0, 300.0)
    cols["cost_sensitivity"] = np.round(np.clip(3.0 - 0.7 * u + 0.9 * z(), 1.0, 5.0))
    cols["curr_overdue_flag"] = _flag(u, z(), -1.0, 2.2, 0.12)
    # location trajectory: coherent but clearly the weakest views
    cols["recent_3month_shopping_count"] = rcount(_bell(u, 0.2, 0.55, 12.0), 1.2, 40.0)
    cols["freq_shopping_flag"] = _flag(u, z(), 1.0, -0.8, 1.1)
    cols["wanda_flag"] = _flag(u, z(), 1.0, 0.7, 1.2)
    cols["sam_flag"] = _flag(u, z(), 1.0, 1.7, 1.3)
    cols["movie_flag"] = _flag(u, z(), 1.0, -0.3, 1.0)
    cols["tour_flag"] = _flag(u, z(), 1.0, 1.2, 1.2)
    cols["sport_flag"] = _flag(u, z(), 1.0, 0.2, 1.1)
    # app behavior: usage counts sharing one saturating response shape
    cols["online_shopping_count"] = rng.poisson(4.0 * np.exp(0.45 * u)).astype(np.float64)
    cols["express_count"] = rng.poisson(3.0 * np.exp(0.45 * u)).astype(np.float64)
    cols["finance_app_count"] = rcount(4.0 * np.exp(0.45 * u), 0.4, 40.0)
    cols["video_app_count"] = rng.poisson(6.0 * np.exp(0.45 * u)).astype(np.float64)
    cols["flight_count"] = rng.poisson(0.3 * np.exp(0.45 * u)).astype(np.float64)
    cols["train_count"] = rng.poisson(1.5 * np.exp(0.45 * u)).astype(np.float64)
    cols["tour_app_count"] = rng.poisson(2.0 * np.exp(0.45 * u)).astype(np.float64)
    # other: tenure is a linear view, contact breadth a hump-shaped one
    cols["age"] = rng.integers(18, 81, size=n).astype(np.float64)
    cols["net_age_till_now"] = np.round(np.clip(40.0 + 12.0 * u + 3.0 * z(), 1.0, 140.0))
    cols["connect_num"] = rcount(_bell(u, 0.7, 0.5, 100.0) + 2.0, 2.2, 140.0)
    cols["true_name_flag"] = _flag(u, z(), 1.0, -1.5, 0.8)
    cols["uni_student_flag"] = _flag(u, z(), -1.0, 1.8, 1.5)
    cols["blk_list_flag"] = _flag(u, z(), -1.0, 2.7, 0.15)
    cols["4g_unhealth_flag"] = _flag(u, z(), -1.0, 1.3, 0.7)
    return cols


def planted_signal(d: Dataset) -> np.ndarray:
    """Deterministic part of the score, recomputed from a dataset's columns."""
    c = d.column
    fin = c("finance_app_count")
    return (
        620.0
        + 0.8 * c("net_age_till_now")
        - 1.5 * c("top_up_month_diff")
        + 0.05 * c("recent_6month_avg_use")
        - 60.0 * c("blk_list_flag")
        - 45.0 * c("curr_overdue_flag")
        + 0.02 * c("total_account_fee") * c("true_name_flag")
        + 12.0 * (fin > np.median(fin)).astype(np.float64)
        + 4.0 * np.sqrt(c("connect_num"))
        + 2.0 * (c("movie_flag") + c("tour_flag") + c("sport_flag"))
    )


def generate_synthetic(n_rows: int, seed: int, schema: Schema | None = None) -> Dataset:
    """Generate ``n_rows`` operator records on the canonical schema."""
    if n_rows < 1:
        raise ValueError("n_rows must be >= 1")
    schema = schema or canonical_schema()
    rng = np.random.default_rng(np.random.SeedSequence([seed, _GEN_STREAM]))
    u = rng.standard_normal(n_rows)
    cols = _columns(u, rng)
    values = np.empty((n_rows, len(schema.columns)), dtype=np.float64, order="F")
    for j, spec in enumerate(schema.columns):
        values[:, j] = cols[spec.name]
    d = Dataset(schema, values, np.zeros(n_rows))
    noise = rng.normal(0.0, NOISE_SD, size=n_rows)
    score = np.clip(planted_signal(d) + noise, SCORE_MIN, SCORE_MAX)
    return Dataset(schema, values, score)
