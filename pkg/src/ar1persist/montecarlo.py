"""Forward Monte Carlo for the killed chain.

Deliberately independent of the orbit and spectral machinery: paths are
simulated forward with X_{n+1} = a*X_n + xi and killed on the first step
below zero, nothing else.  Used to cross-validate the exact computations.

Reproducibility: every chunk of attempts gets its own Philox generator
seeded from (seed, chunk index), so results are bit-identical for a fixed
(seed, reps, chunk_size) regardless of the order chunks are processed in.
Alive paths are compacted between steps (the dead are dropped), so the cost
per attempt is the expected lifetime, a small constant, not the horizon.

A note on signed zero: numpy can produce -0.0 = a*x - 1 exactly at x = 1/a;
the alive test is x >= 0.0, which keeps -0.0, matching the convention that
hitting zero exactly is survival.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .model import ModelParams, NumericFailure, as_exact, TWO_THIRDS


class DegenerateEstimateError(NumericFailure):
    """No surviving paths where the estimator needs at least one."""


@dataclass(frozen=True)
class MCConfig:
    """Simulation plan.  chunk_size is part of the reproducibility contract:
    changing it changes which generator produces which attempt."""

    seed: int
    reps: int
    chunk_size: int = 1 << 20

    def __post_init__(self):
        if self.reps <= 0:
            raise ValueError("reps must be positive")
        if self.chunk_size <= 0:
            raise ValueError("chunk_size must be positive")

    def to_json(self) -> dict:
        return {"seed": self.seed, "reps": self.reps,
                "chunk_size": self.chunk_size}

    def config_hash(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass
class MCEstimate:
    value: float
    stderr: float
    ci95: tuple
    reps: int
    survivors: object = None

    def to_json(self) -> dict:
        return {"value": float(self.value), "stderr": float(self.stderr),
                "ci95": [float(v) for v in self.ci95], "reps": int(self.reps),
                "survivors": self.survivors}


def _rng_for_chunk(seed: int, chunk_index: int) -> np.random.Generator:
    seq = np.random.SeedSequence(entropy=seed, spawn_key=(chunk_index,))
    return np.random.Generator(np.random.Philox(seq))


def _chunk_sizes(cfg: MCConfig):
    full, rest = divmod(cfg.reps, cfg.chunk_size)
    sizes = [cfg.chunk_size] * full
    if rest:
        sizes.append(rest)
    return sizes


def survival_counts(params: ModelParams, x0, horizons, cfg: MCConfig,
                    collect_survivors: bool = False):
    """Numbers of attempts still alive at each horizon (nested counts from
    the same attempts).  Optionally also returns the surviving values at
    the largest horizon, pooled across chunks.

    Returns (counts array aligned with sorted(set(horizons)), survivor
    values or None).
    """
    a = float(params.a)
    p = float(params.p)
    x0f = float(x0)
    if x0f < 0 or x0f > float(params.ceiling):
        raise ValueError(f"start {x0} outside [0, {float(params.ceiling)}]")
    hs = sorted(set(int(h) for h in horizons))
    if hs and hs[0] < 0:
        raise ValueError("horizons must be nonnegative")
    hmap = {h: i for i, h in enumerate(hs)}
    top = hs[-1] if hs else 0
    counts = np.zeros(len(hs), dtype=np.int64)
    pool = []

    for ci, m in enumerate(_chunk_sizes(cfg)):
        rng = _rng_for_chunk(cfg.seed, ci)
        x = np.full(m, x0f)
        if 0 in hmap:
            counts[hmap[0]] += m
        for step in range(1, top + 1):
            xi = np.where(rng.random(x.size) < p, 1.0, -1.0)
            x = a * x + xi
            x = x[x >= 0.0]
            if step in hmap:
                counts[hmap[step]] += x.size
            if x.size == 0:
                break
        if collect_survivors and x.size:
            pool.append(x.copy())

    survivors = np.concatenate(pool) if (collect_survivors and pool) else (
        np.empty(0) if collect_survivors else None)
    return counts, survivors


def estimate_persistence(params: ModelParams, x0, n: int,
                         cfg: MCConfig) -> MCEstimate:
    """Binomial estimate of P_x0(alive at n) with normal-approximation
    95% interval.  Raises DegenerateEstimateError on zero survivors (the
    stderr formula would claim false certainty)."""
    counts, _ = survival_counts(params, x0, [n], cfg)
    s = int(counts[0])
    if s == 0:
        raise DegenerateEstimateError(
            f"no survivors at horizon {n} in {cfg.reps} attempts"
        )
    phat = s / cfg.reps
    stderr = math.sqrt(phat * (1.0 - phat) / cfg.reps)
    return MCEstimate(phat, stderr, (phat - 1.96 * stderr, phat + 1.96 * stderr),
                      cfg.reps, survivors=s)


def estimate_decay_rate(params: ModelParams, x0, n_lo: int, n_hi: int,
                        cfg: MCConfig) -> MCEstimate:
    """Decay-rate estimate from nested survival counts at two horizons:
    (S_hi/S_lo)^(1/(n_hi-n_lo)).

    Nesting (same attempts) cancels most of the variance; the delta-method
    standard error uses var(log S_hi/S_lo) ~ 1/S_hi - 1/S_lo, exact for
    nested binomials conditioned on the lower count.
    """
    if not 0 <= n_lo < n_hi:
        raise ValueError("need 0 <= n_lo < n_hi")
    counts, _ = survival_counts(params, x0, [n_lo, n_hi], cfg)
    s_lo, s_hi = int(counts[0]), int(counts[1])
    if s_hi == 0:
        raise DegenerateEstimateError(
            f"no survivors at horizon {n_hi} in {cfg.reps} attempts"
        )
    dn = n_hi - n_lo
    rate = (s_hi / s_lo) ** (1.0 / dn)
    var_log = max(1.0 / s_hi - 1.0 / s_lo, 0.0)
    stderr = rate * math.sqrt(var_log) / dn
    return MCEstimate(rate, stderr, (rate - 1.96 * stderr, rate + 1.96 * stderr),
                      cfg.reps, survivors=(s_lo, s_hi))


@dataclass
class ConditionalCdf:
    """Empirical law of X_n among survivors, on a grid."""

    z_grid: np.ndarray
    ecdf: np.ndarray
    n_survivors: int
    dkw_alpha: float
    dkw_epsilon: float
    ks_stat: float | None = None

    def to_json(self) -> dict:
        return {
            "z_grid": [float(z) for z in self.z_grid],
            "ecdf": [float(v) for v in self.ecdf],
            "n_survivors": self.n_survivors,
            "dkw_alpha": self.dkw_alpha,
            "dkw_epsilon": self.dkw_epsilon,
            "ks_stat": self.ks_stat,
        }


def conditional_cdf(params: ModelParams, x0, n: int, cfg: MCConfig, z_grid,
                    analytic_cdf=None, dkw_alpha: float = 0.05) -> ConditionalCdf:
    """Empirical conditional CDF of X_n given survival, with the
    finite-sample DKW band half-width sqrt(log(2/alpha)/(2m)).

    analytic_cdf, when given, is an array of reference CDF values on
    z_grid; ks_stat is then the max absolute difference on the grid.
    Raises DegenerateEstimateError when nothing survives.
    """
    z_grid = np.asarray(z_grid, dtype=np.float64)
    _, survivors = survival_counts(params, x0, [n], cfg, collect_survivors=True)
    m = survivors.size
    if m == 0:
        raise DegenerateEstimateError(
            f"no survivors at horizon {n} in {cfg.reps} attempts"
        )
    ecdf = np.searchsorted(np.sort(survivors), z_grid, side="right") / m
    eps = math.sqrt(math.log(2.0 / dkw_alpha) / (2.0 * m))
    ks = None
    if analytic_cdf is not None:
        ks = float(np.max(np.abs(ecdf - np.asarray(analytic_cdf, dtype=np.float64))))
    return ConditionalCdf(z_grid, ecdf, int(m), dkw_alpha, eps, ks)


def sample_surviving_paths(params: ModelParams, x0, n: int, cfg: MCConfig,
                           target: int = 64):
    """Full paths (values and innovations) of surviving attempts, up to
    `target` of them, scanning chunks in order until enough are found.

    Returns (paths array with shape (m, n+1), innovations int8 array with
    shape (m, n), attempts actually consumed).
    """
    a = float(params.a)
    p = float(params.p)
    x0f = float(x0)
    paths_pool, innov_pool = [], []
    used = 0
    for ci, m in enumerate(_chunk_sizes(cfg)):
        rng = _rng_for_chunk(cfg.seed, ci)
        x = np.full(m, x0f)
        paths = np.empty((m, n + 1))
        innov = np.empty((m, n), dtype=np.int8)
        paths[:, 0] = x
        alive = np.ones(m, dtype=bool)
        for step in range(1, n + 1):
            xi = np.where(rng.random(m) < p, 1.0, -1.0)
            x = a * x + xi
            paths[:, step] = x
            innov[:, step - 1] = xi.astype(np.int8)
            alive &= x >= 0.0
        used += m
        if alive.any():
            paths_pool.append(paths[alive])
            innov_pool.append(innov[alive])
        if sum(block.shape[0] for block in paths_pool) >= target:
            break
    if not paths_pool:
        return np.empty((0, n + 1)), np.empty((0, n), dtype=np.int8), used
    paths = np.concatenate(paths_pool)[:target]
    innov = np.concatenate(innov_pool)[:target]
    return paths, innov, used


@dataclass
class ReversedCheckReport:
    """Result of pulling surviving paths back through the backward map."""

    n_survivors: int
    horizon: int
    max_path_error: float
    innovation_mismatches: int
    attempts_used: int

    def to_json(self) -> dict:
        return {
            "n_survivors": self.n_survivors,
            "horizon": self.horizon,
            "max_path_error": self.max_path_error,
            "innovation_mismatches": self.innovation_mismatches,
            "attempts_used": self.attempts_used,
        }


def reversed_time_check(params: ModelParams, x0, n: int, cfg: MCConfig,
                        target: int = 64) -> ReversedCheckReport:
    """Simulate surviving paths forward, then reconstruct them from their
    endpoints with the backward map and compare.

    Uses the raw branch formula (no hole test): exact survivor values never
    sit in the hole, and float noise near its boundary should follow
    whichever branch the forward value actually took.  Only meaningful for
    a < 2/3, where the backward map is injective on survivors.
    """
    if as_exact(params.a) >= TWO_THIRDS:
        raise ValueError("reversed-time reconstruction needs a < 2/3")
    a = float(params.a)
    paths, innov, used = sample_surviving_paths(params, x0, n, cfg, target)
    m = paths.shape[0]
    if m == 0:
        raise DegenerateEstimateError(
            f"no survivors at horizon {n} in {cfg.reps} attempts"
        )
    cur = paths[:, n].copy()
    max_err = 0.0
    mismatches = 0
    for k in range(1, n + 1):
        below = cur < 1.0
        # sign of the innovation consumed going from step n-k to n-k+1
        xi_back = np.where(below, -1, 1).astype(np.int8)
        mismatches += int(np.sum(xi_back != innov[:, n - k]))
        cur = np.where(below, (cur + 1.0) / a, (cur - 1.0) / a)
        max_err = max(max_err, float(np.max(np.abs(cur - paths[:, n - k]))))
    return ReversedCheckReport(m, n, max_err, mismatches, used)
