"""Decay rate, harmonic function and quasi-stationary law of the killed chain.

Survival probabilities of the chain decay like P_x(alive at n) ~ c*V(x)*lam^n.
The decay rate lam solves a one-dimensional equation built from the digits of
the backward orbit of 0:

    sum over k of  delta_k * (p/lam)^(k+1) * (q/p)^(L_k)  =  1,

a strictly decreasing function of lam wherever it converges, with a unique
root above the divergence threshold p*max(1, (q/p)^C).  C is the
occupation-frequency constant from dynamics.return_stats: it certifies
L_k <= C*(k+1) + 1 for every k, which is what turns truncated sums into
certified enclosures (geometric tail bounds).

The harmonic function V is the increasing pure-jump function with a jump of
(p/lam)^k * (q/p)^(L_k) at the k-th orbit point, and the quasi-stationary law
nu is characterized by its survival function nu((z, ceiling]), a sum of the
same shape driven by the orbit of z instead of the orbit of 0.

Everything here consumes Orbit objects from dynamics and is agnostic about
how they were classified: finite orbits give exact finite sums, eventually
periodic orbits give exact geometric resummations, truncated orbits give
partial sums with certified tails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .model import ModelParams, NumericFailure, as_exact, ONE_HALF, TWO_THIRDS
from .dynamics import (
    APERIODIC,
    EVENTUALLY_PERIODIC,
    FINITE,
    InsufficientOrbitError,
    Orbit,
    OutOfDomainError,
    ReturnStats,
    beta_expansion_digits,
    orbit_of,
    orbit_of_zero,
    return_stats,
)


class BracketFailure(NumericFailure):
    """The canonical bracket endpoints could not be certified."""


class NotSummable(NumericFailure):
    """The series diverges at the requested rate (resummation ratio >= 1)."""


@dataclass
class SeriesValue:
    """A partial sum plus a certified nonnegative tail: the true value lies
    in [value, value + tail]."""

    value: float
    tail: float
    n_terms: int


def _term_arrays(orbit: Orbit, upto: int):
    """Indices k < upto with delta_k = 1, and their occupation counts."""
    deltas = np.asarray(orbit.deltas[:upto], dtype=np.int64)
    occ = np.concatenate(([0], np.cumsum(deltas)))
    ks = np.flatnonzero(deltas)
    return ks.astype(np.float64), occ[ks].astype(np.float64)


def _log_sum(ks, Ls, ln_s, ln_r, extra_k=1.0):
    """sum over the given k of s^(k+extra_k) * r^(L_k), in log space."""
    if len(ks) == 0:
        return 0.0
    return float(np.sum(np.exp((ks + extra_k) * ln_s + Ls * ln_r)))


def _geometric_tail(s: float, r: float, freq_constant: float, n_terms: int) -> float:
    """Certified bound on sum_{k >= n_terms} s^(k+1) * r^(L_k) using
    L_k <= C*(k+1) + 1 (r > 1) or L_k >= 0 (r <= 1).  Returns inf when the
    dominating ratio is not below 1."""
    if r > 1.0:
        ratio = s * r**freq_constant
        prefactor = r
    else:
        ratio = s
        prefactor = 1.0
    if ratio >= 1.0:
        return math.inf
    return prefactor * ratio ** (n_terms + 1) / (1.0 - ratio)


def eval_decay_equation(params: ModelParams, orbit: Orbit, lam: float,
                        freq_constant: float = 0.0) -> SeriesValue:
    """Evaluate the decay-rate equation's left side at lam.

    Finite orbits sum exactly; eventually periodic orbits resum the cycle in
    closed form (raising NotSummable when the cycle ratio is >= 1);
    truncated orbits return a partial sum with a certified geometric tail
    (which is inf when lam is at or below the divergence threshold).
    """
    if lam <= 0:
        raise NotSummable(f"rate must be positive, got {lam}")
    p = float(params.p)
    r = (1.0 - p) / p
    s = p / lam
    ln_s, ln_r = math.log(s), math.log(r)

    if orbit.kind == FINITE:
        ks, Ls = _term_arrays(orbit, orbit.kappa + 1)
        return SeriesValue(_log_sum(ks, Ls, ln_s, ln_r), 0.0, orbit.kappa + 1)

    if orbit.kind == EVENTUALLY_PERIODIC:
        k0, per = orbit.k0, orbit.period
        occ = orbit.occ
        rho = s**per * r ** (occ[k0 + per] - occ[k0])
        if rho >= 1.0:
            raise NotSummable(f"cycle ratio {rho} >= 1 at rate {lam}")
        ks, Ls = _term_arrays(orbit, k0 + per)
        pre_mask = ks < k0
        pre = _log_sum(ks[pre_mask], Ls[pre_mask], ln_s, ln_r)
        cyc = _log_sum(ks[~pre_mask], Ls[~pre_mask], ln_s, ln_r)
        return SeriesValue(pre + cyc / (1.0 - rho), 0.0, k0 + per)

    n = len(orbit.deltas)
    ks, Ls = _term_arrays(orbit, n)
    return SeriesValue(_log_sum(ks, Ls, ln_s, ln_r),
                       _geometric_tail(s, r, freq_constant, n), n)


def _norming_constant(params: ModelParams, orbit: Orbit, lam: float) -> float:
    """The constant c in P_x(alive at n) ~ c*V(x)*lam^n, i.e.
    1/(1 + sum_k k * delta_k * (p/lam)^(k+1) * (q/p)^L_k)."""
    p = float(params.p)
    r = (1.0 - p) / p
    s = p / lam
    ln_s, ln_r = math.log(s), math.log(r)

    if orbit.kind == EVENTUALLY_PERIODIC:
        k0, per = orbit.k0, orbit.period
        occ = orbit.occ
        rho = s**per * r ** (occ[k0 + per] - occ[k0])
        if rho >= 1.0:
            raise NotSummable(f"cycle ratio {rho} >= 1 at rate {lam}")
        ks, Ls = _term_arrays(orbit, k0 + per)
        terms = np.exp((ks + 1.0) * ln_s + Ls * ln_r)
        pre = ks < k0
        ksum = float(np.sum(ks[pre] * terms[pre]))
        # cycle terms appear at k + m*per for m >= 0 with weight rho^m:
        # sum_m (k + m*per) rho^m = k/(1-rho) + per*rho/(1-rho)^2
        cyc_k, cyc_t = ks[~pre], terms[~pre]
        ksum += float(np.sum(cyc_t * (cyc_k / (1.0 - rho)
                                      + per * rho / (1.0 - rho) ** 2)))
    else:
        upto = orbit.kappa + 1 if orbit.kind == FINITE else len(orbit.deltas)
        ks, Ls = _term_arrays(orbit, upto)
        terms = np.exp((ks + 1.0) * ln_s + Ls * ln_r)
        ksum = float(np.sum(ks * terms))
    return 1.0 / (1.0 + ksum)


@dataclass
class SpectralSolution:
    """Solved decay rate with everything needed to evaluate V and the
    quasi-stationary law.

    bracket is the final bisection interval (collapsed to a point when the
    certified enclosure could no longer give a sign); window is the a-priori
    interval (p*max(1,r^C), (p/a)*max(1,r^C)] that must contain the rate.
    tail_bound is the certified series tail at the returned rate, zero for
    finite and periodic orbits.
    """

    params: ModelParams
    orbit: Orbit
    stats: ReturnStats
    lam: float
    bracket: tuple
    window: tuple
    iterations: int
    n_terms: int
    tail_bound: float
    c: float
    freq_constant: float

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "lambda": self.lam,
            "bracket": list(self.bracket),
            "window": list(self.window),
            "iterations": self.iterations,
            "n_terms": self.n_terms,
            "tail_bound": self.tail_bound,
            "norming_constant": self.c,
            "freq_constant": self.freq_constant,
            "orbit_kind": self.orbit.kind,
            "kappa": self.orbit.kappa,
            "kappa_prime": self.orbit.kappa_prime,
        }


def _bisect(params: ModelParams, orbit: Orbit, freq_constant: float,
            max_iter: int = 200):
    """Bisect the decay-rate equation on the canonical bracket
    [p*max(1,r^C), 2*p*max(1,r^C)].

    The bracket depends only on p and the digit data, never on a itself, so
    parameter windows sharing a digit sequence get bit-identical results.
    Sign decisions use the certified enclosure: left only when the partial
    sum already exceeds 1, right only when partial + tail is below 1; an
    undecidable midpoint ends the search there (the root is within the tail
    tolerance of it).
    """
    p = float(params.p)
    r = (1.0 - p) / p
    scale = max(1.0, r**freq_constant)
    lo, hi = p * scale, 2.0 * p * scale

    try:
        lo_above = eval_decay_equation(params, orbit, lo, freq_constant).value > 1.0
    except NotSummable:
        lo_above = True  # divergence at the base certainly exceeds 1
    if not lo_above:
        raise BracketFailure(
            f"partial sum at the bracket base {lo} does not exceed 1; "
            "the orbit truncation is too short to see the divergence"
        )
    rv_hi = eval_decay_equation(params, orbit, hi, freq_constant)
    if not rv_hi.value + rv_hi.tail < 1.0:
        raise BracketFailure(
            f"cannot certify the equation below 1 at the bracket top {hi} "
            f"(value {rv_hi.value}, tail {rv_hi.tail})"
        )

    iterations = 0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        rv = eval_decay_equation(params, orbit, mid, freq_constant)
        iterations += 1
        if rv.value > 1.0:
            lo = mid
        elif rv.value + rv.tail < 1.0:
            hi = mid
        else:
            # enclosure straddles 1: the root is within the tail of mid
            return mid, (mid, mid), iterations
    return 0.5 * (lo + hi), (lo, hi), iterations


def solve_lambda(params: ModelParams, tail_target: float = 1e-13,
                 orbit_start: int = 512, max_orbit: int = 1 << 16) -> SpectralSolution:
    """Solve for the decay rate of the killed chain.

    For a <= 1/2 the rate is exactly p (the chain dies unless every step is
    +1) and the solution is assembled directly.  Otherwise the orbit of 0 is
    computed exactly, truncations are doubled until the certified tail at
    the solved rate is below tail_target (or the orbit resolves as finite or
    periodic, where tails are zero), and the rate is bisected on the
    canonical bracket.
    """
    a = as_exact(params.a)
    p = float(params.p)

    if a <= ONE_HALF:
        orbit = orbit_of_zero(params, max_iter=64)
        stats = return_stats(orbit, params.p)
        return SpectralSolution(
            params=params, orbit=orbit, stats=stats, lam=p,
            bracket=(p, p), window=(p, p / float(params.a)),
            iterations=0, n_terms=len(orbit.deltas), tail_bound=0.0,
            c=1.0, freq_constant=0.0,
        )

    n_iter = orbit_start
    while True:
        orbit = orbit_of_zero(params, max_iter=n_iter)
        extendable = orbit.kind == APERIODIC and n_iter < max_orbit
        try:
            stats = return_stats(orbit, params.p)
            freq_constant = float(stats.freq_constant)
            lam, bracket, iterations = _bisect(params, orbit, freq_constant)
            rv = eval_decay_equation(params, orbit, lam, freq_constant)
            if rv.tail > tail_target and extendable:
                n_iter = min(2 * n_iter, max_orbit)
                continue
        except (InsufficientOrbitError, BracketFailure):
            if extendable:
                n_iter = min(2 * n_iter, max_orbit)
                continue
            raise
        break

    c = _norming_constant(params, orbit, lam)
    r = (1.0 - p) / p
    scale = max(1.0, r**freq_constant)
    window = (p * scale, (p / float(params.a)) * scale)
    return SpectralSolution(
        params=params, orbit=orbit, stats=stats, lam=lam,
        bracket=bracket, window=window, iterations=iterations,
        n_terms=rv.n_terms, tail_bound=rv.tail, c=c,
        freq_constant=freq_constant,
    )


def harmonic_jumps(sol: SpectralSolution):
    """Jump representation of the harmonic function: positions (float), jump
    weights, and a certified bound on the mass past the truncation.

    V(x) = sum of weights at positions <= x, up to the tail.  Weight k is
    (p/lam)^k * (q/p)^L_k, folded through the cycle resummation for
    eventually periodic orbits.
    """
    orbit = sol.orbit
    p = float(sol.params.p)
    r = (1.0 - p) / p
    s = p / sol.lam
    ln_s, ln_r = math.log(s), math.log(r)

    if orbit.kind == EVENTUALLY_PERIODIC:
        k0, per = orbit.k0, orbit.period
        occ = orbit.occ
        rho = s**per * r ** (occ[k0 + per] - occ[k0])
        if rho >= 1.0:
            raise NotSummable(f"cycle ratio {rho} >= 1")
        n = k0 + per
        ks = np.arange(n, dtype=np.float64)
        Ls = np.asarray(occ[:n], dtype=np.float64)
        w = np.exp(ks * ln_s + Ls * ln_r)
        w[k0:] /= 1.0 - rho
        pos = np.array([float(pt) for pt in orbit.points[:n]])
        return pos, w, 0.0

    n = orbit.kappa + 1 if orbit.kind == FINITE else len(orbit.deltas)
    ks = np.arange(n, dtype=np.float64)
    Ls = np.asarray(orbit.occ[:n], dtype=np.float64)
    w = np.exp(ks * ln_s + Ls * ln_r)
    pos = np.array([float(pt) for pt in orbit.points[:n]])
    if orbit.kind == FINITE:
        tail = 0.0
    elif r > 1.0:
        ratio = s * r**sol.freq_constant
        tail = math.inf if ratio >= 1.0 else r ** (sol.freq_constant + 1.0) \
            * ratio**n / (1.0 - ratio)
    else:
        tail = math.inf if s >= 1.0 else s**n / (1.0 - s)
    return pos, w, tail


def eval_harmonic(params: ModelParams, sol: SpectralSolution, x) -> float:
    """The harmonic function V at x: increasing, pure-jump, V(0) = 1 for
    finite orbits.  Identically 1 for a <= 1/2."""
    if x < 0 or x > params.ceiling:
        raise OutOfDomainError(f"{x} outside [0, {params.ceiling}]")
    if as_exact(params.a) <= ONE_HALF:
        return 1.0
    pos, w, _tail = harmonic_jumps(sol)
    return float(np.sum(w[pos <= float(x)]))


def harmonic_residual(params: ModelParams, sol: SpectralSolution,
                      n_grid: int = 1000, seed: int = 20240814,
                      margin: float = 1e-9) -> float:
    """Max eigenvalue-equation residual |p*V(ax+1) + q*V(ax-1)*1{x >= 1/a}
    - lam*V(x)| over a random grid that stays `margin` away from every jump
    of the three evaluations."""
    a = float(params.a)
    p = float(params.p)
    q = 1.0 - p
    ceiling = float(params.ceiling)
    pos, w, _tail = harmonic_jumps(sol)

    # x-locations where any of V(x), V(ax+1), V(ax-1) jumps, plus the kill
    # threshold 1/a where the second term switches on
    jumps = [pos, (pos - 1.0) / a, (pos + 1.0) / a, np.array([1.0 / a])]
    jumps = np.concatenate(jumps)
    jumps = jumps[(jumps >= 0.0) & (jumps <= ceiling)]

    rng = np.random.default_rng(seed)
    xs = rng.uniform(0.0, ceiling, size=4 * n_grid)
    dist = np.min(np.abs(xs[:, None] - jumps[None, :]), axis=1)
    xs = xs[dist > margin][:n_grid]

    def v_at(points):
        return np.sum(w[None, :] * (pos[None, :] <= points[:, None]), axis=1)

    up = v_at(a * xs + 1.0)
    down = np.where(xs >= 1.0 / a, v_at(np.maximum(a * xs - 1.0, 0.0)), 0.0)
    resid = p * up + q * down - sol.lam * v_at(xs)
    return float(np.max(np.abs(resid)))


def truncation_for_tail(sol: SpectralSolution, target: float = 1e-13,
                        cap: int = 1 << 16) -> int:
    """Number of orbit terms needed to push the certified series tail at the
    solved rate below target."""
    p = float(sol.params.p)
    r = (1.0 - p) / p
    s = p / sol.lam
    if r > 1.0:
        ratio, prefactor = s * r**sol.freq_constant, r
    else:
        ratio, prefactor = s, 1.0
    if ratio >= 1.0:
        return cap
    n = math.log(target * (1.0 - ratio) / prefactor) / math.log(ratio)
    return max(32, min(cap, math.ceil(n)))


@dataclass
class CdfPoint:
    """Quasi-stationary law at a single point: survival = nu((z, ceiling]),
    cdf = 1 - survival."""

    z: float
    survival: float
    cdf: float
    n_terms: int
    tail_bound: float
    flags: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "z": float(self.z),
            "survival": self.survival,
            "cdf": self.cdf,
            "n_terms": self.n_terms,
            "tail_bound": self.tail_bound,
            "flags": list(self.flags),
        }


def qsd_survival(params: ModelParams, sol: SpectralSolution, z,
                 boundary_eps: float = 1e-12) -> CdfPoint:
    """Survival function of the quasi-stationary law at a single point z.

    Exact rational z with exact params goes through exact orbit arithmetic;
    anything else runs in floats with boundary-proximity detection.  When
    the orbit of z hits 1 (exactly, or within boundary_eps on the float
    path), the remainder of the series telescopes through the equation for
    the rate and is replaced by its closed form.
    """
    if z < 0 or z > params.ceiling:
        raise OutOfDomainError(f"{z} outside [0, {params.ceiling}]")
    if as_exact(params.a) <= ONE_HALF:
        # the quasi-stationary law is the point mass at the ceiling
        surv = 1.0 if z < params.ceiling else 0.0
        return CdfPoint(float(z), surv, 1.0 - surv, 0, 0.0,
                        ["point-mass-at-ceiling"])

    p = float(params.p)
    r = (1.0 - p) / p
    s = p / sol.lam
    ln_s, ln_r = math.log(s), math.log(r)
    n_max = truncation_for_tail(sol)

    exact_mode = params.is_exact and isinstance(z, (int, Fraction))
    orb = orbit_of(params, Fraction(z) if exact_mode else float(z),
                   max_iter=n_max, boundary_eps=boundary_eps)
    flags = []

    hit = None
    for j, pt in enumerate(orb.points):
        is_one = (pt == 1) if exact_mode else abs(float(pt) - 1.0) <= boundary_eps
        if is_one:
            hit = j
            break

    occ = orb.occ
    if hit is not None:
        ks, Ls = _term_arrays(orb, hit)
        surv = _log_sum(ks, Ls, ln_s, ln_r) \
            + math.exp((hit + 1) * ln_s + occ[hit] * ln_r)
        tail, n_terms = 0.0, hit + 1
        flags.append("hits-one")
        if not exact_mode:
            flags.append("boundary-proximity")
    elif orb.kind == FINITE:
        ks, Ls = _term_arrays(orb, orb.kappa + 1)
        surv = _log_sum(ks, Ls, ln_s, ln_r)
        tail, n_terms = 0.0, orb.kappa + 1
    else:
        n_terms = len(orb.deltas)
        ks, Ls = _term_arrays(orb, n_terms)
        surv = _log_sum(ks, Ls, ln_s, ln_r)
        tail = _geometric_tail(s, r, sol.freq_constant, n_terms)
        flags.append("truncated")

    if orb.boundary_flag and "boundary-proximity" not in flags:
        flags.append("boundary-proximity")
    surv = min(1.0, max(0.0, surv))
    return CdfPoint(float(z), surv, 1.0 - surv, n_terms, tail, flags)


def qsd_survival_grid(params: ModelParams, sol: SpectralSolution, zs):
    """Vectorized survival function of the quasi-stationary law.

    Plain truncated sums: no hits-one closed form (a float orbit that lands
    on the branch point follows whichever branch float rounding picks, and
    either continuation converges to the same value).  Returns (survival
    array, per-point certified tail array).
    """
    zs = np.asarray(zs, dtype=np.float64)
    ceiling = float(params.ceiling)
    if np.any(zs < 0) or np.any(zs > ceiling):
        raise OutOfDomainError("grid point outside the state space")
    if as_exact(params.a) <= ONE_HALF:
        return (zs < ceiling).astype(np.float64), np.zeros_like(zs)

    a = float(params.a)
    hole_lo = float(params.hole_lo)
    p = float(params.p)
    r = (1.0 - p) / p
    s = p / sol.lam
    n_max = truncation_for_tail(sol)

    cur = zs.copy()
    surv = np.zeros_like(zs)
    weight = np.full_like(zs, s)  # s^(j+1) * r^(L_j) at j = 0
    alive = np.ones(zs.shape, dtype=bool)
    for _ in range(n_max):
        below = cur < 1.0
        surv[alive & below] += weight[alive & below]
        in_hole = alive & below & (cur > hole_lo)
        alive &= ~in_hole
        if not alive.any():
            break
        weight = weight * s
        weight[below] *= r
        cur = np.where(below, (cur + 1.0) / a, (cur - 1.0) / a)
    tails = np.where(alive, _geometric_tail(s, r, sol.freq_constant, n_max), 0.0)
    np.clip(surv, 0.0, 1.0, out=surv)
    return surv, tails


@dataclass
class BoundsReport:
    """A-priori window check for the solved rate: applicable for a > 1/2,
    where p*max(1,r^C) < lam <= (p/a)*max(1,r^C), the upper end strict
    except at (a, p) = (2/3, 1/2)."""

    applicable: bool
    lower: float
    upper: float
    lam: float
    lower_strict_ok: bool
    upper_ok: bool
    upper_equality: bool
    upper_equality_expected: bool

    def to_json(self) -> dict:
        return {k: getattr(self, k) for k in (
            "applicable", "lower", "upper", "lam", "lower_strict_ok",
            "upper_ok", "upper_equality", "upper_equality_expected")}


def exponent_bounds(params: ModelParams, sol: SpectralSolution,
                    freq_constant: float | None = None,
                    atol: float = 1e-9) -> BoundsReport:
    """Check the solved rate against its a-priori window.  A different
    frequency constant than the solution's own can be supplied (any valid
    occupation bound gives a valid window)."""
    a = as_exact(params.a)
    p = float(params.p)
    r = (1.0 - p) / p
    C = sol.freq_constant if freq_constant is None else freq_constant
    scale = max(1.0, r**C)
    lower, upper = p * scale, (p / float(params.a)) * scale
    applicable = a > ONE_HALF
    equality_expected = (a == TWO_THIRDS and as_exact(params.p) == ONE_HALF)
    return BoundsReport(
        applicable=applicable,
        lower=lower,
        upper=upper,
        lam=sol.lam,
        lower_strict_ok=sol.lam > lower,
        upper_ok=sol.lam <= upper + atol,
        upper_equality=abs(sol.lam - upper) <= atol,
        upper_equality_expected=equality_expected,
    )


def parry_density(x, n_terms: int = 120) -> float:
    """Invariant density (unnormalized) of the forward expanding map
    conjugate to the a = 2/3 backward dynamics, rescaled to live on [0, 3].

    Built from the exact mod-one orbits of 0 and 1 under y -> 1.5*y + 0.5;
    proportional to the harmonic function at (a, p) = (2/3, 1/2)."""
    beta, alpha = Fraction(3, 2), Fraction(1, 2)
    _, orb0 = beta_expansion_digits(beta, alpha, Fraction(0), n_terms)
    _, orb1 = beta_expansion_digits(beta, alpha, Fraction(1), n_terms)
    y = Fraction(x) / 3 if isinstance(x, (int, Fraction)) else float(x) / 3.0
    h = 0.0
    w = 1.0
    for k in range(n_terms):
        h += w * (float(y < orb1[k]) - float(y < orb0[k]))
        w *= 2.0 / 3.0
    return h


@dataclass
class CurveRow:
    """One row of a decay-rate sweep over a."""

    a: object
    lam: float
    bracket_lo: float
    bracket_hi: float
    kappa: int | None
    kappa_prime: int | None
    kind: str
    n_terms: int
    tail_bound: float
    plateau_id: int | None
    error: str = ""

    def to_csv_row(self):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, float) and math.isnan(v):
                return ""
            return v

        a_str = str(self.a) if isinstance(self.a, Fraction) else repr(self.a)
        return [a_str, fmt(self.lam), fmt(self.bracket_lo), fmt(self.bracket_hi),
                fmt(self.kappa), fmt(self.kappa_prime), self.kind,
                fmt(self.n_terms), fmt(self.tail_bound), fmt(self.plateau_id),
                self.error]


CURVE_COLUMNS = ["a", "lambda", "bracket_lo", "bracket_hi", "kappa",
                 "kappa_prime", "kind", "n_terms", "tail_bound", "plateau_id",
                 "error"]


def decay_rate_curve(a_values, p, experimental: bool = False):
    """Decay rate along a sweep of a at fixed p.

    Per-point failures (domain errors, bracket failures) are reported in the
    row's error column instead of aborting the sweep.  Points whose orbits
    share the same digit data get the same plateau_id, and because the
    bisection bracket depends only on (p, digits), their rates agree bit for
    bit.
    """
    rows = []
    plateau_ids: dict = {}
    for a in a_values:
        try:
            params = ModelParams(a, p, experimental=experimental)
            sol = solve_lambda(params)
            orbit = sol.orbit
            key = (orbit.kind, tuple(orbit.deltas[:512]))
            pid = plateau_ids.setdefault(key, len(plateau_ids))
            rows.append(CurveRow(
                a=a, lam=sol.lam, bracket_lo=sol.bracket[0],
                bracket_hi=sol.bracket[1], kappa=orbit.kappa,
                kappa_prime=orbit.kappa_prime, kind=orbit.kind,
                n_terms=sol.n_terms, tail_bound=sol.tail_bound,
                plateau_id=pid,
            ))
        except (ValueError, NumericFailure, InsufficientOrbitError) as exc:
            rows.append(CurveRow(
                a=a, lam=math.nan, bracket_lo=math.nan, bracket_hi=math.nan,
                kappa=None, kappa_prime=None, kind="", n_terms=0,
                tail_bound=math.nan, plateau_id=None, error=str(exc),
            ))
    return rows
