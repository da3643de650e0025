"""Backward dynamics of the surviving chain.

On the event that the chain is still alive at time n, its past is a
deterministic function of its present: X_{n-1} = (X_n - xi_n)/a, and the sign
of xi_n is forced by where X_n sits.  That gives the backward map

    step(x) = (x + 1)/a   for 0 <= x <= hole_lo      (xi was -1)
            = (x - 1)/a   for 1 <= x <= ceiling      (xi was +1)

undefined on the open hole (hole_lo, 1).  Iterating step from a point x
produces the orbit of x; the orbit of 0 in particular encodes everything the
spectral module needs: the digit d_k = 1{step^k(0) < 1} says which branch the
k-th backward step used, and the occupation counts L_k = d_0 + ... + d_{k-1}
count how many of the first k steps were +1 steps.

Orbits are computed in exact rational arithmetic whenever the inputs allow
it.  For rational a strictly between 1/2 and 2/3 the orbit of 0 can never
revisit a point (denominators grow strictly), so the only possible outcomes
are entering the hole after finitely many steps or running forever; the
eventually-periodic classification is still implemented in full because it
occurs at a = 1/2 and at algebraic irrational values of a, and tests drive it
through synthetic orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .model import ModelParams, as_exact, TWO_THIRDS, ONE_HALF


class _Hole:
    """Sentinel returned by backward_step for points inside the hole."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "HOLE"


HOLE = _Hole()


class OutOfDomainError(ValueError):
    """Point outside [0, ceiling] (or [-ceiling, ceiling] for the two-sided map)."""


class HoleError(RuntimeError):
    """Backward iteration hit the hole before completing the requested steps."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"iterate {step} of the start point lies in the hole")


class GapError(RuntimeError):
    """Two-sided backward iteration hit the central gap (-g, g)."""

    def __init__(self, step: int):
        self.step = step
        super().__init__(f"iterate {step} of the start point lies in the gap")


class InsufficientOrbitError(RuntimeError):
    """A truncated orbit does not contain enough returns to settle a statistic."""


def backward_step(params: ModelParams, x):
    """One application of the backward map.

    Returns the image, or the HOLE sentinel when x lies strictly inside
    (hole_lo, 1).  Raises OutOfDomainError outside [0, ceiling].  Exact in,
    exact out: Fraction x with Fraction a stays a Fraction.
    """
    if x < 0 or x > params.ceiling:
        raise OutOfDomainError(f"{x} outside [0, {params.ceiling}]")
    if params.hole_lo < x < 1:
        return HOLE
    if x >= 1:
        return (x - 1) / params.a
    return (x + 1) / params.a


FINITE = "finite"
EVENTUALLY_PERIODIC = "eventually-periodic"
APERIODIC = "aperiodic"


@dataclass
class Orbit:
    """Backward orbit of a point, with its branch digits.

    points[k] = step^k(start).  For a finite orbit the last stored point is
    the one inside the hole and kappa is its index.  For an eventually
    periodic orbit the first repeated point is stored again at the end, so
    points[k0 + period] == points[k0] holds literally.  For an aperiodic
    (truncated) orbit there are exactly the first max_iter points and no
    claim beyond them.

    deltas[k] = 1 if points[k] < 1 else 0.  kappa_prime is the index of the
    last distinct point (None when unknown, i.e. truncated).
    """

    start: object
    points: list
    deltas: list
    kind: str
    kappa: int | None = None
    k0: int | None = None
    period: int | None = None
    boundary_flag: bool = False

    @property
    def kappa_prime(self):
        if self.kind == FINITE:
            return self.kappa
        if self.kind == EVENTUALLY_PERIODIC:
            return self.k0 + self.period - 1
        return None

    @property
    def distinct_points(self):
        if self.kind == EVENTUALLY_PERIODIC:
            return self.points[: self.k0 + self.period]
        return self.points

    @property
    def occ(self):
        """Occupation counts: occ[k] = deltas[0] + ... + deltas[k-1], with
        occ[0] = 0.  One entry longer than deltas."""
        out = [0]
        for d in self.deltas:
            out.append(out[-1] + d)
        return out

    def digit(self, k: int) -> int:
        """delta_k, extending periodically past the stored prefix when the
        orbit is eventually periodic."""
        if k < 0:
            raise IndexError(k)
        if self.kind == EVENTUALLY_PERIODIC and k >= self.k0:
            return self.deltas[self.k0 + (k - self.k0) % self.period]
        if self.kind == FINITE and k > self.kappa:
            raise IndexError(f"finite orbit has no digit {k} (kappa={self.kappa})")
        if self.kind == APERIODIC and k >= len(self.deltas):
            raise InsufficientOrbitError(
                f"truncated orbit of length {len(self.deltas)} has no digit {k}"
            )
        return self.deltas[k]

    def occupation(self, k: int) -> int:
        """L_k = number of +1 backward branches among the first k steps."""
        if self.kind == EVENTUALLY_PERIODIC and k > self.k0 + self.period:
            occ = self.occ
            base = self.k0 + ((k - self.k0) % self.period)
            cycles = (k - self.k0) // self.period
            per_cycle = occ[self.k0 + self.period] - occ[self.k0]
            return occ[base] + cycles * per_cycle
        return self.occ[k]

    def to_json(self) -> dict:
        def enc(v):
            return str(v) if isinstance(v, Fraction) else float(v)

        out = {
            "start": enc(self.start),
            "points": [enc(pt) for pt in self.points],
            "deltas": list(self.deltas),
            "occ": self.occ,
            "kind": self.kind,
            "kappa": self.kappa,
            "kappa_prime": self.kappa_prime,
            "boundary_flag": self.boundary_flag,
        }
        if self.kind == EVENTUALLY_PERIODIC:
            out["k0"] = self.k0
            out["period"] = self.period
        return out


def orbit_of_zero(params: ModelParams, max_iter: int = 10000) -> Orbit:
    """Exact backward orbit of 0.

    Always computed in rational arithmetic (a float a is converted through
    its exact binary value).  Detects hole entry, revisits (eventually
    periodic), and otherwise truncates to max_iter points.
    """
    a = as_exact(params.a)
    hole_lo = (2 * a - 1) / (1 - a)
    pts = [Fraction(0)]
    index = {Fraction(0): 0}
    kind, kappa, k0, period = APERIODIC, None, None, None
    while True:
        cur = pts[-1]
        if hole_lo < cur < 1:
            kind, kappa = FINITE, len(pts) - 1
            break
        if len(pts) >= max_iter:
            break
        nxt = (cur + 1) / a if cur < 1 else (cur - 1) / a
        if nxt in index:
            k0 = index[nxt]
            period = len(pts) - k0
            pts.append(nxt)
            kind = EVENTUALLY_PERIODIC
            break
        index[nxt] = len(pts)
        pts.append(nxt)
    deltas = [1 if pt < 1 else 0 for pt in pts]
    return Orbit(Fraction(0), pts, deltas, kind, kappa=kappa, k0=k0, period=period)


def orbit_of(params: ModelParams, x, max_iter: int = 10000,
             boundary_eps: float = 1e-12) -> Orbit:
    """Backward orbit of an arbitrary point x in [0, ceiling].

    Arithmetic follows the input types (exact for Fraction x with exact
    params, float otherwise).  No revisit detection: outcomes are hole entry
    (finite) or truncation (aperiodic).  Points that come within
    boundary_eps of the hole endpoints set boundary_flag, signalling that
    float digits past that step are not trustworthy.
    """
    if x < 0 or x > params.ceiling:
        raise OutOfDomainError(f"{x} outside [0, {params.ceiling}]")
    a = params.a
    hole_lo = params.hole_lo
    pts = [x]
    flag = False
    kind, kappa = APERIODIC, None
    while True:
        cur = pts[-1]
        if abs(cur - 1) <= boundary_eps or abs(cur - hole_lo) <= boundary_eps:
            flag = True
        if hole_lo < cur < 1:
            kind, kappa = FINITE, len(pts) - 1
            break
        if len(pts) >= max_iter:
            break
        pts.append((cur + 1) / a if cur < 1 else (cur - 1) / a)
    deltas = [1 if pt < 1 else 0 for pt in pts]
    return Orbit(x, pts, deltas, kind, kappa=kappa, boundary_flag=flag)


def synthetic_periodic_orbit(params: ModelParams, points, k0: int) -> Orbit:
    """Assemble an eventually periodic Orbit from precomputed distinct points.

    points are the distinct orbit points (floats allowed); the cycle runs
    from index k0 to the end and the repeat of points[k0] is appended.  This
    exists because rational a in (1/2, 2/3) can never produce a periodic
    orbit of 0, yet the periodic code paths are real (a = 1/2, algebraic
    irrational a) and need exercising.
    """
    pts = list(points) + [points[k0]]
    period = len(points) - k0
    if period < 1:
        raise ValueError("cycle must contain at least one point")
    deltas = [1 if pt < 1 else 0 for pt in pts]
    return Orbit(pts[0], pts, deltas, EVENTUALLY_PERIODIC, k0=k0, period=period)


def beta_expansion_digits(beta, alpha, y, n: int):
    """First n digits of the linear mod-one expansion y -> beta*y + alpha.

    d_k = floor(beta * w_k + alpha) where w_0 = y and w_{k+1} is the
    fractional part beta*w_k + alpha - d_k.  Returns (digits, orbit points
    [w_0..w_{n-1}]).  Exact when beta, alpha, y are Fractions; float
    iteration loses digit accuracy past roughly k = 50, so exact inputs are
    strongly preferred for long expansions.
    """
    cur = y
    digits, pts = [], []
    for _ in range(n):
        pts.append(cur)
        t = beta * cur + alpha
        d = math.floor(t)
        digits.append(int(d))
        cur = t - d
    return digits, pts


@dataclass
class ReturnStats:
    """Return times of the orbit of 0 below 1, and the occupation-frequency
    constant derived from them.

    t: indices k >= 1 with delta_k = 1 (as observed, possibly extended
       through the periodic structure).
    sigma: total number of returns; math.inf when the cycle contains one,
       None when the orbit is truncated and the count is unknown.
    d: the minima d_n used in the frequency bound (exact Fractions).
    freq_constant: the constant C with L_k <= C*(k+1) + 1; zero when
       p >= 1/2 (the bound is only needed when the -1 branch is the rare
       one under the tilted weights).
    """

    t: list
    sigma: object
    d: list
    freq_constant: Fraction


def _return_times(orbit: Orbit, count: int):
    """First `count` return times of the orbit of 0, extending periodically
    when possible.  Raises InsufficientOrbitError when a truncated orbit
    runs out before yielding enough."""
    out = []
    k = 1
    if orbit.kind == EVENTUALLY_PERIODIC:
        per_cycle = sum(orbit.deltas[orbit.k0 : orbit.k0 + orbit.period])
        horizon = None if per_cycle > 0 else orbit.k0 + orbit.period
        while len(out) < count:
            if horizon is not None and k >= horizon:
                break
            if orbit.digit(k) == 1:
                out.append(k)
            k += 1
        return out
    last = orbit.kappa if orbit.kind == FINITE else len(orbit.deltas) - 1
    while k <= last and len(out) < count:
        if orbit.deltas[k] == 1:
            out.append(k)
        k += 1
    if len(out) < count and orbit.kind == APERIODIC:
        raise InsufficientOrbitError(
            f"need {count} returns, truncated orbit shows only {len(out)}"
        )
    return out


def return_stats(orbit: Orbit, p) -> ReturnStats:
    """Return times and the occupation-frequency constant for the orbit of 0.

    For p >= 1/2 the constant is 0 and no returns are needed.  For p < 1/2
    the constant is min over 0 <= n <= min(sigma, r^(1/t_1)) of 1/d_n with
    d_0 = t_1 and d_n = min((t_1+1)/1, ..., (t_n+1)/n, t_{n+1}/(n+1)), the
    last term dropped when n equals the total number of returns.
    """
    p = as_exact(p)
    r = (1 - p) / p

    # total number of returns, when knowable
    if orbit.kind == FINITE:
        sigma = sum(orbit.deltas[1:])
    elif orbit.kind == EVENTUALLY_PERIODIC:
        per_cycle = sum(orbit.deltas[orbit.k0 : orbit.k0 + orbit.period])
        sigma = math.inf if per_cycle > 0 else sum(
            orbit.deltas[1 : orbit.k0 + orbit.period]
        )
    else:
        sigma = None

    if p >= ONE_HALF:
        t = _return_times(orbit, min(8, sigma) if isinstance(sigma, int) else 8) \
            if orbit.kind != APERIODIC else _observed_returns(orbit, 8)
        return ReturnStats(t, sigma, [], Fraction(0))

    t1_list = _return_times(orbit, 1) if orbit.kind != APERIODIC else _observed_returns(orbit, 1)
    if not t1_list:
        if orbit.kind == APERIODIC:
            # a truncated orbit with no observed return certifies nothing
            raise InsufficientOrbitError("no return observed in the truncated orbit")
        # finite or periodic orbit with literally no returns: the occupation
        # count never grows past 1, so the zero constant is valid
        return ReturnStats([], sigma, [], Fraction(0))
    t1 = t1_list[0]

    cap = float(r) ** (1.0 / t1)
    n_max = math.floor(cap)
    if sigma is not None and sigma is not math.inf:
        n_max = min(n_max, sigma)

    t = _return_times(orbit, n_max + 1)  # may raise InsufficientOrbitError
    d = [Fraction(t1)]
    for n in range(1, n_max + 1):
        terms = [Fraction(t[j - 1] + 1, j) for j in range(1, n + 1)]
        if not (sigma is not None and sigma is not math.inf and n == sigma):
            terms.append(Fraction(t[n], n + 1))
        d.append(min(terms))
    freq = min(1 / dn for dn in d)
    return ReturnStats(t, sigma, d, freq)


def _observed_returns(orbit: Orbit, count: int):
    """Return times visible in a truncated orbit, without the right to raise."""
    out = [k for k in range(1, len(orbit.deltas)) if orbit.deltas[k] == 1]
    return out[:count]


def recover_path(params: ModelParams, x_n, n: int):
    """Reconstruct [X_0, ..., X_n] and the innovations from X_n = x_n, on
    the event that the chain survived n steps.

    Only valid for a < 2/3 (at 2/3 the backward map is no longer injective
    on the surviving set).  Raises HoleError(k) when step^k(x_n) falls in
    the hole for some k < n, meaning x_n is not a reachable value of X_n
    for a surviving path.  Returns (path, innovations) with path[k] = X_k
    and innovations[k-1] = xi_k.
    """
    if as_exact(params.a) >= TWO_THIRDS:
        raise ValueError("path recovery needs a < 2/3; preimages are ambiguous at 2/3")
    back = [x_n]
    for k in range(n):
        nxt = backward_step(params, back[-1])
        if nxt is HOLE:
            raise HoleError(k)
        back.append(nxt)
    path = list(reversed(back))
    innovations = [-1 if path[j] < 1 else 1 for j in range(1, n + 1)]
    return path, innovations


def recover_path_unconditional(params: ModelParams, x_n, n: int):
    """Reconstruct the full-line past of the unkilled chain, for a < 1/2.

    Without killing, the stationary chain lives on [-ceiling, ceiling] and
    for a < 1/2 the backward map is g(x) = (x - sign)/a with the sign read
    off from x: +1 for x >= g_lo, -1 for x <= -g_lo, undefined on the open
    gap (-g_lo, g_lo) with g_lo = (1-2a)/(1-a).  Raises GapError(k) when an
    iterate with k < n falls in the gap.  Returns (path, innovations).
    """
    a = as_exact(params.a)
    if a >= ONE_HALF:
        raise ValueError("two-sided recovery needs a < 1/2")
    ceiling = params.ceiling
    g_lo = (1 - 2 * params.a) / (1 - params.a)
    if x_n < -ceiling or x_n > ceiling:
        raise OutOfDomainError(f"{x_n} outside [{-ceiling}, {ceiling}]")
    back = [x_n]
    for k in range(n):
        cur = back[-1]
        if -g_lo < cur < g_lo:
            raise GapError(k)
        back.append((cur - 1) / params.a if cur >= g_lo else (cur + 1) / params.a)
    path = list(reversed(back))
    innovations = [1 if path[j] >= g_lo else -1 for j in range(1, n + 1)]
    return path, innovations


@dataclass
class IntervalDecomposition:
    """The set of points whose first k backward steps avoid the hole,
    written as a finite union of closed intervals.

    On each interval the k-th iterate of the backward map is affine
    increasing with slope a^(-k), sending the right endpoint to the ceiling.
    left_endpoints and right_endpoints are the sorted distinct interval
    ends.  At a = 2/3 the honest intervals are half-open [lo, hi) except the
    rightmost (the branch convention at x = 1 jumps); the closed
    representation is kept and callers who iterate endpoints should stay
    clear of them.
    """

    k: int
    intervals: list
    left_endpoints: list
    right_endpoints: list

    def covers(self, x) -> bool:
        return any(lo <= x <= hi for lo, hi in self.intervals)


def survivor_intervals(params: ModelParams, k: int) -> IntervalDecomposition:
    """Exact interval decomposition of {x : step^j(x) avoids the hole for
    all j < k}, for 1/2 < a <= 2/3 and k >= 1."""
    a = as_exact(params.a)
    if not ONE_HALF < a <= TWO_THIRDS:
        raise ValueError("interval decomposition needs 1/2 < a <= 2/3")
    if k < 1:
        raise ValueError("k must be >= 1")
    hole_lo = (2 * a - 1) / (1 - a)
    ceiling = 1 / (1 - a)
    one = Fraction(1)

    # (lo, hi, image of lo under the level-th iterate); hi always maps to ceiling
    cells = [(Fraction(0), hole_lo, 1 / a), (one, ceiling, Fraction(0))]
    apow = a
    for _level in range(1, k):
        nxt = []
        for lo, hi, img in cells:
            if img >= 1:
                nxt.append((lo, hi, (img - 1) / a))
            elif img > hole_lo:
                z = lo + (1 - img) * apow
                nxt.append((z, hi, Fraction(0)))
            else:
                z_keep = lo + (hole_lo - img) * apow
                z_cut = lo + (1 - img) * apow
                nxt.append((lo, z_keep, (img + 1) / a))
                nxt.append((z_cut, hi, Fraction(0)))
        cells = nxt
        apow *= a

    cells.sort(key=lambda cell: cell[0])
    intervals = [(lo, hi) for lo, hi, _ in cells]
    lefts = sorted({lo for lo, _ in intervals})
    rights = sorted({hi for _, hi in intervals})
    return IntervalDecomposition(k, intervals, lefts, rights)
