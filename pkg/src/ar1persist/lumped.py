"""Finite-state reduction of the killed chain on orbit level sets.

When the backward orbit of 0 has finitely many distinct points Y_0..Y_m
(finite or eventually periodic classification), the function
x -> largest orbit point <= x lumps the killed chain into a finite Markov
chain: state 0 is the graveyard, state k+1 stands for the level set of Y_k.
From state k+1 the chain moves with probability p to the state of
a*Y_k + 1 and with probability q to the state of a*Y_k - 1 (graveyard when
that is negative).  The transient block's Perron root is the same decay
rate the spectral module solves for, which makes the reduction a strong
independent cross-check, and matrix powers of the exact block give exact
finite-horizon survival probabilities.

The jump operator below is the same object in different coordinates: the
killed transition operator acting on the jump weights of pure-jump
functions V(x) = sum of u_k over orbit points Y_k <= x.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import ModelParams, NumericFailure, as_exact
from .dynamics import APERIODIC, EVENTUALLY_PERIODIC, FINITE, Orbit, orbit_of_zero


class InfiniteOrbitError(ValueError):
    """The orbit has no known finite set of distinct points."""


class NoConvergenceError(NumericFailure):
    """Power iteration failed to reach the tolerance within max_iter."""


@dataclass
class LumpedChain:
    """Finite lumped chain.  matrix is row-stochastic with the graveyard at
    index 0; matrix_exact carries the same entries as Fractions whenever p
    was exact.  labels maps state index to a short description."""

    params: ModelParams
    orbit: Orbit
    dim: int
    matrix: np.ndarray
    matrix_exact: list | None
    labels: dict

    @property
    def transient_block(self) -> np.ndarray:
        """The block on the live states 1..dim-1 (row 0 and column 0 cut)."""
        return self.matrix[1:, 1:]

    def to_json(self) -> dict:
        return {
            "params": self.params.to_json(),
            "dim": self.dim,
            "labels": {str(k): v for k, v in self.labels.items()},
            "matrix": [[float(x) for x in row] for row in self.matrix],
            "exact": self.matrix_exact is not None,
        }


def build_lumped(params: ModelParams, orbit: Orbit | None = None) -> LumpedChain:
    """Build the lumped chain from the (exact) orbit of 0.

    The orbit must be finite or eventually periodic, with exact rational
    points: float points cannot place a*Y_k - 1 in the right level set when
    the true target sits on a level boundary (it always does: the orbit
    points step onto each other), so floats are refused outright.
    """
    if orbit is None:
        orbit = orbit_of_zero(params)
    if orbit.kind == APERIODIC:
        raise InfiniteOrbitError(
            "orbit has no finite classification; the lumped chain would be infinite"
        )
    pts = orbit.distinct_points
    if not all(isinstance(pt, (Fraction, int)) for pt in pts):
        raise TypeError("lumped construction needs exact rational orbit points")
    a = as_exact(params.a)
    p_exact = isinstance(params.p, (Fraction, int))
    p = as_exact(params.p) if p_exact else params.p
    q = 1 - p

    order = sorted(range(len(pts)), key=lambda j: pts[j])
    sorted_pts = [pts[j] for j in order]

    def state_of(y):
        if y < 0:
            return 0
        # rightmost sorted point <= y, reported by its orbit index
        lo, hi = 0, len(sorted_pts) - 1
        best = 0
        while lo <= hi:
            mid = (lo + hi) // 2
            if sorted_pts[mid] <= y:
                best = mid
                lo = mid + 1
            else:
                hi = mid - 1
        return 1 + order[best]

    dim = len(pts) + 1
    zero = Fraction(0) if p_exact else 0.0
    exact = [[zero for _ in range(dim)] for _ in range(dim)]
    exact[0][0] = Fraction(1) if p_exact else 1.0
    for k, y in enumerate(pts):
        up = a * y + 1
        down = a * y - 1
        exact[k + 1][state_of(up)] += p
        exact[k + 1][state_of(down)] += q

    matrix = np.array([[float(x) for x in row] for row in exact])
    labels = {0: "dead"}
    for k, y in enumerate(pts):
        labels[k + 1] = f"level set of orbit point {k} ({float(y):.6g})"
    return LumpedChain(
        params=params, orbit=orbit, dim=dim, matrix=matrix,
        matrix_exact=exact if p_exact else None, labels=labels,
    )


def leading_eigen(block: np.ndarray, tol: float = 1e-13,
                  max_iter: int = 200000):
    """Perron root and eigenvectors of a nonnegative block by power
    iteration from the all-ones vector.

    Returns (rate, right, left, iterations).  Right and left vectors are
    l1-normalized.  Convergence is judged on the eigen residual
    ||block u - rate u||_1 < tol, not on successive rate estimates (norm
    ratios can repeat by coincidence long before the vector settles).
    Raises NoConvergenceError within max_iter; this genuinely happens when
    the Perron root is defective, e.g. the a = 1/2 block, where power
    iteration converges like 1/n."""
    block = np.asarray(block, dtype=np.float64)

    def iterate(mat):
        u = np.ones(mat.shape[0])
        u /= u.sum()
        for it in range(1, max_iter + 1):
            w = mat @ u
            norm = w.sum()
            if norm <= 0:
                raise NoConvergenceError("block lost all mass; no positive root")
            if float(np.sum(np.abs(w - norm * u))) < tol:
                return norm, u, it
            u = w / norm
        raise NoConvergenceError(
            f"power iteration did not settle within {max_iter} iterations"
        )

    lam, right, it_r = iterate(block)
    _, left, it_l = iterate(block.T)
    return lam, right, left, it_r + it_l


def power_convergence_probe(block: np.ndarray, n_steps: int = 60,
                            u0: np.ndarray | None = None):
    """Deviation of the powered block from its rank-one limit along a
    starting vector: dev[n] = l1 distance between block^n u / rate^n and
    its limit.  Returns (devs, fitted geometric factor) where the factor is
    fit on the tail of log dev (nan when deviations hit float noise too
    early to fit)."""
    block = np.asarray(block, dtype=np.float64)
    lam, right, left, _ = leading_eigen(block)
    u = np.ones(block.shape[0]) if u0 is None else np.asarray(u0, dtype=np.float64)
    limit = right * (left @ u) / (left @ right)
    devs = []
    cur = u.copy()
    for _ in range(n_steps):
        devs.append(float(np.sum(np.abs(cur - limit))))
        cur = block @ cur / lam
    devs = np.array(devs)
    # keep clear of the float-noise floor the deviations bottom out at
    floor = max(30.0 * devs.min(), 1e-13)
    usable = devs > floor
    if usable.sum() < 4:
        return devs, math.nan
    idx = np.flatnonzero(usable)
    tail = idx[len(idx) // 2:]
    slope = np.polyfit(tail, np.log(devs[tail]), 1)[0]
    return devs, float(math.exp(slope))


@dataclass
class JumpOperator:
    """Killed transition operator in jump coordinates.

    Acts on vectors u indexed by the distinct orbit points:
    (Au)_0 = p * sum_k delta_k u_k, (Au)_k = c_{k-1} u_{k-1} where
    c_k = q if delta_k = 1 else p.  With a cycle (wrap_k0 set) the folded
    operator adds c_m u_m at index wrap_k0, m the last index.  Its leading
    eigenvalue is again the decay rate.
    """

    p: float
    deltas: list
    multipliers: list
    wrap_k0: int | None = None

    @classmethod
    def from_orbit(cls, orbit: Orbit, p, folded: bool = True):
        if orbit.kind == APERIODIC:
            raise InfiniteOrbitError("jump operator needs a finite point set")
        m = len(orbit.distinct_points)
        deltas = orbit.deltas[:m]
        pf = float(p)
        mult = [(1.0 - pf) if d == 1 else pf for d in deltas]
        wrap = orbit.k0 if (folded and orbit.kind == EVENTUALLY_PERIODIC) else None
        return cls(p=pf, deltas=list(deltas), multipliers=mult, wrap_k0=wrap)

    @property
    def dim(self) -> int:
        return len(self.deltas)

    def apply(self, u):
        u = np.asarray(u, dtype=np.float64)
        out = np.zeros_like(u)
        d = np.asarray(self.deltas, dtype=np.float64)
        out[0] = self.p * float(np.dot(d, u))
        out[1:] = np.asarray(self.multipliers[:-1]) * u[:-1]
        if self.wrap_k0 is not None:
            out[self.wrap_k0] += self.multipliers[-1] * u[-1]
        return out

    def as_matrix(self) -> np.ndarray:
        m = self.dim
        mat = np.zeros((m, m))
        for j in range(m):
            mat[0, j] = self.p * self.deltas[j]
        for k in range(1, m):
            mat[k, k - 1] += self.multipliers[k - 1]
        if self.wrap_k0 is not None:
            mat[self.wrap_k0, m - 1] += self.multipliers[-1]
        return mat


def jump_right_eigenvector(orbit: Orbit, lam: float, p) -> np.ndarray:
    """Closed-form right eigenvector of the (folded) jump operator at the
    decay rate: w_k = (p/lam)^k (q/p)^{L_k}, cycle entries divided by
    1 - cycle ratio."""
    pf = float(p)
    r = (1.0 - pf) / pf
    s = pf / lam
    m = len(orbit.distinct_points)
    occ = orbit.occ
    w = np.array([s**k * r ** occ[k] for k in range(m)])
    if orbit.kind == EVENTUALLY_PERIODIC:
        k0, per = orbit.k0, orbit.period
        rho = s**per * r ** (occ[k0 + per] - occ[k0])
        w[k0:] /= 1.0 - rho
    return w


def jump_left_eigenvector(orbit: Orbit, lam: float, p) -> np.ndarray:
    """Closed-form left eigenvector of the (folded) jump operator at the
    decay rate, normalized to first entry 1.

    Solves the backward recursion v*_j = (p*delta_j*v*_0 + c_j v*_{j+1})/lam
    with the cycle wrap feeding c_m v*_m back into index k0."""
    pf = float(p)
    lam = float(lam)
    m = len(orbit.distinct_points)
    deltas = orbit.deltas[:m]
    mult = [(1.0 - pf) if d == 1 else pf for d in deltas]
    last = m - 1
    out = np.zeros(m)
    out[0] = 1.0

    if orbit.kind == FINITE:
        nxt = pf * deltas[last] / lam
        out[last] = nxt
        for j in range(last - 1, 0, -1):
            nxt = (pf * deltas[j] + mult[j] * nxt) / lam
            out[j] = nxt
        return out

    k0 = orbit.k0
    if k0 == 0:
        # the wrap source is v*_0 itself, already normalized to 1
        nxt = (pf * deltas[last] + mult[last] * 1.0) / lam
        out[last] = nxt
        for j in range(last - 1, 0, -1):
            nxt = (pf * deltas[j] + mult[j] * nxt) / lam
            out[j] = nxt
        return out

    # express v*_j = alpha_j + beta_j * x for j in [k0, last], x = v*_{k0}
    alpha, beta = pf * deltas[last] / lam, mult[last] / lam
    coeffs = {last: (alpha, beta)}
    for j in range(last - 1, k0 - 1, -1):
        alpha, beta = (pf * deltas[j] + mult[j] * alpha) / lam, mult[j] * beta / lam
        coeffs[j] = (alpha, beta)
    a0, b0 = coeffs[k0]
    x = a0 / (1.0 - b0)
    for j in range(k0, m):
        aj, bj = coeffs[j]
        out[j] = aj + bj * x
    nxt = out[k0]
    for j in range(k0 - 1, 0, -1):
        nxt = (pf * deltas[j] + mult[j] * nxt) / lam
        out[j] = nxt
    return out


def persistence_via_matrix(chain: LumpedChain, n: int):
    """Exact (or float) probability that the chain started at 0 is still
    alive after n steps, via the n-th power of the transient block."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    if chain.matrix_exact is not None:
        m = chain.dim - 1
        block = [[chain.matrix_exact[i + 1][j + 1] for j in range(m)]
                 for i in range(m)]
        v = [Fraction(1)] * m
        for _ in range(n):
            v = [sum(block[i][j] * v[j] for j in range(m)) for i in range(m)]
        return v[0]
    block = chain.transient_block
    v = np.ones(chain.dim - 1)
    for _ in range(n):
        v = block @ v
    return float(v[0])
