"""Asymptotic spectral-shape analysis of block-accumulate ensembles.

Everything here is in nats per output bit.  The outer-code exponent is the
entropy of the best per-weight composition of outer codewords subject to a
mean-weight constraint; the constrained entropy maximization is solved in
closed form by exponential tilting (p_i proportional to A_i x^i) plus a 1-D
monotone root find for the tilt, which is exact and robust for code lengths
up to a few hundred.  The two accumulator stages contribute the Stirling
exponent of the accumulate-code IOWE, and the full spectral shape is the
max-form composition of the three exponents minus the two interleaver
entropy terms; the 2-D maximization runs a coarse grid over the feasible
region followed by a derivative-free polish from the best grid points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize
from scipy.special import logsumexp

from .enumerator import EnsembleSpec
from .linear_code import BlockCodeSpec, weight_enumerator

__all__ = [
    "entropy_nats",
    "entropy_bits",
    "acc_asym_iowe",
    "TiltedComposition",
    "outer_asym_we",
    "ShapePoint",
    "SpectralCurve",
    "spectral_shape",
    "spectral_curve",
    "AnalysisReport",
    "delta_min",
    "gvb_delta",
    "random_code_shape",
]

LN2 = math.log(2.0)


def entropy_nats(p):
    """Binary entropy -p ln p - (1-p) ln(1-p), with 0 ln 0 = 0."""
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)):
        raise ValueError("entropy argument outside [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = -np.where(arr > 0, arr * np.log(arr), 0.0)
        q = 1.0 - arr
        out -= np.where(q > 0, q * np.log(q), 0.0)
    if np.ndim(p) == 0:
        return float(out)
    return out


def entropy_bits(p):
    """Binary entropy in bits (base-2 logarithms)."""
    out = entropy_nats(p) / LN2
    return float(out) if np.ndim(p) == 0 else out


def acc_asym_iowe(alpha, beta):
    """Exponent of the accumulate-code IOWE at normalized weights (alpha, beta).

    (1-b) H(a / (2(1-b))) + b H(a / (2b)), each term zero when its prefactor
    is zero; -inf where an entropy argument would exceed 1 (zero counting
    exponent), so optimizers can probe the boundary freely.
    """
    a = np.asarray(alpha, dtype=float)
    b = np.asarray(beta, dtype=float)
    if np.any((a < 0) | (a > 1)) or np.any((b < 0) | (b > 1)):
        raise ValueError("normalized weights must lie in [0, 1]")
    a, b = np.broadcast_arrays(a, b)
    feasible = a <= 2.0 * np.minimum(b, 1.0 - b) + 1e-15

    def _term(pref, aa):
        with np.errstate(divide="ignore", invalid="ignore"):
            x = np.where(pref > 0, aa / (2.0 * np.where(pref > 0, pref, 1.0)), 0.0)
            x = np.clip(x, 0.0, 1.0)
            h = -np.where(x > 0, x * np.log(x), 0.0) - np.where(x < 1, (1 - x) * np.log(1 - x), 0.0)
        return np.where(pref > 0, pref * h, 0.0)

    out = np.where(feasible, _term(1.0 - b, a) + _term(b, a), -np.inf)
    if np.ndim(alpha) == 0 and np.ndim(beta) == 0:
        return float(out)
    return out


# ---------------------------------------------------------------------------
# Outer-code exponent by exponential tilting


@dataclass(frozen=True)
class TiltedComposition:
    """Optimal per-weight composition of outer codewords at a mean weight.

    probabilities[i] is the fraction of constituent codewords with weight i;
    it is proportional to A_i * tilt^i and supported only on weights with
    A_i > 0.  objective_nats is the resulting exponent per output bit.
    """

    n: int
    support: tuple[int, ...]
    probabilities: np.ndarray
    tilt: float
    objective_nats: float


class _OuterProfile:
    """Cached per-code data for the tilted-composition solver."""

    def __init__(self, code: BlockCodeSpec):
        spectrum = weight_enumerator(code, "auto")
        support = [i for i, c in enumerate(spectrum.counts) if c > 0]
        self.n = code.n
        self.weights = np.array(support, dtype=float)
        self.log_counts = np.array([math.log(spectrum.counts[i]) for i in support])
        self.w_max = support[-1]
        self.max_frac = self.w_max / code.n

    def _mean_weight(self, t: float) -> float:
        z = self.log_counts + self.weights * t
        z -= z.max()
        w = np.exp(z)
        return float((self.weights * w).sum() / w.sum())

    def solve(self, beta0: float) -> tuple[float, float, np.ndarray]:
        """Return (objective nats/bit, ln tilt, support probabilities)."""
        target = self.n * beta0
        probs = np.zeros(len(self.weights))
        if target <= 0.0:
            probs[0] = 1.0
            return 0.0, -np.inf, probs
        if target >= self.w_max:
            probs[-1] = 1.0
            return self.log_counts[-1] / self.n, np.inf, probs
        lo, hi = -1.0, 1.0
        while self._mean_weight(lo) > target:
            lo *= 2.0
            if lo < -1e4:
                raise RuntimeError("failed to bracket the tilt from below")
        while self._mean_weight(hi) < target:
            hi *= 2.0
            if hi > 1e4:
                raise RuntimeError("failed to bracket the tilt from above")
        t = brentq(lambda x: self._mean_weight(x) - target, lo, hi, xtol=1e-13, rtol=8.9e-16)
        z = self.log_counts + self.weights * t
        log_z = logsumexp(z)
        value = (log_z - target * t) / self.n
        probs = np.exp(z - log_z)
        return float(value), float(t), probs

    def value(self, beta0: float) -> float:
        if beta0 < 0.0 or beta0 > self.max_frac:
            return -np.inf
        return self.solve(beta0)[0]


_PROFILE_CACHE: dict[tuple, _OuterProfile] = {}


def _profile_for(code: BlockCodeSpec) -> _OuterProfile:
    key = code.cache_key()
    prof = _PROFILE_CACHE.get(key)
    if prof is None:
        if len(_PROFILE_CACHE) > 32:
            _PROFILE_CACHE.clear()
        prof = _PROFILE_CACHE[key] = _OuterProfile(code)
    return prof


def outer_asym_we(outer: BlockCodeSpec, beta0: float) -> tuple[float, TiltedComposition]:
    """Outer-code exponent at normalized weight beta0, with its composition.

    Solves max over compositions P of (H(P) + sum_i p_i ln A_i) / n subject
    to mean weight n * beta0, via the closed-form tilted family.
    """
    prof = _profile_for(outer)
    if beta0 < 0.0 or beta0 > prof.max_frac + 1e-12:
        raise ValueError(f"beta0 = {beta0} outside achievable range [0, {prof.max_frac}]")
    beta0 = min(beta0, prof.max_frac)
    value, t, support_probs = prof.solve(beta0)
    probs = np.zeros(prof.n + 1)
    probs[prof.weights.astype(int)] = support_probs
    comp = TiltedComposition(
        n=prof.n,
        support=tuple(int(w) for w in prof.weights),
        probabilities=probs,
        tilt=math.exp(t) if np.isfinite(t) else (0.0 if t < 0 else np.inf),
        objective_nats=value,
    )
    return value, comp


# ---------------------------------------------------------------------------
# Spectral shape


class ShapePoint(NamedTuple):
    delta: float
    r_nats: float
    beta0: float
    beta1: float


@dataclass(frozen=True)
class SpectralCurve:
    """Sampled spectral-shape values (delta, r, argmax beta0, argmax beta1)."""

    ensemble: str
    samples: tuple[ShapePoint, ...]


def _entropy_clipped(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        return -np.where(x > 0, x * np.log(x), 0.0) - np.where(x < 1, (1 - x) * np.log(1 - x), 0.0)


def _shape_eval(prof: _OuterProfile, stages: int, delta: float,
                grid_points: int, refine: bool, multistart: int,
                xatol: float) -> ShapePoint:
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta = {delta} outside [0, 1]")
    b1_max = min(2.0 * delta, 2.0 * (1.0 - delta), 1.0)

    if stages == 1:
        b0_cap = min(b1_max, prof.max_frac)
        if b0_cap <= 0.0:
            return ShapePoint(delta, 0.0, 0.0, 0.0)
        grid = np.linspace(0.0, b0_cap, grid_points)
        vals = np.array([prof.value(b) for b in grid])
        vals -= _entropy_clipped(grid)
        vals += acc_asym_iowe(grid, np.full_like(grid, delta))

        def objective(x):
            b0 = x[0]
            if b0 < 0.0 or b0 > b0_cap:
                return np.inf
            return -(prof.value(b0) - float(entropy_nats(b0)) + acc_asym_iowe(b0, delta))

        best_idx = np.argsort(vals)[::-1][:multistart]
        best_val = float(vals.max())
        best_b0 = float(grid[int(np.argmax(vals))])
        if refine:
            step = max(b0_cap / (grid_points - 1), 1e-9)
            for idx in best_idx:
                x0 = float(grid[idx])
                probe = x0 + 0.5 * step if x0 + 0.5 * step <= b0_cap else x0 - 0.5 * step
                res = minimize(objective, [x0], method="Nelder-Mead",
                               options={"xatol": xatol, "fatol": 1e-13, "maxiter": 400,
                                        "initial_simplex": [[x0], [probe]]})
                if np.isfinite(res.fun) and -res.fun > best_val:
                    best_val, best_b0 = -float(res.fun), float(res.x[0])
        return ShapePoint(delta, max(best_val, 0.0), best_b0, 0.0)

    # stages == 2
    if b1_max <= 0.0:
        return ShapePoint(delta, 0.0, 0.0, 0.0)
    b0_max = min(1.0, prof.max_frac, 2.0 * min(b1_max, 0.5))
    b0_grid = np.linspace(0.0, b0_max, grid_points)
    b1_grid = np.linspace(0.0, b1_max, grid_points)
    u = np.array([prof.value(b) for b in b0_grid]) - _entropy_clipped(b0_grid)
    v = acc_asym_iowe(b1_grid, np.full_like(b1_grid, delta)) - _entropy_clipped(b1_grid)
    w = acc_asym_iowe(b0_grid[:, None], b1_grid[None, :])
    total = u[:, None] + w + v[None, :]

    flat_order = np.argsort(total, axis=None)[::-1][:multistart]
    i_best, j_best = np.unravel_index(int(flat_order[0]), total.shape)
    best_val = float(total[i_best, j_best])
    best_b0, best_b1 = float(b0_grid[i_best]), float(b1_grid[j_best])

    if refine:
        def objective(x):
            b0, b1 = x
            if not (0.0 <= b1 <= b1_max and 0.0 <= b0 <= min(1.0, prof.max_frac)):
                return np.inf
            val = (prof.value(b0) - float(entropy_nats(b0))
                   + acc_asym_iowe(b0, b1)
                   + acc_asym_iowe(b1, delta) - float(entropy_nats(b1)))
            return np.inf if val == -np.inf else -val

        db0 = max(b0_max / (grid_points - 1), 1e-9)
        db1 = max(b1_max / (grid_points - 1), 1e-9)
        for flat in flat_order:
            i, j = np.unravel_index(int(flat), total.shape)
            x0 = np.array([b0_grid[i], b1_grid[j]])
            p0 = x0[0] + 0.5 * db0 if x0[0] + 0.5 * db0 <= b0_max else x0[0] - 0.5 * db0
            p1 = x0[1] + 0.5 * db1 if x0[1] + 0.5 * db1 <= b1_max else x0[1] - 0.5 * db1
            simplex = np.array([x0, [p0, x0[1]], [x0[0], p1]])
            res = minimize(objective, x0, method="Nelder-Mead",
                           options={"xatol": xatol, "fatol": 1e-13, "maxiter": 600,
                                    "initial_simplex": simplex})
            if np.isfinite(res.fun) and -res.fun > best_val:
                best_val = -float(res.fun)
                best_b0, best_b1 = float(res.x[0]), float(res.x[1])

    return ShapePoint(delta, max(best_val, 0.0), best_b0, best_b1)


def spectral_shape(ens: EnsembleSpec, delta: float, *, grid_points: int = 401,
                   refine: bool = True, multistart: int = 5,
                   xatol: float = 1e-7) -> ShapePoint:
    """Spectral shape r(delta) with its maximizing stage weights.

    Grid step defaults to 1/400 per axis over the feasible region, followed
    by Nelder-Mead polish from the best ``multistart`` grid points.
    """
    prof = _profile_for(ens.outer)
    return _shape_eval(prof, ens.stages, delta, grid_points, refine, multistart, xatol)


def spectral_curve(ens: EnsembleSpec, deltas, **kwargs) -> SpectralCurve:
    """Sample the spectral shape on a grid of normalized weights."""
    pts = tuple(spectral_shape(ens, float(d), **kwargs) for d in deltas)
    return SpectralCurve(ens.label, pts)


# ---------------------------------------------------------------------------
# Growth rate and Gilbert-Varshamov references


@dataclass(frozen=True)
class AnalysisReport:
    ensemble: str
    delta_min: float
    delta_gv: float
    epsilon: float
    resolution: float
    diagnostics: dict


def gvb_delta(rate: float) -> float:
    """Root delta <= 1/2 of H2(delta) = 1 - rate (normalized GV distance)."""
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must be in (0, 1), got {rate}")
    target = 1.0 - rate
    return float(brentq(lambda d: entropy_bits(d) - target, 1e-15, 0.5, xtol=1e-12))


def random_code_shape(rate: float, delta: float) -> float:
    """Spectral shape H_e(delta) - (1 - R) ln 2 of the random linear ensemble."""
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must be in (0, 1), got {rate}")
    if not 0.0 <= delta <= 1.0:
        raise ValueError(f"delta must be in [0, 1], got {delta}")
    return float(entropy_nats(delta)) - (1.0 - rate) * LN2


def delta_min(ens: EnsembleSpec, epsilon: float = 1e-6, resolution: float = 1e-5,
              scan_step: float = 0.005, scan_stop: float = 0.5,
              **shape_kwargs) -> AnalysisReport:
    """Smallest delta with r(delta) > epsilon, by coarse scan then bisection.

    The shape is zero (a flat plateau, not negative) below the growth rate,
    so detection needs a strictly positive threshold; the sensitivity of the
    estimate to the threshold is reported in the diagnostics.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    prof = _profile_for(ens.outer)
    evaluations: list[tuple[float, float]] = []

    def r_of(d: float) -> float:
        val = _shape_eval(prof, ens.stages, d,
                          shape_kwargs.get("grid_points", 401),
                          shape_kwargs.get("refine", True),
                          shape_kwargs.get("multistart", 5),
                          shape_kwargs.get("xatol", 1e-7)).r_nats
        evaluations.append((d, val))
        return val

    hit = None
    prev = 0.0
    d = scan_step
    while d <= scan_stop + 1e-12:
        if r_of(d) > epsilon:
            hit = d
            break
        prev = d
        d += scan_step
    if hit is None:
        raise ValueError("no positive growth detected: r(delta) <= epsilon "
                         f"on (0, {scan_stop}] at epsilon = {epsilon}")

    lo, hi = prev, hit  # r(lo) <= epsilon (r(0) = 0 by definition), r(hi) > epsilon
    r_lo = 0.0 if lo == 0.0 else next(v for x, v in evaluations if x == lo)
    r_hi = next(v for x, v in evaluations if x == hit)
    while hi - lo > resolution:
        mid = 0.5 * (lo + hi)
        if r_of(mid) > epsilon:
            hi, r_hi = mid, evaluations[-1][1]
        else:
            lo, r_lo = mid, evaluations[-1][1]
    estimate = 0.5 * (lo + hi)

    # Threshold sensitivity from the local slope at the bracket.
    slope = (r_hi - r_lo) / max(hi - lo, 1e-300)
    sensitivity = {}
    for eps_alt in (1e-7, 1e-5):
        shift = (eps_alt - epsilon) / slope if slope > 0 else 0.0
        sensitivity[f"{eps_alt:.0e}"] = estimate + shift

    diagnostics = {
        "bracket": (lo, hi),
        "r_at_bracket": (r_lo, r_hi),
        "evaluations": len(evaluations),
        "scan_step": scan_step,
        "epsilon_sensitivity": sensitivity,
    }
    return AnalysisReport(ens.label, float(estimate), gvb_delta(ens.R),
                          epsilon, resolution, diagnostics)
