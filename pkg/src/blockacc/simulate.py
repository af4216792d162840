"""Monte-Carlo layer: BPSK/AWGN channel, BER curves, EXIT analysis.

Reproducibility contract: every frame draws its randomness from a PRNG
stream named by (master seed, purpose, point index, frame index), and a run
stops after the first frame index at which the stop rule fires when frames
are scanned in order.  Results are therefore bit-identical for any worker
count; workers only change how much speculative work past the stop point is
thrown away.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq
from scipy.special import erfc

from .codec import CodecSpec, _accumulator_siso_batch, _block_siso_batch, \
    _encode_stages, _turbo_decode_batch
from .enumerator import EnsembleSpec
from .linear_code import BlockCodeSpec, encode_block
from .rng import derive_rng

__all__ = [
    "ChannelSpec",
    "bpsk_awgn_llrs",
    "mi_estimate",
    "j_function",
    "j_inverse",
    "consistent_gaussian_llrs",
    "ExitCurve",
    "exit_curves",
    "threshold_search",
    "BerPoint",
    "SimReport",
    "ber_curve",
    "uncoded_ber_curve",
    "theoretical_uncoded_ber",
    "bpsk_capacity_threshold",
    "wilson_interval",
    "ensemble_near_block_length",
]

LN2 = math.log(2.0)


@dataclass(frozen=True)
class ChannelSpec:
    """BPSK over AWGN at a given Eb/N0 for a given code rate."""

    ebn0_db: float
    rate: float

    def __post_init__(self):
        if not 0.0 < self.rate <= 1.0:
            raise ValueError(f"rate must be in (0, 1], got {self.rate}")

    @property
    def sigma2(self) -> float:
        return 1.0 / (2.0 * self.rate * 10.0 ** (self.ebn0_db / 10.0))

    @property
    def llr_scale(self) -> float:
        return 2.0 / self.sigma2


def bpsk_awgn_llrs(bits, channel: ChannelSpec, rng: np.random.Generator) -> np.ndarray:
    """Transmit bits as +/-1 (0 -> +1), add noise, return channel LLRs 2y/sigma^2."""
    b = np.asarray(bits, dtype=np.uint8)
    symbols = 1.0 - 2.0 * b
    y = symbols + rng.normal(0.0, math.sqrt(channel.sigma2), size=b.shape)
    return channel.llr_scale * y


def mi_estimate(llrs, true_bits) -> float:
    """Time-average mutual information of LLRs against the true bits.

    I = 1 - mean log2(1 + exp(-L~)) with L~ re-signed so the true bit is
    favored when positive; clipped into [0, 1].
    """
    l = np.asarray(llrs, dtype=float).ravel()
    b = np.asarray(true_bits, dtype=np.uint8).ravel()
    if l.size == 0:
        raise ValueError("mi_estimate needs at least one sample")
    if l.size != b.size:
        raise ValueError("LLR and bit arrays must have equal length")
    resigned = np.where(b == 0, l, -l)
    loss = np.logaddexp(0.0, -resigned) / LN2
    return float(np.clip(1.0 - loss.mean(), 0.0, 1.0))


# ---------------------------------------------------------------------------
# The J-function (mutual information of a consistent Gaussian LLR)


def j_function(sigma_llr: float) -> float:
    """I(sigma): MI of an LLR ~ N(sigma^2/2, sigma^2) toward its bit."""
    if sigma_llr < 0:
        raise ValueError("sigma must be >= 0")
    if sigma_llr == 0.0:
        return 0.0
    mu = 0.5 * sigma_llr * sigma_llr

    def integrand(x):
        pdf = math.exp(-0.5 * ((x - mu) / sigma_llr) ** 2) / (sigma_llr * math.sqrt(2 * math.pi))
        return pdf * np.logaddexp(0.0, -x) / LN2

    loss, _ = quad(integrand, mu - 12 * sigma_llr, mu + 12 * sigma_llr,
                   epsabs=1e-10, epsrel=1e-10, limit=200)
    return float(np.clip(1.0 - loss, 0.0, 1.0))


def j_inverse(mi: float) -> float:
    """Inverse of j_function on [0, 1)."""
    if not 0.0 <= mi < 1.0:
        raise ValueError(f"mutual information must be in [0, 1), got {mi}")
    if mi == 0.0:
        return 0.0
    return float(brentq(lambda s: j_function(s) - mi, 1e-9, 100.0, xtol=1e-9))


def consistent_gaussian_llrs(bits, sigma_llr: float, rng: np.random.Generator) -> np.ndarray:
    """Sample LLRs ~ +/-N(sigma^2/2, sigma^2), signed by the true bits."""
    b = np.asarray(bits, dtype=np.uint8)
    raw = rng.normal(0.5 * sigma_llr * sigma_llr, sigma_llr, size=b.shape)
    return np.where(b == 0, raw, -raw)


# ---------------------------------------------------------------------------
# EXIT curves


@dataclass(frozen=True)
class ExitCurve:
    """Extrinsic-vs-a-priori mutual information samples for one component."""

    component: str
    i_a: np.ndarray
    i_e: np.ndarray
    ebn0_db: float | None = None


def _outer_exit_points(code: BlockCodeSpec, ia_grid, blocks_per_point: int,
                       seed: int) -> np.ndarray:
    """Outer-code transfer: Gaussian a-priori on codeword bits -> extrinsic MI."""
    ia = np.asarray(ia_grid, dtype=float)
    sigmas = np.array([j_inverse(x) for x in ia])
    out = np.empty(len(ia))
    for g, sigma in enumerate(sigmas):
        rng = derive_rng(seed, 0xE0, g)
        msgs = rng.integers(0, 2, size=(blocks_per_point, code.k), dtype=np.uint8)
        cws = encode_block(code, msgs)
        ap = consistent_gaussian_llrs(cws, sigma, rng)
        ext, _ = _block_siso_batch(code, ap)
        out[g] = mi_estimate(ext, cws)
    return out


def _inner_exit_points(codecs: list[CodecSpec], ebn0_db: float, ia_grid,
                       activations: int, seed: int) -> np.ndarray:
    """Inner super-decoder transfer at one Eb/N0.

    The chain (middle accumulator, interleaver, inner accumulator, channel)
    is treated as one decoder: channel LLRs at the given Eb/N0, external
    Gaussian a-priori on the middle accumulator's input bits, a fixed number
    of internal exchange activations, then the extrinsic MI on those input
    bits is measured.  For single-stage ensembles this reduces to one
    accumulator pass.
    """
    ens = codecs[0].ensemble
    ia = np.asarray(ia_grid, dtype=float)
    sigmas = np.array([j_inverse(x) for x in ia])
    n_frames = len(codecs)
    rows = len(ia) * n_frames
    channel = ChannelSpec(ebn0_db, ens.R)

    ch = np.empty((rows, ens.N))
    apri = np.empty((rows, ens.N))
    x1_bits = np.empty((rows, ens.N), dtype=np.uint8)
    perm1 = np.empty((rows, ens.N), dtype=np.int64)
    perm2 = np.empty((rows, ens.N), dtype=np.int64) if ens.stages == 2 else None
    inv2 = np.empty_like(perm2) if ens.stages == 2 else None

    for g in range(len(ia)):
        for f, codec in enumerate(codecs):
            r = g * n_frames + f
            rng = derive_rng(seed, 0xE1, g, f)
            msg = rng.integers(0, 2, size=ens.K, dtype=np.uint8)
            stages = _encode_stages(codec, msg[None, :])
            ch[r] = bpsk_awgn_llrs(stages["frame"][0], channel, rng)
            x1_bits[r] = stages["x1"][0]
            apri[r] = consistent_gaussian_llrs(x1_bits[r], sigmas[g], rng)
            perm1[r] = codec.pi1.permutation
            if ens.stages == 2:
                perm2[r] = codec.pi2.permutation
                inv2[r] = codec.pi2.inverse

    if ens.stages == 1:
        ext1_in, _ = _accumulator_siso_batch(ch, apri)
    else:
        e1_out = np.zeros((rows, ens.N))
        for _ in range(activations):
            ap2_in = np.take_along_axis(e1_out, perm2, axis=1)
            ext2_in, _ = _accumulator_siso_batch(ch, ap2_in)
            ap_y1 = np.take_along_axis(ext2_in, inv2, axis=1)
            ext1_in, e1_out = _accumulator_siso_batch(ap_y1, apri)

    out = np.empty(len(ia))
    for g in range(len(ia)):
        sl = slice(g * n_frames, (g + 1) * n_frames)
        out[g] = mi_estimate(ext1_in[sl], x1_bits[sl])
    return out


def exit_curves(codec: CodecSpec, ebn0_db: float, ia_grid, samples: int = 4,
                seed: int = 0, inner_activations: int = 10
                ) -> tuple[ExitCurve, ExitCurve]:
    """Measured EXIT transfer curves of the outer code and inner super-decoder.

    ``samples`` frames feed the inner measurement per grid point; the outer
    measurement uses the same number of frames' worth of code blocks.
    """
    ia = np.asarray(ia_grid, dtype=float)
    if np.any((ia < 0.0) | (ia >= 1.0)):
        raise ValueError("a-priori MI grid must lie in [0, 1)")
    ens = codec.ensemble
    outer_ie = _outer_exit_points(ens.outer, ia, samples * ens.L, seed)
    inner_ie = _inner_exit_points([codec] * samples, ebn0_db, ia,
                                  inner_activations, seed)
    return (ExitCurve("outer", ia, outer_ie),
            ExitCurve("inner-super-decoder", ia, inner_ie, ebn0_db=ebn0_db))


# Dense at both ends: the tunnel pinch for high-rate outers sits either in
# the low a-priori region (~0.1-0.2) or hard against I = 1.
DEFAULT_IA_GRID = np.concatenate([np.linspace(0.0, 0.35, 15),
                                  np.linspace(0.4, 0.9, 11),
                                  [0.93, 0.96, 0.98, 0.99, 0.995, 0.999]])
_OUTER_AO_GRID = np.concatenate([np.linspace(0.0, 0.9, 13),
                                 [0.94, 0.97, 0.985, 0.993, 0.997, 0.999, 0.9995, 0.9999]])


def ensemble_near_block_length(outer: BlockCodeSpec, stages: int,
                               target_n: int = 8184) -> EnsembleSpec:
    """The ensemble whose frame length is the multiple of n nearest target_n."""
    return EnsembleSpec(outer, max(1, round(target_n / outer.n)), stages)


def threshold_search(outer: BlockCodeSpec, stages: int, window: tuple[float, float],
                     step: float = 0.05, target_n: int = 8184, frames: int = 4,
                     ia_grid=None, inner_activations: int = 10,
                     outer_blocks: int = 20000, seed: int = 0,
                     activation_sensitivity: bool = False) -> dict:
    """Smallest Eb/N0 on the step grid with an open EXIT tunnel.

    The tunnel is open when the inner curve exceeds the inverse outer curve
    at every grid point.  Openness is monotone in Eb/N0, so the grid is
    bisected; the diagnostics record every probed point.  With
    ``activation_sensitivity`` the minimum tunnel margin at the returned
    threshold is re-measured with 5 and 20 inner activations.
    """
    ens = ensemble_near_block_length(outer, stages, target_n)
    codecs = [CodecSpec.from_seed(ens, seed, index=f) for f in range(frames)]
    ia = DEFAULT_IA_GRID if ia_grid is None else np.asarray(ia_grid, dtype=float)

    outer_ie = _outer_exit_points(outer, _OUTER_AO_GRID, outer_blocks, seed)
    # Monotone envelope plus the exact (1, 1) endpoint (any code with
    # d_min >= 2 pins every bit once the others are known).
    ao = np.concatenate([_OUTER_AO_GRID, [1.0]])
    ie = np.concatenate([np.maximum.accumulate(outer_ie), [1.0]])
    inverse_outer = np.interp(ia, ie, ao)

    grid = np.arange(window[0], window[1] + 0.5 * step, step)
    if len(grid) < 2:
        raise ValueError("threshold window must span at least one step")
    probes: list[tuple[float, bool]] = []

    def min_margin(ebn0: float, activations: int) -> float:
        inner_ie = _inner_exit_points(codecs, ebn0, ia, activations, seed)
        return float(np.min(inner_ie - inverse_outer))

    def tunnel_open(idx: int) -> bool:
        ebn0 = float(grid[idx])
        is_open = min_margin(ebn0, inner_activations) > 0.0
        probes.append((ebn0, is_open))
        return is_open

    lo, hi = 0, len(grid) - 1
    if not tunnel_open(hi):
        raise ValueError(f"no open tunnel anywhere in the window {window}")
    if tunnel_open(lo):
        threshold = float(grid[lo])
    else:
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if tunnel_open(mid):
                hi = mid
            else:
                lo = mid
        threshold = float(grid[hi])

    result = {
        "threshold_db": threshold,
        "ensemble": ens.label,
        "N": ens.N,
        "window_db": list(window),
        "step_db": step,
        "frames": frames,
        "inner_activations": inner_activations,
        "probes": probes,
    }
    if activation_sensitivity and stages == 2:
        result["margin_at_threshold_by_activations"] = {
            str(a): min_margin(threshold, a) for a in (5, inner_activations, 20)
        }
    return result


# ---------------------------------------------------------------------------
# BER simulation


@dataclass(frozen=True)
class BerPoint:
    ebn0_db: float
    frames: int
    bit_errors: int
    frame_errors: int
    ber: float
    fer: float
    iterations_mean: float
    ber_interval: tuple[float, float]
    fer_interval: tuple[float, float]

    def to_row(self) -> dict:
        return {
            "ebn0_db": self.ebn0_db,
            "frames": self.frames,
            "bit_errors": self.bit_errors,
            "frame_errors": self.frame_errors,
            "ber": self.ber,
            "fer": self.fer,
            "iter_mean": self.iterations_mean,
        }


@dataclass(frozen=True)
class SimReport:
    label: str
    master_seed: int
    stop_rule: str
    points: tuple[BerPoint, ...] = field(default_factory=tuple)

    def to_rows(self) -> list[dict]:
        return [p.to_row() for p in self.points]


def wilson_interval(errors: int, trials: int, z: float = 1.96) -> tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if trials <= 0:
        return (0.0, 1.0)
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


def theoretical_uncoded_ber(ebn0_db: float) -> float:
    """Q(sqrt(2 Eb/N0)): hard-decision BPSK error rate on AWGN."""
    x = math.sqrt(2.0 * 10.0 ** (ebn0_db / 10.0))
    return 0.5 * float(erfc(x / math.sqrt(2.0)))


def _coded_frames_task(codec: CodecSpec, ebn0_db: float, seed: int, point: int,
                       max_iterations: int, start: int, count: int
                       ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Simulate frames [start, start+count); deterministic per frame index."""
    ens = codec.ensemble
    channel = ChannelSpec(ebn0_db, ens.R)
    msgs = np.empty((count, ens.K), dtype=np.uint8)
    noise = np.empty((count, ens.N))
    for i in range(count):
        rng = derive_rng(seed, 0xB0, point, start + i)
        msgs[i] = rng.integers(0, 2, size=ens.K, dtype=np.uint8)
        noise[i] = rng.normal(0.0, 1.0, size=ens.N)
    frames = _encode_stages(codec, msgs)["frame"]
    symbols = 1.0 - 2.0 * frames
    llrs = channel.llr_scale * (symbols + math.sqrt(channel.sigma2) * noise)
    decoded, iters = _turbo_decode_batch(codec, llrs, max_iterations)
    bit_errors = np.sum(decoded != msgs, axis=1)
    return bit_errors, (bit_errors > 0), iters


def _uncoded_frames_task(ebn0_db: float, seed: int, point: int, start: int,
                         count: int, frame_bits: int
                         ) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    channel = ChannelSpec(ebn0_db, 1.0)
    bit_errors = np.empty(count, dtype=np.int64)
    for i in range(count):
        rng = derive_rng(seed, 0xB1, point, start + i)
        bits = rng.integers(0, 2, size=frame_bits, dtype=np.uint8)
        llrs = bpsk_awgn_llrs(bits, channel, rng)
        bit_errors[i] = int(np.sum((llrs < 0) != (bits == 1)))
    return bit_errors, (bit_errors > 0), np.ones(count, dtype=np.int64)


def _run_point(task, task_args: tuple, bits_per_frame: int, ebn0_db: float,
               min_frame_errors: int, max_frames: int, workers: int,
               batch_frames: int, executor) -> BerPoint:
    """Wave scheduler with a deterministic, order-scanned stop rule."""
    bit_err: list[int] = []
    frame_err: list[bool] = []
    iter_used: list[int] = []
    next_frame = 0
    stop_total = None
    while stop_total is None:
        wave = min(batch_frames * max(workers, 1), max_frames - next_frame)
        if wave <= 0:
            stop_total = max_frames
            break
        chunks = []
        pos = next_frame
        while pos < next_frame + wave:
            cnt = min(batch_frames, next_frame + wave - pos)
            chunks.append((pos, cnt))
            pos += cnt
        if executor is None:
            results = [task(*task_args, start, cnt) for start, cnt in chunks]
        else:
            futures = [executor.submit(task, *task_args, start, cnt) for start, cnt in chunks]
            results = [f.result() for f in futures]
        for be, fe, iu in results:
            bit_err.extend(int(x) for x in be)
            frame_err.extend(bool(x) for x in fe)
            iter_used.extend(int(x) for x in iu)
        next_frame += wave
        cum = np.cumsum(np.asarray(frame_err, dtype=np.int64))
        hits = np.nonzero(cum >= min_frame_errors)[0]
        if hits.size:
            stop_total = int(hits[0]) + 1
        elif next_frame >= max_frames:
            stop_total = max_frames

    n = stop_total
    bits_total = n * bits_per_frame
    be_total = int(sum(bit_err[:n]))
    fe_total = int(sum(frame_err[:n]))
    return BerPoint(
        ebn0_db=ebn0_db,
        frames=n,
        bit_errors=be_total,
        frame_errors=fe_total,
        ber=be_total / bits_total,
        fer=fe_total / n,
        iterations_mean=float(np.mean(iter_used[:n])),
        ber_interval=wilson_interval(be_total, bits_total),
        fer_interval=wilson_interval(fe_total, n),
    )


def ber_curve(codec: CodecSpec, ebn0_list, min_frame_errors: int = 100,
              max_frames: int = 10000, seed: int = 0, workers: int = 1,
              max_iterations: int = 30, batch_frames: int = 128) -> SimReport:
    """Monte-Carlo BER/FER over a list of Eb/N0 points.

    Each point simulates frames until ``min_frame_errors`` frame errors have
    accumulated (scanning frames in index order) or ``max_frames`` is hit.
    """
    points = []
    executor = ProcessPoolExecutor(workers) if workers > 1 else None
    try:
        for p, ebn0 in enumerate(ebn0_list):
            args = (codec, float(ebn0), seed, p, max_iterations)
            points.append(_run_point(
                _coded_frames_task, args, codec.ensemble.K, float(ebn0),
                min_frame_errors, max_frames, workers, batch_frames, executor))
    finally:
        if executor is not None:
            executor.shutdown()
    stop = f"min_frame_errors={min_frame_errors} or max_frames={max_frames}"
    return SimReport(codec.label, seed, stop, tuple(points))


def uncoded_ber_curve(ebn0_list, min_frame_errors: int = 100, max_frames: int = 10000,
                      seed: int = 0, workers: int = 1, frame_bits: int = 10000,
                      batch_frames: int = 64) -> SimReport:
    """Hard-decision BPSK reference curve (matches Q(sqrt(2 Eb/N0)))."""
    points = []
    for p, ebn0 in enumerate(ebn0_list):
        args = (float(ebn0), seed, p)
        task_args = (*args, )

        def task(ebn0_db, s, pt, start, cnt):
            return _uncoded_frames_task(ebn0_db, s, pt, start, cnt, frame_bits)

        points.append(_run_point(task, task_args, frame_bits, float(ebn0),
                                 min_frame_errors, max_frames, 1, batch_frames, None))
    stop = f"min_frame_errors={min_frame_errors} or max_frames={max_frames}"
    return SimReport("uncoded-bpsk", seed, stop, tuple(points))


# ---------------------------------------------------------------------------
# BPSK constrained capacity


def bpsk_capacity_threshold(rate: float) -> float:
    """Eb/N0 (dB) at which BPSK-input AWGN capacity equals the code rate.

    The channel LLR given the transmitted bit is a consistent Gaussian with
    sigma_L = 2/sigma, so capacity is j_function(2/sigma) and the threshold
    follows from sigma_L* = j_inverse(R) and sigma^2 = 1/(2 R Eb/N0).
    """
    if not 0.0 < rate < 1.0:
        raise ValueError(f"rate must be in (0, 1), got {rate}")
    sigma_llr = j_inverse(rate)
    ebn0_linear = sigma_llr * sigma_llr / (8.0 * rate)
    return 10.0 * math.log10(ebn0_linear)
