"""Encoder and soft-input/soft-output decoders for the concatenated chain.

The encoder is outer block code -> interleave -> accumulate (-> interleave
-> accumulate).  Decoding runs exact a-posteriori message passing: a
two-state forward/backward recursion for each accumulator and an exact MAP
for the outer block code, iterated innermost-first.

LLR convention everywhere: L = ln(P(bit = 0) / P(bit = 1)), +inf/-inf allowed
as hard knowledge, NaN forbidden.  Bit metrics are normalized log
probabilities, so certain bits produce -inf metrics (impossible events) and
never +inf; all internal sums are exact log-sum-exp (no max-log shortcuts).

Every public operation takes a single frame; the _*_batch helpers carry a
leading batch axis and are what the Monte-Carlo layer calls.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .enumerator import EnsembleSpec
from .linear_code import BlockCodeSpec
from .rng import derive_rng

__all__ = [
    "Interleaver",
    "CodecSpec",
    "accumulate_bits",
    "encode_frame",
    "accumulator_siso",
    "block_siso",
    "turbo_decode",
]

ENUM_K_MAX = 16          # codeword enumeration cap: 2^k table
DUAL_CHECKS_MAX = 12     # dual-domain cap: 2^(n-k) table
_INF_CLAMP = 700.0       # e^-700 underflows, so this is exact hard knowledge
_TANH_LLR_MIN = 2e-8     # keeps leave-one-out tanh products out of underflow


@dataclass(eq=False)
class Interleaver:
    """A bijection on frame positions: interleave(x)[i] = x[permutation[i]]."""

    size: int
    permutation: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        perm = np.asarray(self.permutation, dtype=np.int64)
        if perm.shape != (self.size,) or not np.array_equal(np.sort(perm), np.arange(self.size)):
            raise ValueError("permutation is not a bijection on 0..size-1")
        self.permutation = perm
        inverse = np.empty(self.size, dtype=np.int64)
        inverse[perm] = np.arange(self.size)
        self.inverse = inverse

    @classmethod
    def identity(cls, size: int) -> "Interleaver":
        return cls(size, np.arange(size, dtype=np.int64))

    @classmethod
    def random(cls, size: int, seed: int, stream: int = 0) -> "Interleaver":
        """Fisher-Yates draw from the named PCG64 stream (seed, 0xA0, stream)."""
        rng = derive_rng(seed, 0xA0, stream)
        perm = np.arange(size, dtype=np.int64)
        for i in range(size - 1, 0, -1):
            j = int(rng.integers(0, i + 1))
            perm[i], perm[j] = perm[j], perm[i]
        return cls(size, perm, seed=seed)

    def interleave(self, frame: np.ndarray) -> np.ndarray:
        return np.asarray(frame)[..., self.permutation]

    def deinterleave(self, frame: np.ndarray) -> np.ndarray:
        return np.asarray(frame)[..., self.inverse]


@dataclass(eq=False)
class CodecSpec:
    """An ensemble member: outer code, stage count and drawn interleavers."""

    ensemble: EnsembleSpec
    pi1: Interleaver
    pi2: Interleaver | None = None

    def __post_init__(self):
        if self.pi1.size != self.ensemble.N:
            raise ValueError("pi1 size != frame length N")
        if self.ensemble.stages == 2:
            if self.pi2 is None or self.pi2.size != self.ensemble.N:
                raise ValueError("stages=2 requires pi2 of size N")
        elif self.pi2 is not None:
            raise ValueError("stages=1 admits no pi2")

    @classmethod
    def from_seed(cls, ensemble: EnsembleSpec, seed: int, index: int = 0) -> "CodecSpec":
        """Draw the interleavers from streams (seed, 0xA0, 2*index + 1/2)."""
        pi1 = Interleaver.random(ensemble.N, seed, stream=2 * index + 1)
        pi2 = (Interleaver.random(ensemble.N, seed, stream=2 * index + 2)
               if ensemble.stages == 2 else None)
        return cls(ensemble, pi1, pi2)

    @property
    def label(self) -> str:
        return self.ensemble.label


# ---------------------------------------------------------------------------
# Encoding


def accumulate_bits(bits) -> np.ndarray:
    """Running XOR: y_0 = x_0, y_i = x_i ^ y_{i-1} (state starts at 0)."""
    x = np.asarray(bits, dtype=np.uint8) & 1
    return np.bitwise_xor.accumulate(x, axis=-1)


def _encode_stages(codec: CodecSpec, messages: np.ndarray) -> dict[str, np.ndarray]:
    """All intermediate bit frames of the encoder, batched (B, ...)."""
    ens = codec.ensemble
    msg = np.atleast_2d(np.asarray(messages, dtype=np.uint8) & 1)
    if msg.shape[1] != ens.K:
        raise ValueError(f"message length {msg.shape[1]} != K = {ens.K}")
    blocks = msg.reshape(-1, ens.outer.k)
    c0 = ((blocks @ codec.ensemble.outer.generator_matrix) % 2).reshape(msg.shape[0], ens.N)
    x1 = codec.pi1.interleave(c0)
    y1 = accumulate_bits(x1)
    out = {"c0": c0, "x1": x1, "y1": y1}
    if ens.stages == 2:
        x2 = codec.pi2.interleave(y1)
        y2 = accumulate_bits(x2)
        out["x2"] = x2
        out["frame"] = y2
    else:
        out["frame"] = y1
    return out


def encode_frame(codec: CodecSpec, message) -> np.ndarray:
    """Encode K message bits into the N-bit transmitted frame."""
    msg = np.asarray(message, dtype=np.uint8)
    if msg.ndim != 1:
        raise ValueError("encode_frame takes a single message; see _encode_stages for batches")
    return _encode_stages(codec, msg[None, :])["frame"][0]


# ---------------------------------------------------------------------------
# Accumulator SISO (exact two-state forward/backward, log domain)


def _check_llrs(name: str, arr: np.ndarray):
    if np.any(np.isnan(arr)):
        raise ValueError(f"NaN in {name} LLRs")


def _bit_metrics(llrs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Normalized log probabilities (ln P(0), ln P(1)); never +inf."""
    m0 = -np.logaddexp(0.0, -llrs)
    m1 = -np.logaddexp(0.0, llrs)
    return m0, m1


def _accumulator_siso_batch(output_llrs: np.ndarray, input_llrs: np.ndarray
                            ) -> tuple[np.ndarray, np.ndarray]:
    """Extrinsics for input and output bits of the 1/(1+D) accumulator.

    State s_i is the output bit y_i; transitions s -> s' consume input
    x = s ^ s' and emit y = s'.  Arrays are (B, N); the recursion runs
    time-major so each step is one vector op over the batch.
    """
    lo = np.asarray(output_llrs, dtype=float)
    li = np.asarray(input_llrs, dtype=float)
    if lo.shape != li.shape:
        raise ValueError(f"output/input LLR shapes differ: {lo.shape} vs {li.shape}")
    b, n = lo.shape
    mo0, mo1 = _bit_metrics(lo.T)   # (N, B)
    mi0, mi1 = _bit_metrics(li.T)

    t00 = mi0 + mo0   # s=0 -> s'=0 (x=0, y=0)
    t01 = mi1 + mo1   # s=0 -> s'=1
    t10 = mi1 + mo0   # s=1 -> s'=0
    t11 = mi0 + mo1   # s=1 -> s'=1

    a0 = np.empty((n + 1, b))
    a1 = np.empty((n + 1, b))
    a0[0] = 0.0
    a1[0] = -np.inf
    for i in range(n):
        a0[i + 1] = np.logaddexp(a0[i] + t00[i], a1[i] + t10[i])
        a1[i + 1] = np.logaddexp(a0[i] + t01[i], a1[i] + t11[i])

    b0 = np.empty((n + 1, b))
    b1 = np.empty((n + 1, b))
    b0[n] = 0.0
    b1[n] = 0.0  # unterminated trellis: both end states allowed
    for i in range(n - 1, -1, -1):
        b0[i] = np.logaddexp(t00[i] + b0[i + 1], t01[i] + b1[i + 1])
        b1[i] = np.logaddexp(t10[i] + b0[i + 1], t11[i] + b1[i + 1])

    af0, af1 = a0[:-1], a1[:-1]
    bf0, bf1 = b0[1:], b1[1:]
    # Input extrinsic: drop this bit's input metric, keep the output metric.
    num0 = np.logaddexp(af0 + mo0 + bf0, af1 + mo1 + bf1)   # x = 0
    num1 = np.logaddexp(af0 + mo1 + bf1, af1 + mo0 + bf0)   # x = 1
    ext_in = (num0 - num1).T
    # Output extrinsic: drop this bit's output metric, keep the input metric.
    out0 = bf0 + np.logaddexp(af0 + mi0, af1 + mi1)         # y = 0
    out1 = bf1 + np.logaddexp(af0 + mi1, af1 + mi0)         # y = 1
    ext_out = (out0 - out1).T
    return ext_in, ext_out


def accumulator_siso(output_llrs, input_llrs) -> tuple[np.ndarray, np.ndarray]:
    """Exact APP extrinsics for one frame through the accumulator trellis.

    Returns (extrinsic on input bits, extrinsic on output bits); both exclude
    the corresponding intrinsic information.
    """
    lo = np.asarray(output_llrs, dtype=float)
    li = np.asarray(input_llrs, dtype=float)
    if lo.ndim != 1 or li.ndim != 1 or lo.shape != li.shape:
        raise ValueError("accumulator_siso takes two equal-length 1-D LLR frames")
    _check_llrs("output", lo)
    _check_llrs("input", li)
    ext_in, ext_out = _accumulator_siso_batch(lo[None, :], li[None, :])
    return ext_in[0], ext_out[0]


# ---------------------------------------------------------------------------
# Outer block-code SISO (exact codeword-domain MAP)


_CODEBOOK_CACHE: dict[tuple, tuple[np.ndarray, np.ndarray]] = {}
_DUAL_CACHE: dict[tuple, np.ndarray] = {}


def _codebook(code: BlockCodeSpec) -> tuple[np.ndarray, np.ndarray]:
    """(messages, codewords) over all 2^k messages, cached per code."""
    key = code.cache_key()
    entry = _CODEBOOK_CACHE.get(key)
    if entry is None:
        if len(_CODEBOOK_CACHE) > 8:
            _CODEBOOK_CACHE.clear()
        idx = np.arange(1 << code.k, dtype=np.uint32)
        msgs = ((idx[:, None] >> np.arange(code.k)) & 1).astype(np.uint8)
        cws = (msgs @ code.generator_matrix) % 2
        entry = _CODEBOOK_CACHE[key] = (msgs, cws)
    return entry


def _dual_codebook(code: BlockCodeSpec) -> np.ndarray:
    """All 2^(n-k) dual codewords (spanned by the parity-check rows)."""
    key = code.cache_key()
    duals = _DUAL_CACHE.get(key)
    if duals is None:
        if len(_DUAL_CACHE) > 8:
            _DUAL_CACHE.clear()
        r = code.n - code.k
        idx = np.arange(1 << r, dtype=np.uint32)
        coeffs = ((idx[:, None] >> np.arange(r)) & 1).astype(np.uint8)
        duals = _DUAL_CACHE[key] = (coeffs @ code.parity_matrix) % 2
    return duals


def _block_siso_enum(code: BlockCodeSpec, ap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    msgs, cws = _codebook(code)
    llr = np.clip(ap, -_INF_CLAMP, _INF_CLAMP)
    m0, m1 = _bit_metrics(llr)
    scores = m0 @ (1 - cws.T).astype(float) + m1 @ cws.T.astype(float)  # (B, 2^k)

    ext = np.empty_like(llr)
    for j in range(code.n):
        cj = cws[:, j].astype(bool)
        own = np.where(cj[None, :], m1[:, j : j + 1], m0[:, j : j + 1])
        leave_out = scores - own
        ext[:, j] = logsumexp(leave_out[:, ~cj], axis=1) - logsumexp(leave_out[:, cj], axis=1)

    msg_post = np.empty((llr.shape[0], code.k))
    for j in range(code.k):
        mj = msgs[:, j].astype(bool)
        msg_post[:, j] = logsumexp(scores[:, ~mj], axis=1) - logsumexp(scores[:, mj], axis=1)
    return ext, msg_post


def _block_siso_dual(code: BlockCodeSpec, ap: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """MAP extrinsics via the dual code (efficient for high-rate codes).

    For each bit, partition the dual codewords by their value at that
    position; the leave-one-out tanh products give the extrinsic directly
    as ln((A+B)/(A-B)) with |B| <= A, computed through log1p so the only
    saturation is the ~37 nat ceiling inherent to double-precision tanh.
    """
    if not code.is_systematic:
        raise ValueError("dual-domain SISO requires a systematic generator matrix")
    duals = _dual_codebook(code).astype(float)   # (Nd, n)
    llr = np.clip(ap, -_INF_CLAMP, _INF_CLAMP)
    small = np.abs(llr) < _TANH_LLR_MIN
    llr = np.where(small, np.where(llr < 0, -_TANH_LLR_MIN, _TANH_LLR_MIN), llr)
    t = np.tanh(0.5 * llr)
    log_t = np.log(np.abs(t))
    neg = (t < 0).astype(float)

    w_log = log_t @ duals.T                          # (B, Nd); all <= 0, zero word gives 0
    parity = (neg @ duals.T) % 2
    signed = np.where(parity > 0.5, -1.0, 1.0) * np.exp(w_log)

    sums_one = signed @ duals                        # sum over duals with c'_j = 1 (includes t_j)
    sums_zero = signed @ (1.0 - duals)               # A_j: leave-one-out sum over c'_j = 0
    a = np.maximum(sums_zero, 1e-280)                # positive in exact arithmetic
    rho = sums_one / (a * t)                         # B_j / A_j, the t_j factor cancels
    rho = np.clip(rho, -1.0 + 1e-16, 1.0 - 1e-16)
    ext = np.log1p(rho) - np.log1p(-rho)

    msg_post = ap[:, : code.k] + ext[:, : code.k]
    return ext, msg_post


def _block_siso_batch(code: BlockCodeSpec, apriori: np.ndarray, method: str = "auto"
                      ) -> tuple[np.ndarray, np.ndarray]:
    ap = np.asarray(apriori, dtype=float)
    if ap.shape[-1] != code.n:
        raise ValueError(f"a-priori frame length {ap.shape[-1]} != n = {code.n}")
    if method == "auto":
        method = "enumeration" if code.k <= ENUM_K_MAX else "dual"
    if method == "enumeration":
        if code.k > ENUM_K_MAX:
            raise ValueError(f"enumeration path needs k <= {ENUM_K_MAX}, got k = {code.k}")
        return _block_siso_enum(code, ap)
    if method == "dual":
        if code.n - code.k > DUAL_CHECKS_MAX:
            raise ValueError(f"dual path needs n - k <= {DUAL_CHECKS_MAX}, got {code.n - code.k}")
        return _block_siso_dual(code, ap)
    raise ValueError(f"unknown block SISO method {method!r}")


def block_siso(code: BlockCodeSpec, apriori, method: str = "auto"
               ) -> tuple[np.ndarray, np.ndarray]:
    """Exact bitwise MAP for one outer block.

    Returns (extrinsic on the n codeword bits, posterior on the k message
    bits).  ``method`` is "enumeration" (all 2^k codewords, k <= 16),
    "dual" (all 2^(n-k) parity words, high-rate codes), or "auto".
    """
    ap = np.asarray(apriori, dtype=float)
    if ap.ndim != 1:
        raise ValueError("block_siso takes a single length-n LLR frame")
    _check_llrs("a-priori", ap)
    ext, post = _block_siso_batch(code, ap[None, :], method)
    return ext[0], post[0]


# ---------------------------------------------------------------------------
# Turbo decoding


def _turbo_decode_batch(codec: CodecSpec, channel: np.ndarray, max_iterations: int = 30,
                        siso_method: str = "auto") -> tuple[np.ndarray, np.ndarray]:
    """Decode a (B, N) batch; returns (hard bits (B, K), iterations (B,)).

    Schedule per iteration, innermost first: inner accumulator (channel +
    feedback), deinterleave, middle accumulator (stages=2), deinterleave,
    outer MAP per block, extrinsics fed back down.  A frame stops early as
    soon as one full iteration leaves its hard decisions unchanged.
    """
    ens = codec.ensemble
    ch = np.asarray(channel, dtype=float)
    b, n_frame = ch.shape
    if n_frame != ens.N:
        raise ValueError(f"channel frame length {n_frame} != N = {ens.N}")

    decided = np.zeros((b, ens.K), dtype=np.uint8)
    iters = np.full(b, max_iterations, dtype=np.int64)
    active = np.arange(b)
    e_outer = np.zeros((b, ens.N))
    e1_out = np.zeros((b, ens.N)) if ens.stages == 2 else None
    prev = np.full((b, ens.K), 255, dtype=np.uint8)

    for it in range(1, max_iterations + 1):
        ch_a = ch[active]
        if ens.stages == 2:
            ap2_in = codec.pi2.interleave(e1_out[active])
            ext2_in, _ = _accumulator_siso_batch(ch_a, ap2_in)
            ap_y1 = codec.pi2.deinterleave(ext2_in)
            ap1_in = codec.pi1.interleave(e_outer[active])
            ext1_in, ext1_out = _accumulator_siso_batch(ap_y1, ap1_in)
            e1_out[active] = ext1_out
        else:
            ap1_in = codec.pi1.interleave(e_outer[active])
            ext1_in, _ = _accumulator_siso_batch(ch_a, ap1_in)
        ap_c0 = codec.pi1.deinterleave(ext1_in)

        blocks = ap_c0.reshape(-1, ens.outer.n)
        ext_blocks, post_blocks = _block_siso_batch(ens.outer, blocks, siso_method)
        e_outer[active] = ext_blocks.reshape(len(active), ens.N)
        decisions = (post_blocks.reshape(len(active), ens.K) < 0).astype(np.uint8)

        stable = np.all(decisions == prev[active], axis=1)
        decided[active] = decisions
        prev[active] = decisions
        if it == max_iterations:
            break
        if np.any(stable):
            iters[active[stable]] = it
            active = active[~stable]
            if active.size == 0:
                break
    return decided, iters


def turbo_decode(codec: CodecSpec, channel_llrs, max_iterations: int = 30,
                 siso_method: str = "auto") -> tuple[np.ndarray, dict]:
    """Iteratively decode one received frame of channel LLRs.

    Returns the K hard-decided message bits and a diagnostics dict with the
    number of iterations actually used.
    """
    ch = np.asarray(channel_llrs, dtype=float)
    if ch.ndim != 1:
        raise ValueError("turbo_decode takes a single length-N LLR frame")
    if max_iterations < 1:
        raise ValueError("max_iterations must be >= 1")
    _check_llrs("channel", ch)
    bits, iters = _turbo_decode_batch(codec, ch[None, :], max_iterations, siso_method)
    used = int(iters[0])
    return bits[0], {
        "iterations": used,
        "max_iterations": max_iterations,
        "early_stopped": used < max_iterations,
    }
