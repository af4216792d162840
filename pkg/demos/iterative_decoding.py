#!/usr/bin/env python3
"""Encoding, iterative decoding, EXIT curves and a small BER sweep.

Uses a desk-scale ensemble (N = 630) so everything runs in seconds; the
full-scale experiments (N = 8184) are what the acceptance suite runs.
"""
import numpy as np

from blockacc import (CodecSpec, EnsembleSpec, bpsk_awgn_llrs, ber_curve,
                      bpsk_capacity_threshold, build_code, ChannelSpec,
                      derive_rng, encode_frame, exit_curves, turbo_decode,
                      uncoded_ber_curve)

ens = EnsembleSpec(build_code("hamming", m=5), 20, 2)  # N = 620, K = 520
codec = CodecSpec.from_seed(ens, seed=2024)
print(f"ensemble {ens.label}: N = {ens.N}, K = {ens.K}, R = {ens.R:.4f}")

print("\n=== one frame through the chain at 4.5 dB ===")
rng = derive_rng(2024, 1)
message = rng.integers(0, 2, ens.K, dtype=np.uint8)
frame = encode_frame(codec, message)
llrs = bpsk_awgn_llrs(frame, ChannelSpec(4.5, ens.R), rng)
decoded, diag = turbo_decode(codec, llrs)
print(f"bit errors: {int(np.sum(decoded != message))} after {diag['iterations']} iterations")

print("\n=== EXIT curves at 4.0 dB ===")
outer, inner = exit_curves(codec, 4.0, [0.0, 0.2, 0.4, 0.6, 0.8, 0.95], samples=6, seed=7)
print(" I_A     outer I_E   inner I_E")
for a, o, i in zip(outer.i_a, outer.i_e, inner.i_e):
    print(f" {a:4.2f}    {o:8.4f}    {i:8.4f}")

print("\n=== small BER sweep (decoder) vs uncoded reference ===")
report = ber_curve(codec, [3.0, 4.0, 5.0], min_frame_errors=30, max_frames=400, seed=11)
uncoded = uncoded_ber_curve([3.0, 4.0, 5.0], min_frame_errors=50, max_frames=100, seed=11)
print(" Eb/N0   coded BER    uncoded BER   mean iterations")
for p, u in zip(report.points, uncoded.points):
    print(f" {p.ebn0_db:4.1f}   {p.ber:9.2e}   {u.ber:9.2e}    {p.iterations_mean:5.1f}")
print(f"\nconstrained capacity at this rate: {bpsk_capacity_threshold(ens.R):.2f} dB")
