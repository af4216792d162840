#!/usr/bin/env python3
"""Finite-length minimum-distance bounds for block-accumulate ensembles.

For each block length, the largest distance d is reported such that the
ensemble-average enumerator bounds Pr(d_min < d) below 1/2: at least half
of the interleaver choices give a code at least that good.  The flagship
points: the (31,26)AA ensemble at N = 8184 supports d ~ 117, while a
typical random linear code of the same rate would reach N * delta_GV ~ 193.
"""
from blockacc import build_code, dmin_bound_curve, gvb_delta

print("=== (31,26)AA bound vs block length (target 1/2) ===")
outer = build_code("hamming", m=5)
lengths = [31 * L for L in (8, 16, 32, 64, 128, 264)]
for bound in dmin_bound_curve(outer, 2, lengths, 0.5):
    gv = gvb_delta(26 / 31) * bound.N
    print(f"N = {bound.N:5d}: d_star = {bound.d_star:3d}   (GV reference {gv:6.1f})")

print("\n=== single accumulate stage for comparison ===")
for bound in dmin_bound_curve(outer, 1, [31 * 64, 31 * 264], 0.5):
    print(f"N = {bound.N:5d}: d_star = {bound.d_star:3d}   (no linear growth)")

print("\n=== (127,120)AA at the simulated length ===")
outer127 = build_code("hamming", m=7)
bound = dmin_bound_curve(outer127, 2, [10414], 0.5)[0]
print(f"N = {bound.N}: d_star = {bound.d_star}, ln bound at d_star = {bound.ln_bound_at_d_star:.3f}")
