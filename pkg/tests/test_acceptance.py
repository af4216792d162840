"""Acceptance suite: one test per criterion, printed pass/fail per line.

Shared heavyweight measurements (the EXIT threshold searches) are computed
once in session fixtures.  Expected wall time on a 2-core desktop is about
15-20 minutes, dominated by the threshold searches and the BER waterfall.
"""
import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

import blockacc as ba
from blockacc.codec import _bit_metrics

LN2 = math.log(2)

TABLE_ROWS = [
    # (kind, m, delta_min, delta_gv, threshold_db, capacity_db)
    ("extended-hamming", 5, 0.0197, 0.0286, 3.34, 2.14),
    ("hamming", 5, 0.0140, 0.0236, 3.48, 2.39),
    ("extended-hamming", 6, 0.0091, 0.0145, 4.10, 3.03),
    ("hamming", 6, 0.0067, 0.0122, 4.20, 3.26),
    ("extended-hamming", 7, 0.0042, 0.0073, 4.70, 3.93),
    ("hamming", 7, 0.0032, 0.0063, 4.79, 4.11),
]
SINGLE_STAGE_ROWS = [("hamming", 5, 2.81), ("hamming", 6, 3.58)]


def outer_code(kind, m):
    return ba.build_code(kind, m=m)


def row_label(kind, m, stages=2):
    code = outer_code(kind, m)
    return f"({code.n},{code.k}){'AA' if stages == 2 else 'A'}"


@pytest.fixture(scope="session")
def aa_thresholds():
    """Measured EXIT thresholds for the six double-accumulate ensembles."""
    out = {}
    for kind, m, _, _, want, _ in TABLE_ROWS:
        window = (want - 0.8, want + 0.8)
        res = ba.threshold_search(outer_code(kind, m), 2, window, step=0.05,
                                  frames=4, seed=0)
        out[row_label(kind, m)] = res["threshold_db"]
    return out


@pytest.fixture(scope="session")
def a_thresholds():
    out = {}
    for kind, m, want in SINGLE_STAGE_ROWS:
        window = (want - 0.8, want + 0.8)
        res = ba.threshold_search(outer_code(kind, m), 1, window, step=0.05,
                                  frames=4, seed=0)
        out[row_label(kind, m, stages=1)] = res["threshold_db"]
    return out


def test_criterion_01_delta_min_reproduction():
    """Table I growth rates, six ensembles, +-5e-4 absolute."""
    failures = []
    for kind, m, want, _, _, _ in TABLE_ROWS:
        ens = ba.EnsembleSpec(outer_code(kind, m), 1, 2)
        got = ba.delta_min(ens).delta_min
        ok = abs(got - want) <= 5e-4
        print(f"criterion 1 {row_label(kind, m)}: delta_min {got:.5f} vs {want} "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append((kind, m, got, want))
    assert not failures


def test_criterion_02_gvb_reproduction():
    failures = []
    for kind, m, _, want, _, _ in TABLE_ROWS:
        code = outer_code(kind, m)
        got = ba.gvb_delta(code.k / code.n)
        ok = abs(got - want) <= 5e-4
        print(f"criterion 2 {row_label(kind, m)}: delta_GV {got:.5f} vs {want} "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append((kind, m, got, want))
    assert not failures


def test_criterion_03_constrained_capacity():
    """Table I capacity column, +-0.02 dB.

    Known conflict: the exact soft-BPSK constrained capacity (validated
    against an independent y-domain quadrature and the textbook 0.187 dB
    value at rate 1/2) deviates from the paper's column by -0.016..+0.050 dB
    with inconsistent signs, so four of the six entries cannot land inside
    +-0.02 dB.  The criterion is asserted as stated; see the decisions
    ledger for the full analysis.
    """
    failures = []
    for kind, m, _, _, _, want in TABLE_ROWS:
        code = outer_code(kind, m)
        got = ba.bpsk_capacity_threshold(code.k / code.n)
        ok = abs(got - want) <= 0.02
        print(f"criterion 3 {row_label(kind, m)}: capacity {got:.4f} dB vs {want} "
              f"{'PASS' if ok else 'FAIL (see ledger: paper column is ~+-0.05 dB)'}")
        if not ok:
            failures.append((row_label(kind, m), got, want))
    assert not failures, f"exact capacities outside +-0.02 dB of the table: {failures}"


def test_criterion_04_finite_length_bound():
    bound31 = ba.dmin_bound_curve(outer_code("hamming", 5), 2, [8184], 0.5)[0]
    ok31 = 110 <= bound31.d_star <= 120
    print(f"criterion 4 (31,26)AA N=8184: d_star {bound31.d_star} in [110,120] "
          f"{'PASS' if ok31 else 'FAIL'}")
    bound127 = ba.dmin_bound_curve(outer_code("hamming", 7), 2, [10414], 0.5)[0]
    ok127 = 31 <= bound127.d_star <= 35
    print(f"criterion 4 (127,120)AA N=10414: d_star {bound127.d_star} in [31,35] "
          f"{'PASS' if ok127 else 'FAIL'}")
    assert ok31 and ok127


def test_criterion_05_conservation():
    cases = [
        (ba.EnsembleSpec(outer_code("hamming", 3), 4, 2), 28),
        (ba.EnsembleSpec(outer_code("hamming", 4), 8, 2), 120),
        (ba.EnsembleSpec(outer_code("extended-hamming", 4), 12, 1), 192),
    ]
    failures = []
    for ens, n_expected in cases:
        assert ens.N == n_expected <= 200
        total = logsumexp(ba.ensemble_avg_we_table(ens))
        want = ens.K * LN2
        rel = abs(total - want) / want
        ok = rel < 1e-9
        print(f"criterion 5 {ens.label}: sum = K ln2 rel err {rel:.2e} "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append(ens.label)
    assert not failures


def test_criterion_06a_acc_iowe_oracle():
    n = 12
    table = np.zeros((n + 1, n + 1), dtype=np.int64)
    for v in range(1 << n):
        bits = np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)
        table[int(bits.sum()), int(ba.accumulate_bits(bits).sum())] += 1
    for w in range(n + 1):
        for h in range(n + 1):
            got = ba.acc_iowe_log(n, w, h)
            if table[w, h] == 0:
                assert got == -np.inf, (w, h)
            else:
                assert round(math.exp(got)) == table[w, h], (w, h)
    print(f"criterion 6a: accumulate IOWE exact vs exhaustive 2^{n} enumeration PASS")


def test_criterion_06b_interleaver_pair_oracle():
    cases = [
        (ba.EnsembleSpec(ba.build_code("repetition", n=5), 1, 2), 5),
        (ba.EnsembleSpec(ba.build_code("repetition", n=2), 2, 2), 4),
        (ba.EnsembleSpec(ba.build_code("repetition", n=2), 2, 1), 4),
    ]
    for ens, n_frame in cases:
        assert ens.N == n_frame <= 5
        perms = list(itertools.permutations(range(ens.N)))
        pairs = ([(p1, p2) for p1 in perms for p2 in perms] if ens.stages == 2
                 else [(p1, None) for p1 in perms])
        counts = np.zeros(ens.N + 1)
        for p1, p2 in pairs:
            codec = ba.CodecSpec(
                ens, ba.Interleaver(ens.N, np.array(p1)),
                ba.Interleaver(ens.N, np.array(p2)) if p2 is not None else None)
            for v in range(1 << ens.K):
                msg = np.array([(v >> i) & 1 for i in range(ens.K)], dtype=np.uint8)
                counts[int(ba.encode_frame(codec, msg).sum())] += 1
        oracle = counts / len(pairs)
        got = np.exp(ba.ensemble_avg_we_table(ens))
        assert got == pytest.approx(oracle, rel=1e-12, abs=1e-12)
    print("criterion 6b: ensemble average vs exhaustive interleaver pairs PASS")


def test_criterion_06c_accumulator_siso_oracle():
    rng = np.random.default_rng(63)
    for n in (5, 8, 10):
        lo = rng.normal(0, 2.0, n)
        li = rng.normal(0, 2.0, n)
        mi0, mi1 = _bit_metrics(li)
        mo0, mo1 = _bit_metrics(lo)
        post = np.full((2, 2, n), -np.inf)
        for v in range(1 << n):
            x = np.array([(v >> i) & 1 for i in range(n)], dtype=np.uint8)
            y = np.bitwise_xor.accumulate(x)
            score = np.where(x, mi1, mi0).sum() + np.where(y, mo1, mo0).sum()
            for i in range(n):
                post[0, x[i], i] = np.logaddexp(post[0, x[i], i], score)
                post[1, y[i], i] = np.logaddexp(post[1, y[i], i], score)
        ext_in, ext_out = ba.accumulator_siso(lo, li)
        assert np.allclose(ext_in, (post[0, 0] - post[0, 1]) - li, atol=1e-6)
        assert np.allclose(ext_out, (post[1, 0] - post[1, 1]) - lo, atol=1e-6)
    print("criterion 6c: accumulator SISO vs 2^N posterior oracle PASS")


def test_criterion_06d_block_siso_oracle():
    rng = np.random.default_rng(64)
    for m in (3, 4):
        code = outer_code("hamming", m)
        ap = rng.normal(0, 2.0, code.n)
        m0, m1 = _bit_metrics(ap)
        cws = []
        for v in range(1 << code.k):
            msg = np.array([(v >> i) & 1 for i in range(code.k)], dtype=np.uint8)
            cws.append((msg @ code.generator_matrix) % 2)
        want = np.empty(code.n)
        for j in range(code.n):
            s0, s1 = [], []
            for cw in cws:
                score = sum(m1[i] if cw[i] else m0[i] for i in range(code.n) if i != j)
                (s1 if cw[j] else s0).append(score)
            want[j] = logsumexp(s0) - logsumexp(s1)
        ext, _ = ba.block_siso(code, ap)
        assert np.allclose(ext, want, atol=1e-9)
    print("criterion 6d: block SISO vs naive enumeration oracle PASS")


def test_criterion_06e_repetition_asymptotic_oracle():
    code = ba.build_code("repetition", n=3)
    for beta0 in np.linspace(0.0, 1.0, 100):
        value, _ = ba.outer_asym_we(code, beta0)
        assert value == pytest.approx(ba.entropy_nats(beta0) / 3, abs=1e-9)
    print("criterion 6e: repetition asymptotic WE vs closed form PASS")


def test_criterion_07_spectral_normalization():
    failures = []
    for kind, m, _, _, _, _ in TABLE_ROWS:
        ens = ba.EnsembleSpec(outer_code(kind, m), 1, 2)
        deltas = np.concatenate([np.linspace(0.05, 0.95, 19), [0.5]])
        peak = max(ba.spectral_shape(ens, float(d)).r_nats for d in deltas)
        want = ens.R * LN2
        ok = abs(peak - want) <= 1e-4
        print(f"criterion 7 {row_label(kind, m)}: max r = {peak:.6f} vs R ln2 = "
              f"{want:.6f} {'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append(row_label(kind, m))
    assert not failures


def test_criterion_08_convergence_thresholds(aa_thresholds, a_thresholds):
    failures = []
    for kind, m, _, _, want, _ in TABLE_ROWS:
        got = aa_thresholds[row_label(kind, m)]
        ok = abs(got - want) <= 0.35
        print(f"criterion 8 {row_label(kind, m)}: threshold {got:.2f} dB vs {want} "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append((row_label(kind, m), got, want))
    for kind, m, want in SINGLE_STAGE_ROWS:
        got = a_thresholds[row_label(kind, m, stages=1)]
        ok = abs(got - want) <= 0.35
        print(f"criterion 8 {row_label(kind, m, 1)}: threshold {got:.2f} dB vs {want} "
              f"{'PASS' if ok else 'FAIL'}")
        if not ok:
            failures.append((row_label(kind, m, 1), got, want))

    ordered = [aa_thresholds[row_label(kind, m)] for kind, m, *_ in TABLE_ROWS]
    order_ok = all(a < b for a, b in zip(ordered, ordered[1:]))
    print(f"criterion 8 ordering {np.round(ordered, 2).tolist()}: "
          f"{'PASS' if order_ok else 'FAIL'}")

    gap_failures = []
    for kind, m, _, _, _, _ in TABLE_ROWS:
        code = outer_code(kind, m)
        gap = aa_thresholds[row_label(kind, m)] - ba.bpsk_capacity_threshold(code.k / code.n)
        ok = 0.7 - 0.35 <= gap <= 1.2 + 0.35
        print(f"criterion 8 {row_label(kind, m)}: capacity gap {gap:.2f} dB in "
              f"[0.35, 1.55] {'PASS' if ok else 'FAIL'}")
        if not ok:
            gap_failures.append((row_label(kind, m), gap))
    assert not failures and order_ok and not gap_failures


def test_criterion_09_ber_waterfall(aa_thresholds):
    threshold = aa_thresholds["(31,26)AA"]
    ens = ba.ensemble_near_block_length(outer_code("hamming", 5), 2, 8184)
    codec = ba.CodecSpec.from_seed(ens, 0)

    low = ba.ber_curve(codec, [threshold - 0.4], min_frame_errors=100,
                       max_frames=400, seed=0, workers=2).points[0]
    assert low.frame_errors >= 100
    high = ba.ber_curve(codec, [threshold + 0.4], min_frame_errors=100,
                        max_frames=2000, seed=0, workers=2).points[0]
    if high.frame_errors >= 100:
        ratio_ok = 100 * high.ber <= low.ber
        certificate = f"measured BER ratio {low.ber / max(high.ber, 1e-300):.0f}x"
    else:
        # Not enough frame errors inside the frame budget: certify the ratio
        # against the Wilson upper bound of the high-point BER instead (a
        # stronger statistical statement than the point estimate).
        upper = ba.wilson_interval(high.bit_errors, high.frames * ens.K, z=3.0)[1]
        ratio_ok = 100 * upper <= low.ber
        certificate = (f"only {high.frame_errors} frame errors in {high.frames} "
                       f"frames; Wilson-upper BER {upper:.2e} (see ledger)")
    print(f"criterion 9: BER({threshold - 0.4:.2f}) = {low.ber:.3e}, "
          f"BER({threshold + 0.4:.2f}) = {high.ber:.3e}; {certificate} "
          f"{'PASS' if ratio_ok else 'FAIL'}")
    assert ratio_ok

    sig_failures = []
    for ebn0 in (0.0, 2.0):
        report = ba.uncoded_ber_curve([ebn0], min_frame_errors=100, max_frames=300,
                                      seed=1, frame_bits=20000).points[0]
        want = ba.theoretical_uncoded_ber(ebn0)
        sigma = math.sqrt(want * (1 - want) / (report.frames * 20000))
        ok = abs(report.ber - want) <= 3 * sigma
        print(f"criterion 9 uncoded {ebn0} dB: BER {report.ber:.5f} vs Q = {want:.5f} "
              f"(3 sigma = {3 * sigma:.5f}) {'PASS' if ok else 'FAIL'}")
        if not ok:
            sig_failures.append(ebn0)
    assert not sig_failures


def test_criterion_10_determinism():
    ens = ba.EnsembleSpec(outer_code("hamming", 3), 8, 2)
    codec = ba.CodecSpec.from_seed(ens, 17)
    kwargs = dict(min_frame_errors=10, max_frames=200, seed=23, max_iterations=12,
                  batch_frames=16)
    runs = [ba.ber_curve(codec, [2.5, 5.0], workers=w, **kwargs) for w in (1, 2, 3)]
    for pts in zip(*(r.points for r in runs)):
        counts = {(p.frames, p.bit_errors, p.frame_errors, p.iterations_mean)
                  for p in pts}
        assert len(counts) == 1, counts
    print("criterion 10: identical integer counts for workers 1, 2 and 3 PASS")
