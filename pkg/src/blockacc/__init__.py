"""Ensemble analysis and iterative decoding of block-accumulate codes.

A numpy/scipy library for serial concatenations of an outer binary block
code with one or two rate-1 accumulators: exact finite-length ensemble
weight enumerators and minimum-distance bounds, asymptotic spectral shape
and distance growth rate, an exact-MAP iterative decoder, and a Monte-Carlo
layer for BER curves, EXIT charts and convergence thresholds.
"""

__version__ = "0.1.0"

from .linear_code import (BlockCodeSpec, WeightSpectrum, build_code,
                          code_from_token, encode_block, min_distance_oracle,
                          weight_enumerator)
from .enumerator import (DistanceBound, EnsembleSpec, LogWeightSpectrum,
                         acc_iowe_log, dmin_bound_curve, dmin_prob_bound,
                         ensemble_avg_we_log, ensemble_avg_we_table,
                         log_binomial, outer_we_log)
from .asymptotic import (AnalysisReport, ShapePoint, SpectralCurve,
                         TiltedComposition, acc_asym_iowe, delta_min,
                         entropy_bits, entropy_nats, gvb_delta, outer_asym_we,
                         random_code_shape, spectral_curve, spectral_shape)
from .codec import (CodecSpec, Interleaver, accumulate_bits, accumulator_siso,
                    block_siso, encode_frame, turbo_decode)
from .simulate import (BerPoint, ChannelSpec, ExitCurve, SimReport,
                       ber_curve, bpsk_awgn_llrs, bpsk_capacity_threshold,
                       consistent_gaussian_llrs, ensemble_near_block_length,
                       exit_curves, j_function, j_inverse, mi_estimate,
                       theoretical_uncoded_ber, threshold_search,
                       uncoded_ber_curve, wilson_interval)
from .rng import derive_rng

__all__ = [name for name in dir() if not name.startswith("_")]
