"""Coding laboratory for broadcast channels that carry a public and a
confidential message in one frame.

The package designs LDPC codes whose bit positions receive unequal
error protection (or pairs of codes splitting the frame), simulates
them over a rate-normalized AWGN channel, and extracts the reliability
and security SNR thresholds that decide whether an eavesdropper with
worse channel conditions can be kept ignorant of the confidential part.
"""

__version__ = "0.1.0"

from .channel import (ChannelParams, SnrPoint, channel_llr, modulate_bpsk,
                      noise_sigma2, transmit_awgn)
from .codec import (DecodeResult, decode_llr_spa, decode_llr_spa_batch,
                    encode, encode_batch)
from .construct import (BuildReport, ConstructionError, LdpcCode,
                        assign_protection_classes, build_zigzag_random,
                        girth, parse_alist, read_code, serialize_alist,
                        write_code)
from .degrees import (DegreePolynomial, EnsembleSpec,
                      concentrated_check_distribution, design_rate,
                      edge_to_node, node_to_edge)
from .library import (build_two_code_pair, build_uep_code, public_ensemble,
                      secret_ensemble, two_code_layout, uep_ensemble,
                      uep_layout)
from .montecarlo import (PointResult, SimConfig, SweepResult,
                         read_curves_csv, run_point, run_sweep,
                         write_curves_csv)
from .secrecy import (ErrorRateCurve, FrameLayout, Scrambler,
                      SecurityReport, SecurityThresholds,
                      build_scrambler, build_security_report,
                      compute_thresholds, concatenated_bler, descramble,
                      extract_threshold, layout_for_two_codes,
                      layout_for_uep, min_feasible_L, scramble,
                      security_gap)

__all__ = [name for name in dir() if not name.startswith("_")]
