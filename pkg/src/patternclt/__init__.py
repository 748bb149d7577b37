"""Longest subsequences following repeating window patterns, and their CLT."""
from .analysis import (CombVerdict, DriftReport, TauWitness, check_combinatorial,
                       drift_probe, find_tau_witness)
from .decomposition import (BlockConfig, DecompositionTerms, EventScan, SegmentStats,
                            gluing_check, lemma2_terms, make_block_config,
                            sample_with_planted_events, scan_events, segment_lengths)
from .montecarlo import (CltEstimate, TrialBatch, estimate_clt, exact_distribution,
                         ks_normality, run_trials, sample_permutation, sample_uniform_seq)
from .patterns import Pattern, follows, format_pattern, parse_pattern, window_perm_of
from .subsequence import (IndexConstraint, InfeasibleConstraint, SubseqResult, longest,
                          longest_bruteforce, longest_constrained, longest_on_interval)

__version__ = "0.1.0"
