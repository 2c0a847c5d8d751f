"""Realize POVMs by sequences of projective measurements on the original space."""
from .compiler import (LemmaFResult, ProtocolNode, ProtocolTree, SpectralItem, compile_tree,
                       embed_povm, embed_state, lemma1_f, reorder_last_element, spectral_items)
from .core import (Povm, Projector, QuantumState, born_distribution, validate_povm,
                   validate_state)
from .errors import *  # noqa: F401,F403
from .realizability import (CommutantBasis, RealizabilityVerdict, check_condition,
                            commutant_basis, find_commuting_projector, support_intersection)
from .simulator import (OutcomeDistribution, ShotRecord, exact_distribution, run_shot,
                        sample_histogram, shot_stream)
from .verifier import VerificationReport, verify_tree

__version__ = "0.1.0"
