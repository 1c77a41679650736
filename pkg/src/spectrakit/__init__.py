"""Spectral analysis of ``scalar*I + compact`` operators on l2.

Operators are a scalar part, a dense finite block and a decaying diagonal
tail with a certified envelope.  The package computes norms, minimum moduli,
spectra and AN (absolutely norm attaining) decompositions with error bounds,
builds explicit commutator-norm maximizers and norm-attaining perturbations,
and cross-checks everything against an independent dense Jacobi oracle.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .tails import DecayEnvelope, EnvelopeTerm, Sign, SignTag, TailRule, terms_rule
from .structured import (DEFAULT_TOL, FinVector, StructuredOperator, add,
                         adjoint, apply, diagonal, finite_block, identity,
                         make_operator, multiply, power, promote, rank_one,
                         replace_entry, scale, tail_cutoff)
from .spectral import (Attainment, NormResult, PolarPair, SpectralPoint,
                       SpectrumApprox, Verdict, essential_min_modulus, invert,
                       is_self_adjoint, min_modulus, modulus, operator_norm,
                       polar, pos_neg_parts, sa_extremes, spectrum_sa,
                       sqrt_positive)
from .an import (ANTriple, ANVerdict, Classification, NotANReason,
                 VerdictKind, an_check, an_reassemble, check_triple, classify,
                 is_norm_attaining, null_space, sa_representation)
from .commutator import (MaximizerReport, Witness, maximizer_pair,
                         maximizer_sandwich, maximizer_single)
from .perturbation import (EmptyTopSlice, PerturbationCertificate,
                           SliceProjections, attainify, flatten_top,
                           slice_projections)
from .oracle import (dense_kernel, dense_min_singular, dense_norm,
                     dense_svd, dense_sym_eig, jacobi_eigh, truncate)
from .specfile import emit_spec, load_spec, parse_spec
