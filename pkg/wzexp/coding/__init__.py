from .blocks import BlockSpace, ENUMERATION_LIMIT, guard, sequences
from .scheme import (
    CodingScheme,
    SimReport,
    codebook_size,
    decoder_scores,
    pc_exact,
    optimal_decoder_for,
)
from .search import (
    ENCODER_LIMIT,
    encoder_count,
    canonical_encoders,
    ExhaustiveResult,
    CodeSearch,
    g_n_exhaustive,
    BinningEstimate,
    trial_rng,
    g_n_random_binning,
    TheoremRow,
    verify_theorem,
    SubadditivityRow,
    subadditivity_check,
)
from .lemmas import (
    BlockLaw,
    SpectrumChoices,
    SpectrumReport,
    SpectrumBoundReport,
    spectrum_lemma_check,
    spectrum_bound_check,
    markov_lemma_check,
    RecursionReport,
    recursion_check,
)
