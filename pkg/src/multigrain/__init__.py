"""Multi-grain topic models for review text, with aspect-rating features."""

from .corpus import Corpus, Document, Sentence, Vocabulary, build_corpus, sentence_split, tokenize
from .errors import DataError
from .lda import LdaParams, LdaState, lda_conditional, lda_estimate, lda_init, lda_log_joint, lda_sweep
from .mglda import (
    Hyperparams,
    MgldaState,
    conditional,
    estimate_phi,
    estimate_theta_sentence,
    gibbs_sweep,
    init_state,
    log_joint,
)

__version__ = "0.1.0"
