"""Focus-aspect-polarity prediction over precomputed image embeddings."""

from .core import (AspectEntry, AspectLexicon, DataError, Dataset, ImageRecord, LexiconError,
                   UnknownAdjectiveError, adjective_lookup, default_lexicon, expand_aspect,
                   load_dataset, load_lexicon)
from .metrics import PredictionSet, aspect_f1, baseline_aspect, baseline_polarity, polarity_accuracy
from .models import (ModelSpec, NoApplicableLabelError, ScoreVector, TrainedModel,
                     UntrainableCombinationError, convert_scores, load_model, predict_aspect,
                     predict_dataset, predict_polarity, save_model, train)
from .pipeline import (DEFAULT_HOLDOUTS, SplitPlan, SynthConfig, TagRecord, balance,
                       build_dataset, compile_dataset, make_split, synth_generate)

__version__ = "0.1.0"
