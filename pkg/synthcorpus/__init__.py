from .config import FRAMES_PER_SECOND, GRAPHEMES, SynthConfig
from .models import SPLITS, Corpus, Lexicon, LexiconEntry, Utterance
from .generator import build_lexicon, build_prototypes, generate, generate_utterance, phone_inventory
from .subset import subset
from .store import CorpusStore

__all__ = [
    "FRAMES_PER_SECOND",
    "GRAPHEMES",
    "SynthConfig",
    "SPLITS",
    "Corpus",
    "Lexicon",
    "LexiconEntry",
    "Utterance",
    "build_lexicon",
    "build_prototypes",
    "generate",
    "generate_utterance",
    "phone_inventory",
    "subset",
    "CorpusStore",
]
