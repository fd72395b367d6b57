from .normalize import normalize
from .vocab import BOS, EOS, PAD, SPECIALS, UNK, Vocabulary
from .bpe import CONTINUATION, END_OF_WORD, BpeModel, bpe_apply, bpe_decode, bpe_learn
from .textfile import read_id_text, write_id_text

__all__ = [
    "normalize",
    "BOS",
    "EOS",
    "PAD",
    "SPECIALS",
    "UNK",
    "Vocabulary",
    "CONTINUATION",
    "END_OF_WORD",
    "BpeModel",
    "bpe_apply",
    "bpe_decode",
    "bpe_learn",
    "read_id_text",
    "write_id_text",
]
