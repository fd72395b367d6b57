from .errors import (
    ConsistencyError,
    ContractError,
    NonFiniteError,
    ParameterError,
    ParseError,
    PhonestError,
    ShapeError,
    SpeakerLookupError,
    VocabIndexError,
)
from .tensor import Tensor, as_tensor, backward, matmul, no_grad
from .functional import (
    Mode,
    RunningStats,
    batch_norm,
    cross_entropy_label_smoothed,
    dropout,
    log_softmax,
    softmax,
)
from .optim import AdamState, adam_step
from .params import Parameters
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .rng import derive, derive_int, split, stream_seed

__all__ = [
    "ConsistencyError",
    "ContractError",
    "NonFiniteError",
    "ParameterError",
    "ParseError",
    "PhonestError",
    "ShapeError",
    "SpeakerLookupError",
    "VocabIndexError",
    "Tensor",
    "as_tensor",
    "backward",
    "matmul",
    "no_grad",
    "Mode",
    "RunningStats",
    "batch_norm",
    "cross_entropy_label_smoothed",
    "dropout",
    "log_softmax",
    "softmax",
    "AdamState",
    "adam_step",
    "Parameters",
    "Checkpoint",
    "load_checkpoint",
    "save_checkpoint",
    "derive",
    "derive_int",
    "split",
    "stream_seed",
]
