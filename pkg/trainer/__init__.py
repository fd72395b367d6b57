from .config import DEFAULT_FRAME_BUDGET, MAX_SOURCE_FRAMES, RunConfig
from .batching import BatchPlan, make_batches
from .schedule import PlateauSchedule, schedule_update
from .log import EpochRecord, TrainLog, TrainLogStore
from .data import Example, build_examples, check_corpus, degrade_alignments, normalize_speakers, prepare_corpus
from .loop import TrainResult, build_model, load_translator, train, train_step

__all__ = [
    "DEFAULT_FRAME_BUDGET",
    "MAX_SOURCE_FRAMES",
    "RunConfig",
    "BatchPlan",
    "make_batches",
    "PlateauSchedule",
    "schedule_update",
    "EpochRecord",
    "TrainLog",
    "TrainLogStore",
    "Example",
    "build_examples",
    "check_corpus",
    "degrade_alignments",
    "normalize_speakers",
    "prepare_corpus",
    "TrainResult",
    "build_model",
    "load_translator",
    "train",
    "train_step",
]
