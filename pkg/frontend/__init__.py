from .dsp import Frames, frame_signal, log_mel, log_mel_frames, mel_center_frequencies, mel_filterbank
from .features import FeatureMatrix, FeatureStore, extract_features, extract_wav, read_wav
from .cmvn import SpeakerStats, apply_stats, cmvn, compute_stats

__all__ = [
    "Frames",
    "frame_signal",
    "log_mel",
    "log_mel_frames",
    "mel_center_frequencies",
    "mel_filterbank",
    "FeatureMatrix",
    "FeatureStore",
    "extract_features",
    "extract_wav",
    "read_wav",
    "SpeakerStats",
    "apply_stats",
    "cmvn",
    "compute_stats",
]
