"""Deterministic synthetic phone-grounded parallel corpus.

Each utterance samples words from a fixed lexicon, spells them as phones
with silence around every word, draws a duration per phone and renders
frames from per-phone prototype vectors. Frames near a phone boundary are
blended towards the neighbouring prototype; Gaussian noise is added last.
The translation is the lexicon image of the words with some adjacent pairs
swapped.
"""

from __future__ import annotations

import logging
from multiprocessing import Pool
from typing import Dict, List, Optional, Tuple

import numpy as np

from frontend.features import FeatureMatrix
from numcore.rng import derive
from phonesup.alignment import SILENCE, PhoneAlignment, PhoneInventory

from .config import GRAPHEMES, SynthConfig
from .models import SPLITS, Corpus, Lexicon, LexiconEntry, Utterance

logger = logging.getLogger(__name__)

TARGET_CONSONANTS = "bdfgklmnprstvz"
TARGET_VOWELS = "aeiou"


def phone_inventory(config: SynthConfig) -> PhoneInventory:
    return PhoneInventory(list(GRAPHEMES[: config.n_phones]), SILENCE)


def _target_word(rng: np.random.Generator) -> str:
    syllables = int(rng.integers(2, 4))
    return "".join(
        TARGET_CONSONANTS[int(rng.integers(len(TARGET_CONSONANTS)))] + TARGET_VOWELS[int(rng.integers(len(TARGET_VOWELS)))]
        for _ in range(syllables)
    )


def build_lexicon(config: SynthConfig) -> Lexicon:
    rng = derive(config.seed, "lexicon")
    phones = GRAPHEMES[: config.n_phones]
    seen_phones = set()
    seen_targets = set()
    entries: List[LexiconEntry] = []
    while len(entries) < config.lexicon_size:
        length = int(rng.integers(config.word_phones_min, config.word_phones_max + 1))
        sequence = [int(rng.integers(config.n_phones))]
        while len(sequence) < length:
            step = int(rng.integers(config.n_phones - 1))
            sequence.append(step if step < sequence[-1] else step + 1)
        key = tuple(sequence)
        if key in seen_phones:
            continue
        target = _target_word(rng)
        while target in seen_targets:
            target = _target_word(rng)
        seen_phones.add(key)
        seen_targets.add(target)
        labels = [phones[i] for i in sequence]
        entries.append(LexiconEntry(spelling="".join(labels), phones=labels, target=target))
    return Lexicon(entries)


def build_prototypes(config: SynthConfig, inventory: PhoneInventory) -> Dict[str, np.ndarray]:
    rng = derive(config.seed, "prototypes")
    matrix = rng.standard_normal((len(inventory), config.feature_dim))
    return {label: matrix[i] for i, label in enumerate(inventory.phones)}


def speaker_offsets(config: SynthConfig) -> Dict[str, np.ndarray]:
    rng = derive(config.seed, "speakers")
    draws = rng.standard_normal((config.n_speakers, config.feature_dim)) * config.speaker_shift
    return {speaker_name(i): draws[i] for i in range(config.n_speakers)}


def speaker_name(index: int) -> str:
    return f"spk{index:02d}"


def draw_swaps(n_words: int, prob: float, rng: np.random.Generator) -> List[int]:
    """Left-to-right, non-overlapping adjacent swaps; returns the left index of each swapped pair."""
    swaps: List[int] = []
    i = 0
    while i < n_words - 1:
        if rng.random() < prob:
            swaps.append(i)
            i += 2
        else:
            i += 1
    return swaps


def blend_weights(length: int, width: int) -> Tuple[np.ndarray, np.ndarray]:
    """Per-frame blend weight towards the previous and the next segment (each < 0.5)."""
    towards_prev = np.zeros(length)
    towards_next = np.zeros(length)
    if width == 0:
        return towards_prev, towards_next
    for t in range(length):
        from_start = t + 1
        from_end = length - t
        if from_start <= width and from_start <= from_end:
            towards_prev[t] = 0.5 * (width - from_start + 1) / (width + 1)
        elif from_end <= width:
            towards_next[t] = 0.5 * (width - from_end + 1) / (width + 1)
    return towards_prev, towards_next


def render_frames(
    phone_sequence: List[str],
    durations: np.ndarray,
    prototypes: Dict[str, np.ndarray],
    width: int,
) -> np.ndarray:
    """Noise-free frames for a phone sequence with coarticulation blending."""
    blocks = []
    for i, (label, length) in enumerate(zip(phone_sequence, durations)):
        own = prototypes[label]
        prev_proto = prototypes[phone_sequence[i - 1]] if i > 0 else own
        next_proto = prototypes[phone_sequence[i + 1]] if i + 1 < len(phone_sequence) else own
        to_prev, to_next = blend_weights(int(length), width)
        keep = 1.0 - to_prev - to_next
        blocks.append(keep[:, None] * own + to_prev[:, None] * prev_proto + to_next[:, None] * next_proto)
    return np.concatenate(blocks, axis=0)


def generate_utterance(
    config: SynthConfig,
    lexicon: Lexicon,
    prototypes: Dict[str, np.ndarray],
    offsets: Dict[str, np.ndarray],
    split: str,
    index: int,
) -> Utterance:
    rng = derive(config.seed, "utt", split, index)
    n_words = int(rng.integers(config.sentence_min, config.sentence_max + 1))
    chosen = [lexicon.entries[int(i)] for i in rng.integers(0, len(lexicon), size=n_words)]
    swaps = draw_swaps(n_words, config.reorder_prob, rng)

    phone_sequence: List[str] = [SILENCE]
    for entry in chosen:
        phone_sequence.extend(entry.phones)
        phone_sequence.append(SILENCE)
    lam = config.duration_mean - config.duration_min
    durations = config.duration_min + rng.poisson(lam, size=len(phone_sequence))
    durations = np.clip(durations, config.duration_min, config.duration_max)

    speaker = speaker_name(index % config.n_speakers)
    clean = render_frames(phone_sequence, durations, prototypes, config.coarticulation_width)
    frames = clean + offsets[speaker] + rng.normal(0.0, config.noise_sigma, size=clean.shape)
    labels = [label for label, length in zip(phone_sequence, durations) for _ in range(int(length))]

    words = [e.spelling for e in chosen]
    utt_id = f"{split}-{index:05d}"
    return Utterance(
        utt_id=utt_id,
        speaker=speaker,
        features=FeatureMatrix(utt_id, speaker, frames),
        alignment=PhoneAlignment(utt_id, labels),
        source=" ".join(words),
        references=[" ".join(lexicon.translate(words, swaps))],
        swaps=swaps,
    )


def _generate_one(args) -> Utterance:
    return generate_utterance(*args)


def generate(config: SynthConfig, workers: int = 1, splits: Optional[Dict[str, int]] = None) -> Corpus:
    """Build the train/dev/test corpus; identical output for any worker count."""
    inventory = phone_inventory(config)
    lexicon = build_lexicon(config)
    prototypes = build_prototypes(config, inventory)
    offsets = speaker_offsets(config)
    sizes = splits or config.split_sizes

    result: Dict[str, List[Utterance]] = {}
    for split in SPLITS:
        jobs = [(config, lexicon, prototypes, offsets, split, i) for i in range(sizes.get(split, 0))]
        if workers > 1 and len(jobs) > 1:
            with Pool(processes=workers) as pool:
                result[split] = pool.map(_generate_one, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
        else:
            result[split] = [_generate_one(job) for job in jobs]
        logger.info("Generated %d %s utterances", len(result[split]), split)

    return Corpus(
        splits=result,
        inventory=inventory,
        lexicon=lexicon,
        prototypes=prototypes,
        config=config.model_dump(mode="json"),
    )
