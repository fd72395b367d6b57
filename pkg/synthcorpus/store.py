"""Corpus directories on disk.

Layout::

    synth.json              corpus metadata (config, inventory, lexicon, prototypes, swaps)
    <split>.feats.jsonl     features
    <split>.ali.tsv         gold frame alignments
    <split>.src.txt         source transcripts
    <split>.ref<k>.txt      reference translations, k = 0, 1, ...

Only the feature, alignment and text files are required, so corpora
produced by external tools load the same way.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Dict, List

import numpy as np

from frontend.features import FeatureStore
from numcore.errors import ConsistencyError, ParseError
from phonesup.alignment import PhoneInventory
from phonesup.io import check_frame_counts, load_alignment, write_alignments
from textpipe.textfile import read_id_text, write_id_text

from .models import SPLITS, Corpus, Lexicon, Utterance

logger = logging.getLogger(__name__)

METADATA_FILE = "synth.json"


class CorpusStore:
    def __init__(self, root: Path) -> None:
        self.root = Path(root)

    def _path(self, split: str, suffix: str) -> Path:
        return self.root / f"{split}.{suffix}"

    def write(self, corpus: Corpus) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        swaps: Dict[str, List[int]] = {}
        for split in SPLITS:
            utterances = corpus.splits.get(split, [])
            FeatureStore(self._path(split, "feats.jsonl")).write_all(u.features for u in utterances)
            write_alignments(self._path(split, "ali.tsv"), (u.alignment for u in utterances))
            write_id_text(self._path(split, "src.txt"), ((u.utt_id, u.source) for u in utterances))
            n_refs = max((len(u.references) for u in utterances), default=0)
            for k in range(n_refs):
                write_id_text(
                    self._path(split, f"ref{k}.txt"),
                    ((u.utt_id, u.references[k] if k < len(u.references) else "") for u in utterances),
                )
            swaps.update({u.utt_id: u.swaps for u in utterances})
        metadata = {
            "config": corpus.config,
            "inventory": corpus.inventory.to_dict(),
            "lexicon": corpus.lexicon.to_dict() if corpus.lexicon else None,
            "prototypes": {k: v.tolist() for k, v in corpus.prototypes.items()},
            "swaps": swaps,
        }
        (self.root / METADATA_FILE).write_text(json.dumps(metadata, indent=1, sort_keys=True) + "\n", encoding="utf-8")
        logger.info("Wrote corpus to %s", self.root)

    def _read_split(self, split: str, swaps: Dict[str, List[int]]) -> List[Utterance]:
        features = {f.utt_id: f for f in FeatureStore(self._path(split, "feats.jsonl")).iter_records()}
        alignments = load_alignment(self._path(split, "ali.tsv"))
        check_frame_counts(alignments, {k: v.num_frames for k, v in features.items()})
        sources = read_id_text(self._path(split, "src.txt"))
        ref_streams = []
        k = 0
        while self._path(split, f"ref{k}.txt").exists():
            ref_streams.append(read_id_text(self._path(split, f"ref{k}.txt")))
            k += 1
        if not ref_streams:
            raise ParseError(f"no reference files for split {split}", str(self.root))

        utterances = []
        for utt_id, feats in features.items():
            if utt_id not in sources:
                raise ConsistencyError("missing source transcript", utt_id)
            refs = []
            for stream in ref_streams:
                if utt_id not in stream:
                    raise ConsistencyError("missing reference translation", utt_id)
                if stream[utt_id]:
                    refs.append(stream[utt_id])
            utterances.append(
                Utterance(
                    utt_id=utt_id,
                    speaker=feats.speaker,
                    features=feats,
                    alignment=alignments[utt_id],
                    source=sources[utt_id],
                    references=refs,
                    swaps=list(swaps.get(utt_id, [])),
                )
            )
        return utterances

    def read(self) -> Corpus:
        meta_path = self.root / METADATA_FILE
        metadata = json.loads(meta_path.read_text(encoding="utf-8")) if meta_path.exists() else {}
        swaps = metadata.get("swaps", {})
        splits = {split: self._read_split(split, swaps) for split in SPLITS if self._path(split, "feats.jsonl").exists()}
        if "inventory" in metadata:
            inventory = PhoneInventory.from_dict(metadata["inventory"])
        else:
            labels = sorted({label for utts in splits.values() for u in utts for label in u.alignment.labels})
            inventory = PhoneInventory(labels)
        lexicon = Lexicon.from_dict(metadata["lexicon"]) if metadata.get("lexicon") else None
        prototypes = {k: np.asarray(v, dtype=np.float64) for k, v in metadata.get("prototypes", {}).items()}
        logger.info("Read corpus from %s: %s", self.root, {k: len(v) for k, v in splits.items()})
        return Corpus(splits, inventory, lexicon, prototypes, metadata.get("config"))
