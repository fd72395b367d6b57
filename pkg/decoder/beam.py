"""Length-normalised beam search over a frozen Seq2Seq snapshot."""

from __future__ import annotations

import logging
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from numcore.errors import ContractError, ParameterError
from numcore.functional import Mode
from numcore.tensor import no_grad
from stmodel.batch import SourceBatch
from stmodel.model import Seq2Seq
from textpipe.vocab import Vocabulary

from .models import DecodeResult, Hypothesis

logger = logging.getLogger(__name__)

DEFAULT_BEAM = 15
DEFAULT_ALPHA = 1.5
# Never generated: padding and the start symbol.
BANNED_IDS = (Vocabulary.pad_id, Vocabulary.bos_id)


def norm_score(logprob: float, length: int, alpha: float = DEFAULT_ALPHA) -> float:
    """logprob / length**alpha, with length counted without <s>."""
    if length < 1:
        raise ContractError("norm_score needs length >= 1")
    return logprob / float(length) ** alpha


def default_max_len(encoder_length: int) -> int:
    return 2 * int(encoder_length) + 10


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _optimistic(logprob: float, limit: int, alpha: float) -> float:
    # Log-probabilities only fall; a negative total scores best at the longest length.
    return logprob / float(limit) ** alpha if logprob < 0 else 0.0


def _step_log_probs(logits: np.ndarray, banned: Iterable[int], eos_id: int, final: bool) -> np.ndarray:
    logp = _log_softmax(logits)
    banned = [b for b in banned if b != eos_id]
    if banned:
        logp[:, banned] = -np.inf
    if final:
        # At the length limit every live hypothesis is closed with </s>.
        keep = logp[:, eos_id].copy()
        logp[:] = -np.inf
        logp[:, eos_id] = keep
    return logp


def _top_candidates(totals: np.ndarray, live: Sequence[Hypothesis], beam: int) -> List[Tuple[float, Tuple[int, ...], int]]:
    """Best `beam` (total, tokens, parent) by total log-probability, ties to the smaller sequence."""
    flat = totals.reshape(-1)
    finite = np.flatnonzero(np.isfinite(flat))
    if finite.size == 0:
        return []
    if finite.size > beam:
        threshold = np.partition(flat[finite], finite.size - beam)[finite.size - beam]
        finite = finite[flat[finite] >= threshold]
    vocab = totals.shape[1]
    cands = [(float(flat[j]), live[j // vocab].tokens + (int(j % vocab),), int(j // vocab)) for j in finite]
    cands.sort(key=lambda c: (-c[0], c[1]))
    return cands[:beam]


def beam_search(
    model: Seq2Seq,
    source: SourceBatch,
    beam: int = DEFAULT_BEAM,
    alpha: float = DEFAULT_ALPHA,
    max_len: Optional[int] = None,
    nbest: int = 1,
    eos_id: int = Vocabulary.eos_id,
    banned: Sequence[int] = BANNED_IDS,
) -> DecodeResult:
    """Decode one utterance (a batch of size 1).

    Candidates from all live hypotheses compete for `beam` slots by total
    log-probability; those ending in </s> move to the finished set. Search
    stops once no live hypothesis can beat the best finished normalised
    score, or at `max_len` (default 2 x encoder length + 10), where the
    remaining hypotheses are closed with </s> and flagged.
    """
    if beam < 1:
        raise ParameterError(f"beam must be >= 1, got {beam}")
    if source.size != 1:
        raise ContractError(f"beam_search decodes one utterance at a time, got a batch of {source.size}")
    with no_grad():
        encoded = model.encode(source, Mode.EVAL)
        limit = max_len if max_len is not None else default_max_len(encoded.lengths[0])
        if limit < 1:
            raise ParameterError(f"max_len must be >= 1, got {limit}")
        live: List[Hypothesis] = [Hypothesis(tokens=(), logprob=0.0, score=0.0)]
        state = model.init_state(1)
        finished: List[Hypothesis] = []

        for step in range(1, limit + 1):
            prev = np.asarray([h.tokens[-1] if h.tokens else Vocabulary.bos_id for h in live], dtype=np.int64)
            logits, new_state, _ = model.decode_step(prev, state, encoded.select(np.zeros(len(live), dtype=np.int64)))
            logp = _step_log_probs(logits.values, banned, eos_id, final=step == limit)
            totals = np.asarray([h.logprob for h in live])[:, None] + logp

            next_live: List[Hypothesis] = []
            parents: List[int] = []
            for total, tokens, parent in _top_candidates(totals, live, beam):
                score = norm_score(total, len(tokens), alpha)
                if tokens[-1] == eos_id:
                    finished.append(Hypothesis(tokens, total, score, finished=True, hit_max_len=step == limit))
                else:
                    next_live.append(Hypothesis(tokens, total, score))
                    parents.append(parent)
            if not next_live:
                break
            live = next_live
            state = new_state.reorder(parents)
            if finished:
                best_done = max(h.score for h in finished)
                if best_done > max(_optimistic(h.logprob, limit, alpha) for h in live):
                    break

    if not finished:
        # Unreachable with a finite eos probability; kept for a fully banned vocabulary.
        ranked = sorted(live, key=lambda h: (-h.score, h.tokens))
        flagged = [Hypothesis(h.tokens, h.logprob, h.score, finished=False, hit_max_len=True) for h in ranked]
        return DecodeResult(best=flagged[0], nbest=flagged[:nbest], max_len=limit)
    ranked = sorted(finished, key=lambda h: (-h.score, h.tokens))
    if ranked[0].hit_max_len:
        logger.debug("best hypothesis reached the length limit of %d", limit)
    return DecodeResult(best=ranked[0], nbest=ranked[:nbest], max_len=limit)


def greedy_decode(
    model: Seq2Seq,
    source: SourceBatch,
    alpha: float = DEFAULT_ALPHA,
    max_len: Optional[int] = None,
    eos_id: int = Vocabulary.eos_id,
    banned: Sequence[int] = BANNED_IDS,
) -> Hypothesis:
    """Arg-max token at every step, closing with </s> at the length limit."""
    with no_grad():
        encoded = model.encode(source, Mode.EVAL)
        limit = max_len if max_len is not None else default_max_len(encoded.lengths[0])
        state = model.init_state(1)
        tokens: Tuple[int, ...] = ()
        logprob = 0.0
        for step in range(1, limit + 1):
            prev = np.asarray([tokens[-1] if tokens else Vocabulary.bos_id], dtype=np.int64)
            logits, state, _ = model.decode_step(prev, state, encoded)
            logp = _step_log_probs(logits.values, banned, eos_id, final=step == limit)[0]
            best = float(logp.max())
            token = int(np.flatnonzero(logp == best)[0])
            tokens += (token,)
            logprob += best
            if token == eos_id:
                return Hypothesis(tokens, logprob, norm_score(logprob, len(tokens), alpha), True, step == limit)
    return Hypothesis(tokens, logprob, norm_score(logprob, len(tokens), alpha), False, True)


def score_sequence(model: Seq2Seq, source: SourceBatch, tokens: Sequence[int]) -> float:
    """Total log-probability of a forced token sequence (teacher forcing, eval mode)."""
    if not tokens:
        raise ContractError("score_sequence needs at least one token")
    with no_grad():
        encoded = model.encode(source, Mode.EVAL)
        state = model.init_state(1)
        prev = Vocabulary.bos_id
        total = 0.0
        for token in tokens:
            logits, state, _ = model.decode_step(np.asarray([prev], dtype=np.int64), state, encoded)
            total += float(_log_softmax(logits.values)[0, token])
            prev = token
    return total
