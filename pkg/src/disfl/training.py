"""Mini-batch SGD training with class-weighted loss and dev-monitored stopping.

Utterances are shuffled each epoch (seeded), grouped into padded batches, and
trained with plain SGD.  The learning rate is multiplied by ``lr_decay``
after every epoch.  After each epoch the dev set is tagged and scored; the
parameters of the epoch with the best dev F_rm are kept (earliest epoch wins
ties) and training stops once the number of consecutive epochs without
improvement exceeds ``patience``.

Vocabulary and class weights are derived from the training corpus only.  The
raw inverse-frequency weights scale the main loss by roughly the reciprocal
of the corpus size, far too small to train at sane learning rates, so by
default they are rescaled to unit mean over the training tag distribution;
ratios between classes are unchanged.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .corpus import (
    Corpus,
    PAD_ID,
    build_vocabulary,
    class_weights,
    encode_utterance,
    tag_indices,
)
from .metrics import score_sequences
from .model import (
    Hyperparams,
    NumericFault,
    Parameters,
    TaggerModel,
    backward,
    forward_batch,
    init_params,
    loss,
)

WEIGHT_NORMS = ("mean", "none")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    lr_decay: float = 0.9          # applied once per epoch
    batch_size: int = 32
    max_epochs: int = 50
    patience: int = 5              # epochs without dev F_rm improvement
    seed: int = 0
    min_count: int = 1
    weight_norm: str = "mean"
    rm_mode: str = "rm-only"

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if not 0 < self.lr_decay <= 1:
            raise ValueError("lr_decay must be in (0, 1]")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")
        if self.patience < 0:
            raise ValueError("patience must be >= 0")
        if self.weight_norm not in WEIGHT_NORMS:
            raise ValueError(f"weight_norm must be one of {WEIGHT_NORMS}")

    def to_json_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


@dataclass
class EpochRecord:
    epoch: int
    learning_rate: float
    loss_total: float
    loss_main: float
    loss_lm: float
    loss_reg: float
    dev_f_e: float
    dev_f_rm: float
    dev_f_rps: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class TrainReport:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = -1
    best_dev_f_rm: float = 0.0
    stopping_reason: str = ""
    train_seed: int = 0
    model_seed: int = 0

    def to_dict(self) -> dict:
        return {
            "epochs": [e.to_dict() for e in self.epochs],
            "best_epoch": self.best_epoch,
            "best_dev_f_rm": self.best_dev_f_rm,
            "stopping_reason": self.stopping_reason,
            "train_seed": self.train_seed,
            "model_seed": self.model_seed,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def sgd_step(params: Parameters, grads: dict[str, np.ndarray], lr: float) -> Parameters:
    """In-place w <- w - lr * g for every parameter array (biases included)."""
    for name, g in grads.items():
        if not np.isfinite(g).all():
            raise NumericFault(f"non-finite gradient for {name!r}")
        params.arrays[name] -= lr * g
    return params


def _encode_corpus(vocab, corpus: Corpus) -> list[tuple[list[int], list[int]]]:
    encoded = []
    for utt in corpus.utterances():
        tags = utt.tags
        if tags is None:
            raise ValueError("training utterances must carry gold tags")
        ids = encode_utterance(vocab, utt)
        encoded.append((ids, tag_indices(tags)))
    return encoded


def _make_batch(items: Sequence[tuple[list[int], list[int]]]):
    B = len(items)
    T = max(len(ids) - 1 for ids, _ in items)
    ids = np.full((B, T), PAD_ID, dtype=np.int64)
    lm_targets = np.full((B, T), PAD_ID, dtype=np.int64)
    tag_targets = np.zeros((B, T), dtype=np.int64)
    mask = np.zeros((B, T), dtype=np.float32)
    for b, (enc, tag_idx) in enumerate(items):
        k = len(enc) - 1  # number of real input tokens (EOS is target only)
        ids[b, :k] = enc[:-1]
        lm_targets[b, :k] = enc[1:]
        tag_targets[b, :k] = tag_idx
        mask[b, :k] = 1.0
    return ids, mask, tag_targets, lm_targets


def normalized_weight_vector(weights, counts_by_index: np.ndarray, mode: str) -> np.ndarray:
    """Rescale class weights so their token-frequency-weighted mean is one."""
    vec = weights.vector()
    if mode == "none":
        return vec
    total = counts_by_index.sum()
    mean = float((vec * counts_by_index).sum() / total) if total else 1.0
    if mean <= 0:
        return vec
    return vec / mean


def _gold_sequences(corpus: Corpus):
    out = []
    for utt in corpus.utterances():
        tags = utt.tags
        if tags is None:
            raise ValueError("dev corpus has untagged utterances")
        out.append(tags)
    return out


def train(train_corpus: Corpus, dev_corpus: Corpus, hyper: Hyperparams,
          config: TrainConfig) -> tuple[TaggerModel, TrainReport]:
    if len(train_corpus.dialogues) == 0 or len(dev_corpus.dialogues) == 0:
        raise ValueError("training and dev corpora must be non-empty")
    vocab = build_vocabulary(train_corpus, config.min_count)
    hyper = replace(hyper, vocab_size=vocab.size)
    weights = class_weights(train_corpus, hyper.gamma)

    encoded = _encode_corpus(vocab, train_corpus)
    counts_by_index = np.zeros(len(weights.vector()), dtype=np.float64)
    for _, tag_idx in encoded:
        for i in tag_idx:
            counts_by_index[i] += 1
    weight_vec = normalized_weight_vector(weights, counts_by_index, config.weight_norm)

    dev_gold = _gold_sequences(dev_corpus)

    params = init_params(hyper, seed=hyper.seed)
    model = TaggerModel(params, hyper, vocab)
    rng = np.random.default_rng(config.seed)
    report = TrainReport(train_seed=config.seed, model_seed=hyper.seed)
    best_params: Parameters | None = None
    non_improving = 0

    for epoch in range(config.max_epochs):
        lr = config.learning_rate * config.lr_decay**epoch
        order = rng.permutation(len(encoded))
        sums = {"total": 0.0, "main": 0.0, "lm": 0.0, "reg": 0.0}
        n_batches = 0
        for start in range(0, len(order), config.batch_size):
            chunk = [encoded[i] for i in order[start:start + config.batch_size]]
            ids, mask, tag_targets, lm_targets = _make_batch(chunk)
            trace = forward_batch(params, hyper, ids, mask)
            _, parts = loss(params, hyper, trace, tag_targets, lm_targets, weight_vec)
            grads = backward(params, hyper, trace, tag_targets, lm_targets, weight_vec)
            sgd_step(params, grads, lr)
            for key in sums:
                sums[key] += parts[key]
            n_batches += 1
        dev_pred = model.tag_corpus(dev_corpus)
        scores = score_sequences(dev_gold, dev_pred, config.rm_mode)
        record = EpochRecord(
            epoch=epoch,
            learning_rate=lr,
            loss_total=sums["total"] / n_batches,
            loss_main=sums["main"] / n_batches,
            loss_lm=sums["lm"] / n_batches,
            loss_reg=sums["reg"] / n_batches,
            dev_f_e=scores["f_e"],
            dev_f_rm=scores["f_rm"],
            dev_f_rps=scores["f_rps"],
        )
        report.epochs.append(record)
        if best_params is None or record.dev_f_rm > report.best_dev_f_rm:
            best_params = params.copy()
            report.best_epoch = epoch
            report.best_dev_f_rm = record.dev_f_rm
            non_improving = 0
        else:
            non_improving += 1
            if non_improving > config.patience:
                report.stopping_reason = "patience"
                break
    if not report.stopping_reason:
        report.stopping_reason = "max_epochs"
    model.params = best_params
    return model, report
