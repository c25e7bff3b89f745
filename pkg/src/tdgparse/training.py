"""Losses, optimizer, learning-rate schedule, and the training procedures.

Three procedures share one loop: "baseline" and "dp_feature" take one
ranking-loss optimizer step per batch; "dp_distill" takes a discourse-profile
step and a ranking step per batch (order configurable, or a single joint
step). A single seeded generator drives parameter init, epoch shuffling, and
batching, so a run is fully determined by (config, corpora, labels, seed).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import (
    CONTENT_TYPE_INDEX,
    ContentType,
    Corpus,
    DpLabelMap,
    require_dp_coverage,
)
from .graph import ScoredCandidates, TemporalDependencyGraph, greedy_decode
from .scorer import (
    ModelConfig,
    RankingModel,
    Vocabulary,
    build_vocabulary,
    clone_params,
    init_params,
    zero_grads,
)

UPDATE_ORDERS = ("dp_then_rank", "rank_then_dp", "joint")
DECODE_ORDERS = ("score", "document")


class TrainingDiverged(Exception):
    """A loss or gradient went non-finite; the run cannot continue."""


@dataclass
class TrainConfig:
    variant: str = "baseline"
    max_epochs: int = 15
    batch_size_docs: int = 5
    peak_lr: float = 1e-4
    warmup_epochs: int = 5
    weight_decay: float = 0.01
    seeds: tuple[int, ...] = (0, 1, 2)
    update_order: str = "dp_then_rank"
    decode_order: str = "score"
    dim: int = 32
    hidden: int = 64

    def __post_init__(self) -> None:
        if self.max_epochs < 1 or self.batch_size_docs < 1:
            raise ValueError("max_epochs and batch_size_docs must be positive")
        if self.peak_lr <= 0 or self.weight_decay < 0:
            raise ValueError("peak_lr must be positive and weight_decay non-negative")
        if not 1 <= self.warmup_epochs <= self.max_epochs:
            raise ValueError("warmup_epochs must lie in [1, max_epochs]")
        if self.update_order not in UPDATE_ORDERS:
            raise ValueError(f"unknown update order {self.update_order!r}")
        if self.decode_order not in DECODE_ORDERS:
            raise ValueError(f"unknown decode order {self.decode_order!r}")
        if not self.seeds:
            raise ValueError("at least one seed is required")

    def model_config(self) -> ModelConfig:
        return ModelConfig(dim=self.dim, hidden=self.hidden, variant=self.variant)


def ranking_loss(scored: ScoredCandidates, gold: str) -> float:
    """-log softmax(score of the gold candidate); 0 iff gold is certain."""
    if gold not in scored.candidates:
        raise ValueError(f"gold {gold!r} is not a candidate of slot {scored.slot}")
    scores = np.asarray(scored.scores, dtype=np.float64)
    shifted = scores - scores.max()
    log_z = math.log(np.exp(shifted).sum())
    return float(log_z - shifted[scored.candidates.index(gold)])


def dp_loss(logits, teacher: ContentType) -> float:
    """9-way cross-entropy of a sentence's content-type logits."""
    logits = np.asarray(logits, dtype=np.float64)
    if logits.shape != (9,):
        raise ValueError(f"expected 9 logits, got shape {logits.shape}")
    shifted = logits - logits.max()
    log_z = math.log(np.exp(shifted).sum())
    return float(log_z - shifted[CONTENT_TYPE_INDEX[teacher]])


def lr_at(step: int, total_steps: int, warmup_steps: int, peak: float) -> float:
    """Linear warmup to ``peak`` at ``warmup_steps``, then linear decay to 0."""
    if not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    if not 0 < warmup_steps <= total_steps:
        raise ValueError("warmup_steps must lie in (0, total_steps]")
    if step <= warmup_steps:
        return peak * (step / warmup_steps)
    return peak * ((total_steps - step) / (total_steps - warmup_steps))


@dataclass
class OptimizerState:
    m: dict[str, np.ndarray]
    v: dict[str, np.ndarray]
    t: int = 0

    @classmethod
    def for_params(cls, params: dict[str, np.ndarray]) -> "OptimizerState":
        return cls(m=zero_grads(params), v=zero_grads(params))


def adamw_step(params: dict[str, np.ndarray], grads: dict[str, np.ndarray],
               state: OptimizerState, lr: float,
               betas: tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
               weight_decay: float = 0.0) -> None:
    """One decoupled-weight-decay Adam update, in place.

    theta <- theta - lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
    with bias-corrected moment estimates m_hat, v_hat.
    """
    b1, b2 = betas
    state.t += 1
    t = state.t
    for name, theta in params.items():
        g = grads[name]
        if not np.all(np.isfinite(g)):
            raise TrainingDiverged(f"non-finite gradient for parameter {name!r}")
        state.m[name] = b1 * state.m[name] + (1.0 - b1) * g
        state.v[name] = b2 * state.v[name] + (1.0 - b2) * g * g
        m_hat = state.m[name] / (1.0 - b1 ** t)
        v_hat = state.v[name] / (1.0 - b2 ** t)
        theta -= lr * (m_hat / (np.sqrt(v_hat) + eps) + weight_decay * theta)


@dataclass
class EpochRecord:
    epoch: int
    ranking_loss: float
    dp_loss: float | None
    valid_accuracy: float


@dataclass
class TrainHistory:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0

    def as_json(self) -> dict:
        return {
            "epochs": [
                {"epoch": e.epoch, "ranking_loss": e.ranking_loss,
                 "dp_loss": e.dp_loss, "valid_accuracy": e.valid_accuracy}
                for e in self.epochs
            ],
            "best_epoch": self.best_epoch,
        }


def decode_corpus(model: RankingModel, corpus: Corpus,
                  dp_labels: DpLabelMap | None = None,
                  order: str = "score") -> dict[str, TemporalDependencyGraph]:
    """Score and decode every document; keyed by document id."""
    out: dict[str, TemporalDependencyGraph] = {}
    for doc in corpus:
        scores = model.score_document(doc, dp_labels)
        out[doc.id] = greedy_decode(doc, scores, order=order)
    return out


def _attachment_accuracy(preds: dict[str, TemporalDependencyGraph],
                         corpus: Corpus) -> float:
    # local import: evaluation depends on graph, not on training
    from .evaluation import attachment_accuracy

    return attachment_accuracy(preds, corpus)


def train(config: TrainConfig, train_corpus: Corpus, valid_corpus: Corpus,
          dp_labels: DpLabelMap | None, seed: int,
          vocab: Vocabulary | None = None) -> tuple[RankingModel, TrainHistory]:
    """Run one seeded training job and return the best-epoch model.

    The learning-rate schedule is evaluated at 1-based optimizer-step
    indexes; dp_distill with a non-joint update order takes two optimizer
    steps per batch, and the schedule advances on each. Model selection keeps
    the epoch with the highest validation attachment accuracy (earliest on
    ties).
    """
    variant = config.variant
    if variant in ("dp_feature", "dp_distill"):
        if dp_labels is None:
            raise ValueError(f"variant {variant} requires discourse labels")
        require_dp_coverage(dp_labels, train_corpus, what="training corpus")
        if variant == "dp_feature":
            require_dp_coverage(dp_labels, valid_corpus, what="validation corpus")
    if not train_corpus:
        raise ValueError("training corpus is empty")

    rng = np.random.Generator(np.random.PCG64(seed))
    if vocab is None:
        vocab = build_vocabulary(train_corpus)
    model_config = config.model_config()
    model = RankingModel(model_config, vocab, init_params(model_config, vocab, rng))
    state = OptimizerState.for_params(model.params)

    docs = list(train_corpus)
    n_batches = math.ceil(len(docs) / config.batch_size_docs)
    steps_per_batch = 2 if variant == "dp_distill" and config.update_order != "joint" else 1
    steps_per_epoch = n_batches * steps_per_batch
    total_steps = steps_per_epoch * config.max_epochs
    warmup_steps = steps_per_epoch * config.warmup_epochs

    rank_labels = dp_labels if variant == "dp_feature" else None
    decode_labels = dp_labels if variant == "dp_feature" else None

    def step(grads) -> None:
        lr = lr_at(state.t + 1, total_steps, warmup_steps, config.peak_lr)
        adamw_step(model.params, grads, state, lr,
                   weight_decay=config.weight_decay)

    history = TrainHistory()
    best_params = clone_params(model.params)
    best_accuracy = -1.0
    for epoch in range(config.max_epochs):
        perm = rng.permutation(len(docs))
        rank_losses: list[float] = []
        dp_losses: list[float] = []
        for b in range(n_batches):
            batch = [docs[i] for i in perm[b * config.batch_size_docs:
                                           (b + 1) * config.batch_size_docs]]

            def batch_losses():
                if variant != "dp_distill":
                    loss, grads = model.ranking_loss_and_grads(batch, rank_labels)
                    yield "ranking", loss, grads
                elif config.update_order == "joint":
                    r_loss, r_grads = model.ranking_loss_and_grads(batch)
                    d_loss, d_grads = model.dp_loss_and_grads(batch, dp_labels)
                    grads = {k: r_grads[k] + d_grads[k] for k in r_grads}
                    dp_losses.append(d_loss)
                    rank_losses.append(r_loss)
                    yield "joint", r_loss + d_loss, grads
                elif config.update_order == "dp_then_rank":
                    d_loss, d_grads = model.dp_loss_and_grads(batch, dp_labels)
                    dp_losses.append(d_loss)
                    yield "dp", d_loss, d_grads
                    r_loss, r_grads = model.ranking_loss_and_grads(batch)
                    yield "ranking", r_loss, r_grads
                else:  # rank_then_dp
                    r_loss, r_grads = model.ranking_loss_and_grads(batch)
                    yield "ranking", r_loss, r_grads
                    d_loss, d_grads = model.dp_loss_and_grads(batch, dp_labels)
                    dp_losses.append(d_loss)
                    yield "dp", d_loss, d_grads

            for kind, loss, grads in batch_losses():
                if not math.isfinite(loss):
                    raise TrainingDiverged(
                        f"non-finite {kind} loss at epoch {epoch}, batch {b}"
                    )
                if kind == "ranking":
                    rank_losses.append(loss)
                step(grads)

        preds = decode_corpus(model, valid_corpus, decode_labels,
                              order=config.decode_order)
        accuracy = _attachment_accuracy(preds, valid_corpus)
        history.epochs.append(EpochRecord(
            epoch=epoch,
            ranking_loss=float(np.mean(rank_losses)) if rank_losses else 0.0,
            dp_loss=float(np.mean(dp_losses)) if dp_losses else None,
            valid_accuracy=accuracy,
        ))
        if accuracy > best_accuracy:
            best_accuracy = accuracy
            best_params = clone_params(model.params)
            history.best_epoch = epoch

    model.params = best_params
    return model, history
