"""Compact trainable scorer for candidate reference ranking.

The scorer embeds tokens, represents mentions and sentences as embedding
means, and scores each (child slot, candidate) pair with a small relu MLP
over concatenated representation blocks plus a handful of scalar features.
Three variants share this machinery:

- "baseline": sentence representations are plain token means;
- "dp_feature": the sentence's discourse content-type marker token is
  appended to the token set before averaging, so labels are needed to score;
- "dp_distill": representations match the baseline, but the model carries a
  linear discourse-profile head over sentence representations that training
  can supervise alongside the ranking objective.

All arithmetic is float64 numpy, gradients are computed analytically, and
``finite_difference_check`` verifies them with central differences.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import (
    CONTENT_TYPE_INDEX,
    CONTENT_TYPES,
    DCT,
    NO_EVENT,
    ROOT,
    ContentType,
    Corpus,
    Document,
    DpLabelMap,
    require_dp_coverage,
)
from .graph import ScoredCandidates, Slot, candidate_set, slot_instances


class ScorerError(Exception):
    """The scorer was configured or invoked inconsistently."""


VARIANTS = ("baseline", "dp_feature", "dp_distill")

UNK_TOKEN = "<unk>"
CHILD_MARK = "$"
CAND_MARK = "@"
CONTENT_MARKERS = tuple(f"#{ct.value}#" for ct in CONTENT_TYPES)
RESERVED_TOKENS = (UNK_TOKEN, CHILD_MARK, CAND_MARK) + CONTENT_MARKERS

UNK_INDEX = 0
CHILD_MARK_INDEX = 1
CAND_MARK_INDEX = 2
MARKER_BASE_INDEX = 3

_META_ROW = {DCT: 0, ROOT: 1, NO_EVENT: 2}

# scalar feature block: 5 sentence-distance buckets (0, 1, 2, 3-5, >=6),
# child-precedes-candidate, same-sentence, is-DCT, is-ROOT, is-NO_EVENT
N_SCALAR_FEATURES = 10

PARAM_ORDER = ("embeddings", "meta_embeddings", "w1", "b1", "w2", "b2",
               "dp_weight", "dp_bias")


def feature_dim(dim: int) -> int:
    return 5 * dim + N_SCALAR_FEATURES


def _distance_bucket(delta: int) -> int:
    if delta <= 2:
        return delta
    if delta <= 5:
        return 3
    return 4


@dataclass(frozen=True)
class ModelConfig:
    dim: int = 32
    hidden: int = 64
    variant: str = "baseline"

    def __post_init__(self) -> None:
        if self.variant not in VARIANTS:
            raise ScorerError(f"unknown variant {self.variant!r}")
        if self.dim < 1 or self.hidden < 1:
            raise ScorerError("dim and hidden must be positive")


class Vocabulary:
    """Token-to-index map with reserved marker tokens at fixed positions.

    Corpus tokens are lowercased; unknown tokens map to ``<unk>``. Marker
    tokens (child/candidate marks and the content-type markers) occupy fixed
    indices at the front and are addressed directly, not through ``lookup``.
    """

    def __init__(self, tokens: list[str]):
        if tuple(tokens[: len(RESERVED_TOKENS)]) != RESERVED_TOKENS:
            raise ScorerError("vocabulary must start with the reserved tokens")
        self.tokens = list(tokens)
        self.index = {t: i for i, t in enumerate(self.tokens)}
        if len(self.index) != len(self.tokens):
            raise ScorerError("vocabulary contains duplicate tokens")

    def __len__(self) -> int:
        return len(self.tokens)

    def lookup(self, token: str) -> int:
        return self.index.get(token.lower(), UNK_INDEX)

    def marker_index(self, content_type: ContentType) -> int:
        return MARKER_BASE_INDEX + CONTENT_TYPE_INDEX[content_type]


def build_vocabulary(corpus: Corpus) -> Vocabulary:
    seen: set[str] = set()
    for doc in corpus:
        for sent in doc.sentences:
            for token in sent.tokens:
                seen.add(token.lower())
    ordered = sorted(seen - set(RESERVED_TOKENS))
    return Vocabulary(list(RESERVED_TOKENS) + ordered)


def init_params(config: ModelConfig, vocab: Vocabulary,
                rng: np.random.Generator) -> dict[str, np.ndarray]:
    """Uniform(-0.05, 0.05) weights drawn in a fixed order; biases start at zero."""
    d, h = config.dim, config.hidden
    f = feature_dim(d)
    scale = 0.05
    params = {
        "embeddings": rng.uniform(-scale, scale, (len(vocab), d)),
        "meta_embeddings": rng.uniform(-scale, scale, (3, d)),
        "w1": rng.uniform(-scale, scale, (h, f)),
        "b1": np.zeros(h),
        "w2": rng.uniform(-scale, scale, h),
        "b2": np.zeros(()),
        "dp_weight": rng.uniform(-scale, scale, (9, d)),
        "dp_bias": np.zeros(9),
    }
    return {name: params[name] for name in PARAM_ORDER}


def zero_grads(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(arr) for name, arr in params.items()}


def clone_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {name: arr.copy() for name, arr in params.items()}


def _softmax(x: np.ndarray) -> np.ndarray:
    shifted = x - x.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


class _SlotIndex:
    """Integer-indexed view of one slot's candidates for fast gather/scatter."""

    __slots__ = ("slot", "candidates", "child_row", "child_sent", "is_meta",
                 "cand_row", "cand_sent", "scalars", "gold")

    def __init__(self, doc: Document, slot: Slot, mention_row: dict[str, int],
                 order_pos: dict[str, int]):
        self.slot = slot
        self.candidates = candidate_set(doc, slot)
        child = doc.mention(slot.child)
        self.child_row = mention_row[slot.child]
        self.child_sent = child.sentence
        k = len(self.candidates)
        self.is_meta = np.zeros(k, dtype=bool)
        self.cand_row = np.zeros(k, dtype=np.int64)
        self.cand_sent = np.full(k, -1, dtype=np.int64)
        self.scalars = np.zeros((k, N_SCALAR_FEATURES))
        for i, cand in enumerate(self.candidates):
            if cand in _META_ROW:
                self.is_meta[i] = True
                self.cand_row[i] = _META_ROW[cand]
                self.scalars[i, 7 + _META_ROW[cand]] = 1.0
            else:
                other = doc.mention(cand)
                self.cand_row[i] = mention_row[cand]
                self.cand_sent[i] = other.sentence
                self.scalars[i, _distance_bucket(abs(child.sentence - other.sentence))] = 1.0
                if order_pos[slot.child] < order_pos[cand]:
                    self.scalars[i, 5] = 1.0
                if child.sentence == other.sentence:
                    self.scalars[i, 6] = 1.0
        gold = doc.gold_parent(slot.child, slot.slot)
        self.gold = self.candidates.index(gold) if gold in self.candidates else -1


class _DocIndex:
    """Per-document token/candidate index tables, independent of parameters."""

    __slots__ = ("doc", "dp_labels", "sent_tokens", "sent_base_tokens",
                 "mention_tokens", "mention_row", "slots")

    def __init__(self, doc: Document, vocab: Vocabulary, variant: str,
                 dp_labels: DpLabelMap | None):
        self.doc = doc
        self.dp_labels = dp_labels
        self.sent_base_tokens = [
            np.array([vocab.lookup(t) for t in s.tokens], dtype=np.int64)
            for s in doc.sentences
        ]
        if variant == "dp_feature":
            if dp_labels is None:
                raise ScorerError(
                    "variant dp_feature requires discourse labels to score"
                )
            self.sent_tokens = []
            for s in doc.sentences:
                marker = vocab.marker_index(dp_labels[(doc.id, s.index)])
                base = self.sent_base_tokens[s.index]
                self.sent_tokens.append(np.append(base, marker))
        else:
            self.sent_tokens = self.sent_base_tokens
        ordered = doc.ordered_mentions()
        self.mention_row = {m.id: i for i, m in enumerate(ordered)}
        order_pos = {m.id: i for i, m in enumerate(ordered)}
        self.mention_tokens = [
            np.array([vocab.lookup(t)
                      for t in doc.sentences[m.sentence].tokens[m.start:m.end]],
                     dtype=np.int64)
            for m in ordered
        ]
        self.slots = [_SlotIndex(doc, slot, self.mention_row, order_pos)
                      for slot in slot_instances(doc)]


class _DocReprs:
    """Parameter-dependent representation tables for one document."""

    __slots__ = ("sent_phi", "sent_base", "child", "cand")

    def __init__(self, idx: _DocIndex, params: dict[str, np.ndarray], dim: int):
        emb = params["embeddings"]

        def mean_rows(ix_list: list[np.ndarray]) -> np.ndarray:
            if not ix_list:
                return np.zeros((0, dim))
            return np.stack([emb[ix].mean(axis=0) for ix in ix_list])

        self.sent_base = mean_rows(idx.sent_base_tokens)
        if idx.sent_tokens is idx.sent_base_tokens:
            self.sent_phi = self.sent_base
        else:
            self.sent_phi = mean_rows(idx.sent_tokens)
        token_means = mean_rows(idx.mention_tokens)
        self.child = token_means + emb[CHILD_MARK_INDEX]
        self.cand = token_means + emb[CAND_MARK_INDEX]


class RankingModel:
    """Candidate scorer plus discourse-profile head over shared embeddings."""

    def __init__(self, config: ModelConfig, vocab: Vocabulary,
                 params: dict[str, np.ndarray]):
        expected = set(PARAM_ORDER)
        if set(params) != expected:
            raise ScorerError(f"params must have exactly the keys {sorted(expected)}")
        if params["embeddings"].shape != (len(vocab), config.dim):
            raise ScorerError("embedding table does not match vocabulary/config")
        self.config = config
        self.vocab = vocab
        self.params = params
        self._index_cache: dict[str, _DocIndex] = {}

    @classmethod
    def initialized(cls, config: ModelConfig, vocab: Vocabulary,
                    seed: int) -> "RankingModel":
        rng = np.random.Generator(np.random.PCG64(seed))
        return cls(config, vocab, init_params(config, vocab, rng))

    def _index(self, doc: Document, dp_labels: DpLabelMap | None) -> _DocIndex:
        cached = self._index_cache.get(doc.id)
        if cached is not None and cached.doc is doc and (
                self.config.variant != "dp_feature"
                or cached.dp_labels is dp_labels):
            return cached
        idx = _DocIndex(doc, self.vocab, self.config.variant, dp_labels)
        self._index_cache[doc.id] = idx
        return idx

    def _slot_features(self, idx: _DocIndex, reprs: _DocReprs,
                       si: _SlotIndex) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Assemble Phi (K, f); also return the candidate block A and child u."""
        d = self.config.dim
        k = len(si.candidates)
        u = reprs.child[si.child_row]
        s_c = reprs.sent_phi[si.child_sent]
        a = np.empty((k, d))
        meta = si.is_meta
        if meta.any():
            a[meta] = self.params["meta_embeddings"][si.cand_row[meta]]
        if (~meta).any():
            a[~meta] = reprs.cand[si.cand_row[~meta]]
        s_a = np.zeros((k, d))
        if (~meta).any():
            s_a[~meta] = reprs.sent_phi[si.cand_sent[~meta]]
        phi = np.empty((k, feature_dim(d)))
        phi[:, 0:d] = u
        phi[:, d:2 * d] = s_c
        phi[:, 2 * d:3 * d] = a
        phi[:, 3 * d:4 * d] = s_a
        phi[:, 4 * d:5 * d] = u * a
        phi[:, 5 * d:] = si.scalars
        return phi, a, u

    def _slot_scores(self, phi: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        z = phi @ self.params["w1"].T + self.params["b1"]
        r = np.maximum(z, 0.0)
        s = r @ self.params["w2"] + self.params["b2"]
        return z, r, s

    def score_document(self, doc: Document,
                       dp_labels: DpLabelMap | None = None) -> dict[Slot, ScoredCandidates]:
        """Score every candidate of every slot of one document."""
        idx = self._index(doc, dp_labels)
        reprs = _DocReprs(idx, self.params, self.config.dim)
        out: dict[Slot, ScoredCandidates] = {}
        for si in idx.slots:
            phi, _, _ = self._slot_features(idx, reprs, si)
            _, _, s = self._slot_scores(phi)
            out[si.slot] = ScoredCandidates(si.slot, list(si.candidates),
                                            [float(v) for v in s])
        return out

    def dp_logits(self, doc: Document) -> np.ndarray:
        """(n_sentences, 9) content-type logits from plain sentence means."""
        idx = self._index(doc, None) if self.config.variant != "dp_feature" else \
            _DocIndex(doc, self.vocab, "baseline", None)
        reprs = _DocReprs(idx, self.params, self.config.dim)
        return reprs.sent_base @ self.params["dp_weight"].T + self.params["dp_bias"]

    def _scatter_doc(self, idx: _DocIndex, grads: dict[str, np.ndarray],
                     d_child: np.ndarray, d_cand: np.ndarray,
                     d_sent_phi: np.ndarray, d_sent_base: np.ndarray | None) -> None:
        """Push representation gradients down to the embedding table."""
        demb = grads["embeddings"]
        for row, ix in enumerate(idx.mention_tokens):
            gc = d_child[row]
            ga = d_cand[row]
            if gc.any():
                np.add.at(demb, ix, gc / len(ix))
                demb[CHILD_MARK_INDEX] += gc
            if ga.any():
                np.add.at(demb, ix, ga / len(ix))
                demb[CAND_MARK_INDEX] += ga
        for j, ix in enumerate(idx.sent_tokens):
            g = d_sent_phi[j]
            if g.any():
                np.add.at(demb, ix, g / len(ix))
        if d_sent_base is not None:
            for j, ix in enumerate(idx.sent_base_tokens):
                g = d_sent_base[j]
                if g.any():
                    np.add.at(demb, ix, g / len(ix))

    def ranking_loss_and_grads(
        self, docs: list[Document], dp_labels: DpLabelMap | None = None,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean listwise cross-entropy over every slot, with full gradients.

        Each slot contributes -log softmax(scores)[gold]; the mean runs over
        all slots of all documents in the batch.
        """
        grads = zero_grads(self.params)
        d = self.config.dim
        w1, w2 = self.params["w1"], self.params["w2"]
        indexes = [self._index(doc, dp_labels) for doc in docs]
        n_slots = sum(len(idx.slots) for idx in indexes)
        if n_slots == 0:
            return 0.0, grads
        total = 0.0
        for idx in indexes:
            reprs = _DocReprs(idx, self.params, d)
            n_m = len(idx.mention_tokens)
            n_s = len(idx.doc.sentences)
            d_child = np.zeros((n_m, d))
            d_cand = np.zeros((n_m, d))
            d_sent = np.zeros((n_s, d))
            d_meta = grads["meta_embeddings"]
            for si in idx.slots:
                if si.gold < 0:
                    raise ScorerError(
                        f"document {idx.doc.id}: slot {si.slot} has no gold parent"
                    )
                phi, a, u = self._slot_features(idx, reprs, si)
                z, r, s = self._slot_scores(phi)
                p = _softmax(s)
                total -= np.log(p[si.gold])
                g = p / n_slots
                g[si.gold] -= 1.0 / n_slots
                grads["b2"] += g.sum()
                grads["w2"] += r.T @ g
                dz = np.outer(g, w2) * (z > 0)
                grads["w1"] += dz.T @ phi
                grads["b1"] += dz.sum(axis=0)
                dphi = dz @ w1
                du = dphi[:, 0:d] + dphi[:, 4 * d:5 * d] * a
                da = dphi[:, 2 * d:3 * d] + dphi[:, 4 * d:5 * d] * u
                d_child[si.child_row] += du.sum(axis=0)
                d_sent[si.child_sent] += dphi[:, d:2 * d].sum(axis=0)
                meta = si.is_meta
                if meta.any():
                    np.add.at(d_meta, si.cand_row[meta], da[meta])
                if (~meta).any():
                    np.add.at(d_cand, si.cand_row[~meta], da[~meta])
                    np.add.at(d_sent, si.cand_sent[~meta], dphi[:, 3 * d:4 * d][~meta])
            self._scatter_doc(idx, grads, d_child, d_cand, d_sent, None)
        return float(total / n_slots), grads

    def dp_loss_and_grads(
        self, docs: list[Document], dp_labels: DpLabelMap,
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean 9-way cross-entropy of the discourse head over all sentences."""
        require_dp_coverage(dp_labels, docs, what="batch")
        grads = zero_grads(self.params)
        wd = self.params["dp_weight"]
        indexes = [self._index(doc, dp_labels) for doc in docs]
        n_sents = sum(len(idx.doc.sentences) for idx in indexes)
        if n_sents == 0:
            return 0.0, grads
        total = 0.0
        for idx in indexes:
            reprs = _DocReprs(idx, self.params, self.config.dim)
            s = reprs.sent_base
            labels = np.array(
                [CONTENT_TYPE_INDEX[dp_labels[(idx.doc.id, j.index)]]
                 for j in idx.doc.sentences], dtype=np.int64)
            logits = s @ wd.T + self.params["dp_bias"]
            p = _softmax(logits)
            rows = np.arange(len(labels))
            total -= np.log(p[rows, labels]).sum()
            g = p / n_sents
            g[rows, labels] -= 1.0 / n_sents
            grads["dp_weight"] += g.T @ s
            grads["dp_bias"] += g.sum(axis=0)
            d_sent_base = g @ wd
            zero = np.zeros((len(idx.mention_tokens), self.config.dim))
            self._scatter_doc(idx, grads, zero, zero,
                              np.zeros_like(d_sent_base), d_sent_base)
        return float(total / n_sents), grads

    def relu_pattern(self, docs: list[Document],
                     dp_labels: DpLabelMap | None = None) -> bytes:
        """Packed activation signs of every hidden unit across the batch.

        Two parameter settings with equal patterns lie on the same linear
        region of the ranking loss, which finite differencing relies on.
        """
        bits: list[np.ndarray] = []
        for doc in docs:
            idx = self._index(doc, dp_labels)
            reprs = _DocReprs(idx, self.params, self.config.dim)
            for si in idx.slots:
                phi, _, _ = self._slot_features(idx, reprs, si)
                z, _, _ = self._slot_scores(phi)
                bits.append((z > 0).ravel())
        if not bits:
            return b""
        return np.packbits(np.concatenate(bits)).tobytes()


def finite_difference_check(
    loss_and_grads,
    params: dict[str, np.ndarray],
    rng: np.random.Generator,
    coords_per_tensor: int = 50,
    step: float = 1e-5,
    loss_and_pattern=None,
) -> dict:
    """Compare analytic gradients against central differences.

    ``loss_and_grads(params)`` must return ``(loss, grads)``. For each tensor,
    up to ``coords_per_tensor`` coordinates are sampled without replacement
    and perturbed by ``+-step``. When ``loss_and_pattern`` is given (returning
    ``(loss, pattern)``), coordinates whose two perturbed evaluations land in
    different relu regions are resampled, because the loss is not
    differentiable across a kink and the central difference is meaningless
    there. Relative error uses ``|a - n| / max(1, |a|, |n|)``.
    """
    _, grads = loss_and_grads(params)

    def eval_loss(p: dict[str, np.ndarray]):
        if loss_and_pattern is not None:
            return loss_and_pattern(p)
        return loss_and_grads(p)[0], None

    report = {"max_rel_err": 0.0, "checked": 0, "resampled": 0, "worst": None}
    for name in sorted(params):
        arr = params[name]
        size = arr.size
        k = min(coords_per_tensor, size)
        order = rng.permutation(size)
        chosen, pool = list(order[:k]), list(order[k:])
        for flat in chosen:
            flat = int(flat)
            attempts = 0
            while True:
                bumped = dict(params)
                plus = arr.copy()
                plus.flat[flat] += step
                bumped[name] = plus
                loss_plus, pat_plus = eval_loss(bumped)
                minus = arr.copy()
                minus.flat[flat] -= step
                bumped[name] = minus
                loss_minus, pat_minus = eval_loss(bumped)
                if pat_plus == pat_minus or not pool or attempts >= 20:
                    break
                report["resampled"] += 1
                attempts += 1
                flat = int(pool.pop())
            numeric = (loss_plus - loss_minus) / (2.0 * step)
            analytic = float(grads[name].flat[flat])
            rel = abs(analytic - numeric) / max(1.0, abs(analytic), abs(numeric))
            report["checked"] += 1
            if rel > report["max_rel_err"]:
                report["max_rel_err"] = rel
                report["worst"] = (name, flat, analytic, numeric, rel)
    return report


CHECKPOINT_FORMAT = 1


def save_checkpoint(model: RankingModel, path: str | Path,
                    train_config: dict | None = None,
                    seed: int | None = None) -> None:
    """Write the model as deterministic JSON.

    Parameter tensors are stored as shape plus row-major value lists, which
    round-trip exactly (json emits shortest-repr floats). ``train_config``
    and ``seed`` are echoed verbatim when given so a checkpoint records how
    it was produced.
    """
    obj = {
        "format_version": CHECKPOINT_FORMAT,
        "hyperparameters": {"dim": model.config.dim,
                            "hidden": model.config.hidden,
                            "variant": model.config.variant},
        "vocabulary": model.vocab.tokens,
        "params": {
            name: {
                "shape": list(model.params[name].shape),
                "data": np.ascontiguousarray(model.params[name]).ravel().tolist(),
            }
            for name in PARAM_ORDER
        },
        "train_config": train_config,
        "seed": seed,
    }
    Path(path).write_text(json.dumps(obj, ensure_ascii=False), encoding="utf-8")


def load_checkpoint(path: str | Path) -> RankingModel:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        if obj.get("format_version") != CHECKPOINT_FORMAT:
            raise ScorerError(f"unsupported checkpoint format in {path}")
        config = ModelConfig(**obj["hyperparameters"])
        vocab = Vocabulary(list(obj["vocabulary"]))
        params = {}
        for name in PARAM_ORDER:
            entry = obj["params"][name]
            arr = np.array(entry["data"], dtype=np.float64)
            params[name] = arr.reshape(entry["shape"])
    except (KeyError, ValueError, TypeError) as exc:
        raise ScorerError(f"malformed checkpoint {path}: {exc}") from None
    return RankingModel(config, vocab, params)
