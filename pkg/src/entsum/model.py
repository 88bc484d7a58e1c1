"""Context-aware triple scorer.

Each candidate triple is encoded from the textual embeddings of its property
and value.  The whole description is condensed into one vector by attention
pooling: every triple gets a context representation, the candidate's encoding
is compared to each of them by cosine similarity, the similarities are
softmax-normalized, and the weighted context representations are summed.
Candidate encoding and pooled description vector are concatenated and mapped
to a scalar salience score.

All per-description arithmetic runs in ascending triple-id order no matter
how the input list is ordered, which makes the scores bit-exactly invariant
under permutations of the input.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import EntityDescription, Resource, Triple
from .embeddings import EmbeddingStore, embed_resource
from .errors import CorruptCheckpoint, ShapeMismatch, VersionMismatch
from .nn import (
    Activation,
    DenseLayer,
    GradientTape,
    Mlp,
    cosine,
    cosine_backward,
    mse_loss,
    softmax,
    softmax_backward,
)

# a triple's initial representation: property embedding then value embedding
TripleVector = np.ndarray

CHECKPOINT_FORMAT = "entsum-scorer"
CHECKPOINT_VERSION = 1


@dataclass(frozen=True)
class ModelConfig:
    embed_dim: int = 300
    candidate_hidden: tuple[int, ...] = (64, 64)
    context_hidden: tuple[int, ...] = (64, 64)
    scoring_hidden: tuple[int, ...] = (64, 64, 64)
    seed: int = 0

    def __post_init__(self):
        for name in ("candidate_hidden", "context_hidden", "scoring_hidden"):
            dims = getattr(self, name)
            if not dims or any(d < 1 for d in dims):
                raise ValueError(f"{name} must be non-empty positive dims, got {dims}")
        if self.embed_dim < 1:
            raise ValueError("embed_dim must be positive")

    @property
    def triple_dim(self) -> int:
        return 2 * self.embed_dim

    @property
    def scoring_input_dim(self) -> int:
        return self.candidate_hidden[-1] + self.context_hidden[-1]


@dataclass(frozen=True)
class ScoredDescription:
    """Scores per triple id plus the attention weights behind them.

    ``attention[(candidate_id, context_id)]`` is the weight the candidate
    put on the context triple; weights over all context ids sum to one.
    """

    entity: Resource
    scores: Mapping[int, float]
    attention: Mapping[tuple[int, int], float] = field(default_factory=dict)


def encode_triple(t: Triple, store: EmbeddingStore) -> TripleVector:
    """Concatenate the property embedding and the value embedding."""
    prop = embed_resource(t.prop, store)
    val = embed_resource(t.val, store)
    return np.concatenate([prop.vector, val.vector])


def encode_description(
    desc: EntityDescription, store: EmbeddingStore
) -> list[tuple[int, TripleVector]]:
    return [(t.id, encode_triple(t, store)) for t in desc.triples]


class TripleScorer:
    """The three-MLP scorer: candidate encoder, context encoder, scoring head."""

    def __init__(self, config: ModelConfig, candidate_mlp: Mlp, context_mlp: Mlp,
                 scoring_mlp: Mlp):
        self.config = config
        self.candidate_mlp = candidate_mlp
        self.context_mlp = context_mlp
        self.scoring_mlp = scoring_mlp
        self._check_architecture()

    def _check_architecture(self):
        cfg = self.config
        expect = {
            "candidate": ([cfg.triple_dim, *cfg.candidate_hidden], self.candidate_mlp),
            "context": ([cfg.triple_dim, *cfg.context_hidden], self.context_mlp),
            "scoring": ([cfg.scoring_input_dim, *cfg.scoring_hidden, 1], self.scoring_mlp),
        }
        for name, (dims, mlp) in expect.items():
            got = [mlp.in_dim] + [layer.out_dim for layer in mlp.layers]
            if got != dims:
                raise ShapeMismatch(f"{name} MLP dims {got} do not match config {dims}")
        if self.scoring_mlp.layers[-1].activation is not Activation.LINEAR:
            raise ShapeMismatch("scoring head must end in a linear unit")

    @classmethod
    def create(cls, config: ModelConfig) -> "TripleScorer":
        """Seeded initialization; the three MLPs draw from one generator in a
        fixed order, so equal seeds give bit-identical parameters."""
        rng = np.random.default_rng(config.seed)
        candidate = Mlp.create(
            [config.triple_dim, *config.candidate_hidden], Activation.RELU, rng
        )
        context = Mlp.create(
            [config.triple_dim, *config.context_hidden], Activation.RELU, rng
        )
        scoring = Mlp.create(
            [config.scoring_input_dim, *config.scoring_hidden, 1], Activation.LINEAR, rng
        )
        return cls(config, candidate, context, scoring)

    def parameters(self) -> list[np.ndarray]:
        return (
            self.candidate_mlp.parameters()
            + self.context_mlp.parameters()
            + self.scoring_mlp.parameters()
        )

    def copy_parameters(self) -> list[np.ndarray]:
        return [p.copy() for p in self.parameters()]

    def set_parameters(self, values: Sequence[np.ndarray]) -> None:
        params = self.parameters()
        if len(params) != len(values):
            raise ShapeMismatch("parameter list length mismatch")
        for p, v in zip(params, values):
            if p.shape != v.shape:
                raise ShapeMismatch(f"parameter shape {v.shape} != {p.shape}")
            p[...] = v

    # -- forward ----------------------------------------------------------

    def _sorted_vectors(
        self, vectors: Sequence[tuple[int, TripleVector]]
    ) -> tuple[list[int], list[np.ndarray]]:
        pairs = sorted(vectors, key=lambda pair: pair[0])
        ids = [tid for tid, _ in pairs]
        if len(set(ids)) != len(ids):
            raise ShapeMismatch("duplicate triple id in description vectors")
        mats = []
        for tid, vec in pairs:
            arr = np.asarray(vec, dtype=np.float64)
            if arr.shape != (self.config.triple_dim,):
                raise ShapeMismatch(
                    f"triple {tid}: vector length {arr.shape} does not match "
                    f"2*embed_dim = {self.config.triple_dim}"
                )
            mats.append(arr)
        return ids, mats

    def _forward(self, mats: list[np.ndarray]):
        """Shared forward pass over the id-sorted triple vectors."""
        ctx = [self.context_mlp.forward(x) for x in mats]
        ctx_vecs = [c[0] for c in ctx]
        ctx_caches = [c[1] for c in ctx]

        cand_vecs, cand_caches = [], []
        weights_all, pooled_all, score_caches = [], [], []
        scores = np.empty(len(mats), dtype=np.float64)
        for c, x in enumerate(mats):
            cand_vec, cand_cache = self.candidate_mlp.forward(x)
            sims = np.array(
                [cosine(cand_vec, g) for g in ctx_vecs], dtype=np.float64
            )
            weights = softmax(sims)
            pooled = np.zeros_like(ctx_vecs[0])
            for i in range(len(ctx_vecs)):
                pooled += weights[i] * ctx_vecs[i]
            joint = np.concatenate([cand_vec, pooled])
            out, score_cache = self.scoring_mlp.forward(joint)
            scores[c] = out[0]
            cand_vecs.append(cand_vec)
            cand_caches.append(cand_cache)
            weights_all.append(weights)
            pooled_all.append(pooled)
            score_caches.append(score_cache)
        return {
            "ctx_vecs": ctx_vecs,
            "ctx_caches": ctx_caches,
            "cand_vecs": cand_vecs,
            "cand_caches": cand_caches,
            "weights": weights_all,
            "pooled": pooled_all,
            "score_caches": score_caches,
            "scores": scores,
        }

    def score_description(
        self, entity: Resource, vectors: Sequence[tuple[int, TripleVector]]
    ) -> ScoredDescription:
        """Score every candidate in the context of the full description."""
        if not vectors:
            raise ShapeMismatch("cannot score an empty description")
        ids, mats = self._sorted_vectors(vectors)
        state = self._forward(mats)
        scores = {tid: float(state["scores"][c]) for c, tid in enumerate(ids)}
        attention = {
            (ids[c], ids[i]): float(state["weights"][c][i])
            for c in range(len(ids))
            for i in range(len(ids))
        }
        return ScoredDescription(entity, scores, attention)

    def score_entity(
        self, desc: EntityDescription, store: EmbeddingStore
    ) -> ScoredDescription:
        return self.score_description(desc.entity, encode_description(desc, store))

    # -- training ---------------------------------------------------------

    def loss_and_gradients(
        self,
        vectors: Sequence[tuple[int, TripleVector]],
        targets: Mapping[int, float],
    ) -> tuple[float, list[np.ndarray]]:
        """Mean squared error over all candidates and exact parameter
        gradients, ordered like ``parameters()``."""
        ids, mats = self._sorted_vectors(vectors)
        missing = [tid for tid in ids if tid not in targets]
        if missing:
            raise ShapeMismatch(f"no supervision target for triple ids {missing}")
        state = self._forward(mats)
        target_vec = np.array([targets[tid] for tid in ids], dtype=np.float64)
        loss, dscores = mse_loss(state["scores"], target_vec)

        n = len(ids)
        cand_dim = self.candidate_mlp.out_dim
        ctx_vecs = state["ctx_vecs"]
        tape_c = GradientTape.for_mlp(self.candidate_mlp)
        tape_d = GradientTape.for_mlp(self.context_mlp)
        tape_s = GradientTape.for_mlp(self.scoring_mlp)

        dctx = [np.zeros_like(g) for g in ctx_vecs]
        for c in range(n):
            djoint = self.scoring_mlp.backward(
                state["score_caches"][c], np.array([dscores[c]]), tape_s
            )
            dcand = djoint[:cand_dim].copy()
            dpool = djoint[cand_dim:]

            weights = state["weights"][c]
            dweights = np.empty(n, dtype=np.float64)
            for i in range(n):
                dweights[i] = float(np.dot(ctx_vecs[i], dpool))
                dctx[i] += weights[i] * dpool
            dsims = softmax_backward(weights, dweights)
            cand_vec = state["cand_vecs"][c]
            for i in range(n):
                du, dv = cosine_backward(cand_vec, ctx_vecs[i], dsims[i])
                dcand += du
                dctx[i] += dv
            self.candidate_mlp.backward(state["cand_caches"][c], dcand, tape_c)
        for i in range(n):
            self.context_mlp.backward(state["ctx_caches"][i], dctx[i], tape_d)

        return loss, tape_c.grads + tape_d.grads + tape_s.grads


def select_summary(scored: ScoredDescription, k: int) -> list[int]:
    """The min(k, n) highest-scoring triple ids, descending score, ties to
    the lower id."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    ranked = sorted(scored.scores.items(), key=lambda item: (-item[1], item[0]))
    return [tid for tid, _ in ranked[:k]]


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def _mlp_to_doc(mlp: Mlp) -> list[dict]:
    return [
        {
            "activation": layer.activation.value,
            "shape": list(layer.W.shape),
            "weights": layer.W.reshape(-1).tolist(),
            "bias": layer.b.tolist(),
        }
        for layer in mlp.layers
    ]


def _mlp_from_doc(doc, what: str) -> Mlp:
    layers = []
    try:
        for entry in doc:
            rows, cols = entry["shape"]
            W = np.array(entry["weights"], dtype=np.float64).reshape(rows, cols)
            b = np.array(entry["bias"], dtype=np.float64)
            if b.shape != (rows,):
                raise CorruptCheckpoint(f"{what}: bias length {b.shape} != {rows}")
            try:
                activation = Activation(entry["activation"])
            except ValueError:
                raise CorruptCheckpoint(
                    f"{what}: unknown activation {entry['activation']!r}"
                )
            layers.append(DenseLayer(W, b, activation))
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpoint(f"{what}: {exc}") from exc
    return Mlp(layers)


def save_checkpoint(
    model: TripleScorer, path: str | Path, meta: Mapping[str, object] | None = None
) -> None:
    """Versioned, self-describing JSON checkpoint; floats keep full 64-bit
    precision through repr-based serialization."""
    cfg = model.config
    doc = {
        "format": CHECKPOINT_FORMAT,
        "version": CHECKPOINT_VERSION,
        "config": {
            "embed_dim": cfg.embed_dim,
            "candidate_hidden": list(cfg.candidate_hidden),
            "context_hidden": list(cfg.context_hidden),
            "scoring_hidden": list(cfg.scoring_hidden),
            "seed": cfg.seed,
        },
        "meta": dict(meta or {}),
        "mlps": {
            "candidate": _mlp_to_doc(model.candidate_mlp),
            "context": _mlp_to_doc(model.context_mlp),
            "scoring": _mlp_to_doc(model.scoring_mlp),
        },
    }
    text = json.dumps(doc, sort_keys=True, separators=(",", ":"))
    Path(path).write_text(text + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path) -> tuple[TripleScorer, dict]:
    """Rebuild a scorer from ``save_checkpoint`` output; returns the model and
    the stored meta mapping."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise CorruptCheckpoint(f"{path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise CorruptCheckpoint(f"{path}: not valid JSON ({exc})") from exc
    if not isinstance(doc, dict) or doc.get("format") != CHECKPOINT_FORMAT:
        raise CorruptCheckpoint(f"{path}: not a scorer checkpoint")
    version = doc.get("version")
    if version != CHECKPOINT_VERSION:
        raise VersionMismatch(
            f"{path}: checkpoint version {version!r}, supported {CHECKPOINT_VERSION}"
        )
    try:
        cfg_doc = doc["config"]
        config = ModelConfig(
            embed_dim=int(cfg_doc["embed_dim"]),
            candidate_hidden=tuple(cfg_doc["candidate_hidden"]),
            context_hidden=tuple(cfg_doc["context_hidden"]),
            scoring_hidden=tuple(cfg_doc["scoring_hidden"]),
            seed=int(cfg_doc["seed"]),
        )
        mlps = doc["mlps"]
        candidate = _mlp_from_doc(mlps["candidate"], "candidate")
        context = _mlp_from_doc(mlps["context"], "context")
        scoring = _mlp_from_doc(mlps["scoring"], "scoring")
    except (KeyError, TypeError, ValueError) as exc:
        raise CorruptCheckpoint(f"{path}: {exc}") from exc
    try:
        model = TripleScorer(config, candidate, context, scoring)
    except ShapeMismatch as exc:
        raise CorruptCheckpoint(f"{path}: {exc}") from exc
    meta = doc.get("meta", {})
    return model, meta if isinstance(meta, dict) else {}
