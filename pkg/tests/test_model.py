"""Triple encoding, the three-MLP scorer, summary selection, checkpoints."""

import json

import numpy as np
import pytest

from entsum.dataset import NodeKind, Resource, Triple
from entsum.embeddings import EmbeddingStore
from entsum.errors import CorruptCheckpoint, ShapeMismatch, VersionMismatch
from entsum.model import (
    ModelConfig,
    TripleScorer,
    encode_description,
    encode_triple,
    load_checkpoint,
    save_checkpoint,
    select_summary,
)
from entsum.nn import Activation, Mlp, cosine, grad_check, mse_loss, softmax

from conftest import random_vectors, small_config

ENT = Resource(NodeKind.IRI, "http://ex.org/e", None)


def triple_of(prop_raw, val_raw, tid=0):
    prop = Resource(NodeKind.IRI, prop_raw, None)
    val = Resource(NodeKind.LITERAL, val_raw, None)
    return Triple(tid, ENT, prop, val, val)


# --------------------------------------------------------------------------
# triple encoding
# --------------------------------------------------------------------------

def test_encode_concatenates_prop_and_val():
    store = EmbeddingStore(
        2,
        {
            "knows": np.array([1.0, 0.0]),
            "tim": np.array([0.0, 1.0]),
        },
    )
    vec = encode_triple(triple_of("http://ex.org/knows", "Tim"), store)
    assert vec.tolist() == [1.0, 0.0, 0.0, 1.0]


def test_encode_all_unknown_is_zero_vector():
    store = EmbeddingStore(2, {"other": np.array([1.0, 1.0])})
    vec = encode_triple(triple_of("http://ex.org/xq", "zz"), store)
    assert vec.tolist() == [0.0, 0.0, 0.0, 0.0]


def test_encode_multi_word_sides_take_means():
    store = EmbeddingStore(
        1,
        {
            "birth": np.array([1.0]),
            "place": np.array([3.0]),
            "harbor": np.array([5.0]),
            "city": np.array([7.0]),
        },
    )
    vec = encode_triple(triple_of("http://ex.org/birthPlace", "Harbor City"), store)
    assert vec.tolist() == [2.0, 6.0]


def test_encode_description_orders_by_id(toy_manifest, toy_store):
    desc = toy_manifest.entities[0]
    pairs = encode_description(desc, toy_store)
    assert [tid for tid, _ in pairs] == [t.id for t in desc.triples]
    assert all(vec.shape == (2 * toy_store.dim,) for _, vec in pairs)


# --------------------------------------------------------------------------
# configuration
# --------------------------------------------------------------------------

def test_config_defaults():
    cfg = ModelConfig()
    assert cfg.embed_dim == 300
    assert cfg.candidate_hidden == (64, 64)
    assert cfg.context_hidden == (64, 64)
    assert cfg.scoring_hidden == (64, 64, 64)
    assert cfg.triple_dim == 600
    assert cfg.scoring_input_dim == 128


def test_config_validation():
    with pytest.raises(ValueError):
        ModelConfig(embed_dim=0)
    with pytest.raises(ValueError):
        ModelConfig(candidate_hidden=())
    with pytest.raises(ValueError):
        ModelConfig(scoring_hidden=(8, 0))


def test_create_is_seed_deterministic():
    a = TripleScorer.create(small_config(seed=3))
    b = TripleScorer.create(small_config(seed=3))
    c = TripleScorer.create(small_config(seed=4))
    for pa, pb in zip(a.parameters(), b.parameters()):
        assert np.array_equal(pa, pb)
    assert any(not np.array_equal(pa, pc) for pa, pc in zip(a.parameters(), c.parameters()))


def test_create_architecture():
    model = TripleScorer.create(small_config())
    assert model.candidate_mlp.in_dim == 12
    assert model.context_mlp.in_dim == 12
    assert model.scoring_mlp.in_dim == 16
    assert model.scoring_mlp.out_dim == 1
    assert model.scoring_mlp.layers[-1].activation is Activation.LINEAR


def test_mismatched_mlp_rejected():
    cfg = small_config()
    good = TripleScorer.create(cfg)
    rng = np.random.default_rng(0)
    wrong = Mlp.create([10, 8, 8], Activation.RELU, rng)  # in_dim 10, not 12
    with pytest.raises(ShapeMismatch):
        TripleScorer(cfg, wrong, good.context_mlp, good.scoring_mlp)


def test_nonlinear_scoring_head_rejected():
    cfg = small_config()
    good = TripleScorer.create(cfg)
    rng = np.random.default_rng(0)
    relu_head = Mlp.create([16, 8, 8, 1], Activation.RELU, rng)
    with pytest.raises(ShapeMismatch):
        TripleScorer(cfg, good.candidate_mlp, good.context_mlp, relu_head)


def test_set_parameters_round_trip():
    model = TripleScorer.create(small_config(seed=1))
    other = TripleScorer.create(small_config(seed=2))
    snapshot = model.copy_parameters()
    other.set_parameters(snapshot)
    for p, q in zip(model.parameters(), other.parameters()):
        assert np.array_equal(p, q)
    with pytest.raises(ShapeMismatch):
        model.set_parameters(snapshot[:-1])


# --------------------------------------------------------------------------
# scoring
# --------------------------------------------------------------------------

def test_score_description_covers_every_id():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(0)
    vectors = random_vectors(rng, 6, 12)
    scored = model.score_description(ENT, vectors)
    assert sorted(scored.scores) == list(range(6))
    assert all(np.isfinite(v) for v in scored.scores.values())


def test_empty_description_rejected():
    model = TripleScorer.create(small_config())
    with pytest.raises(ShapeMismatch):
        model.score_description(ENT, [])


def test_duplicate_ids_rejected():
    model = TripleScorer.create(small_config())
    vec = np.zeros(12)
    with pytest.raises(ShapeMismatch):
        model.score_description(ENT, [(0, vec), (0, vec)])


def test_wrong_vector_length_rejected():
    model = TripleScorer.create(small_config())
    with pytest.raises(ShapeMismatch):
        model.score_description(ENT, [(0, np.zeros(11))])


def test_permutation_invariance_bit_exact():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(19)
    for _ in range(30):
        n = int(rng.integers(2, 9))
        vectors = random_vectors(rng, n, 12)
        base = model.score_description(ENT, vectors)
        for _ in range(5):
            perm = list(vectors)
            rng.shuffle(perm)
            again = model.score_description(ENT, perm)
            assert again.scores == base.scores
            assert again.attention == base.attention


def test_attention_rows_sum_to_one():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(21)
    vectors = random_vectors(rng, 7, 12)
    scored = model.score_description(ENT, vectors)
    for c in range(7):
        row = sum(scored.attention[(c, i)] for i in range(7))
        assert abs(row - 1.0) <= 1e-12
    assert all(w > 0.0 for w in scored.attention.values())


def test_single_triple_attends_to_itself():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(23)
    vec = rng.normal(size=12)
    scored = model.score_description(ENT, [(4, vec)])
    assert scored.attention == {(4, 4): 1.0}
    # with one weight the pooled vector is the context encoding itself
    ctx, _ = model.context_mlp.forward(vec)
    cand, _ = model.candidate_mlp.forward(vec)
    out, _ = model.scoring_mlp.forward(np.concatenate([cand, ctx]))
    assert scored.scores[4] == out[0]


def test_identical_triples_share_score_and_split_attention():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(27)
    vec = rng.normal(size=12)
    scored = model.score_description(ENT, [(0, vec.copy()), (1, vec.copy())])
    assert scored.scores[0] == scored.scores[1]
    assert scored.attention[(0, 0)] == 0.5
    assert scored.attention[(0, 1)] == 0.5
    assert scored.attention[(1, 0)] == 0.5


def test_three_triple_straight_line_recomputation():
    # re-derive every score with plain numpy on the model's own weights
    model = TripleScorer.create(small_config(seed=5))
    rng = np.random.default_rng(31)
    vectors = random_vectors(rng, 3, 12)
    scored = model.score_description(ENT, vectors)

    ctx = [model.context_mlp.forward(v)[0] for _, v in vectors]
    for tid, vec in vectors:
        cand = model.candidate_mlp.forward(vec)[0]
        sims = np.array([cosine(cand, g) for g in ctx])
        weights = softmax(sims)
        pooled = weights[0] * ctx[0] + weights[1] * ctx[1] + weights[2] * ctx[2]
        expected = model.scoring_mlp.forward(np.concatenate([cand, pooled]))[0][0]
        assert abs(scored.scores[tid] - expected) < 1e-12


def test_score_entity_matches_encode_then_score(toy_manifest, toy_store):
    model = TripleScorer.create(ModelConfig(
        embed_dim=4, candidate_hidden=(8, 8), context_hidden=(8, 8),
        scoring_hidden=(8, 8), seed=0,
    ))
    desc = toy_manifest.entities[0]
    direct = model.score_entity(desc, toy_store)
    manual = model.score_description(desc.entity, encode_description(desc, toy_store))
    assert direct.scores == manual.scores


# --------------------------------------------------------------------------
# loss and gradients
# --------------------------------------------------------------------------

def test_loss_matches_mse_of_scores():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(33)
    vectors = random_vectors(rng, 5, 12)
    targets = {i: float(rng.uniform()) for i in range(5)}
    loss, _ = model.loss_and_gradients(vectors, targets)
    scored = model.score_description(ENT, vectors)
    pred = np.array([scored.scores[i] for i in range(5)])
    tgt = np.array([targets[i] for i in range(5)])
    expected, _ = mse_loss(pred, tgt)
    assert loss == expected


def test_gradients_pass_numeric_check():
    model = TripleScorer.create(small_config(seed=2))
    rng = np.random.default_rng(35)
    vectors = random_vectors(rng, 4, 12)
    targets = {i: float(rng.uniform()) for i in range(4)}

    def loss_fn():
        return model.loss_and_gradients(vectors, targets)[0]

    _, grads = model.loss_and_gradients(vectors, targets)
    assert len(grads) == len(model.parameters())
    assert grad_check(loss_fn, model.parameters(), grads) < 1e-4


def test_missing_target_rejected():
    model = TripleScorer.create(small_config())
    rng = np.random.default_rng(37)
    vectors = random_vectors(rng, 3, 12)
    with pytest.raises(ShapeMismatch) as err:
        model.loss_and_gradients(vectors, {0: 0.5, 1: 0.5})
    assert "2" in str(err.value)


def test_gradients_permutation_invariant():
    model = TripleScorer.create(small_config(seed=4))
    rng = np.random.default_rng(39)
    vectors = random_vectors(rng, 5, 12)
    targets = {i: float(rng.uniform()) for i in range(5)}
    loss_a, grads_a = model.loss_and_gradients(vectors, targets)
    loss_b, grads_b = model.loss_and_gradients(list(reversed(vectors)), targets)
    assert loss_a == loss_b
    for ga, gb in zip(grads_a, grads_b):
        assert np.array_equal(ga, gb)


# --------------------------------------------------------------------------
# summary selection
# --------------------------------------------------------------------------

def scored_with(scores):
    from entsum.model import ScoredDescription

    return ScoredDescription(ENT, scores)


def test_select_orders_by_score_descending():
    scored = scored_with({0: 0.1, 1: 0.9, 2: 0.5})
    assert select_summary(scored, 2) == [1, 2]
    assert select_summary(scored, 3) == [1, 2, 0]


def test_select_breaks_ties_toward_lower_id():
    scored = scored_with({3: 0.5, 1: 0.5, 2: 0.5})
    assert select_summary(scored, 2) == [1, 2]


def test_select_caps_at_description_size():
    scored = scored_with({0: 0.1, 1: 0.2})
    assert select_summary(scored, 10) == [1, 0]


def test_select_rejects_nonpositive_k():
    with pytest.raises(ValueError):
        select_summary(scored_with({0: 0.1}), 0)


# --------------------------------------------------------------------------
# checkpoints
# --------------------------------------------------------------------------

def test_checkpoint_round_trip_scores_identical(tmp_path):
    model = TripleScorer.create(small_config(seed=6))
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path, meta={"k": 5, "fold": 2})
    loaded, meta = load_checkpoint(path)
    assert meta == {"k": 5, "fold": 2}
    assert loaded.config == model.config
    rng = np.random.default_rng(41)
    vectors = random_vectors(rng, 6, 12)
    a = model.score_description(ENT, vectors)
    b = loaded.score_description(ENT, vectors)
    assert a.scores == b.scores
    assert a.attention == b.attention


def test_checkpoint_resave_is_byte_identical(tmp_path):
    model = TripleScorer.create(small_config(seed=7))
    p1, p2 = tmp_path / "a.ckpt", tmp_path / "b.ckpt"
    save_checkpoint(model, p1, meta={"k": 5})
    loaded, meta = load_checkpoint(p1)
    save_checkpoint(loaded, p2, meta=meta)
    assert p1.read_bytes() == p2.read_bytes()


def test_checkpoint_default_meta_is_empty(tmp_path):
    model = TripleScorer.create(small_config())
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    _, meta = load_checkpoint(path)
    assert meta == {}


def corrupt(tmp_path, mutate):
    model = TripleScorer.create(small_config())
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    doc = json.loads(path.read_text(encoding="utf-8"))
    mutate(doc)
    path.write_text(json.dumps(doc), encoding="utf-8")
    return path


def test_load_missing_file(tmp_path):
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(tmp_path / "absent.ckpt")


def test_load_truncated_json(tmp_path):
    model = TripleScorer.create(small_config())
    path = tmp_path / "model.ckpt"
    save_checkpoint(model, path)
    path.write_text(path.read_text(encoding="utf-8")[:100], encoding="utf-8")
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(path)


def test_load_wrong_format_marker(tmp_path):
    path = corrupt(tmp_path, lambda doc: doc.update(format="something-else"))
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(path)


def test_load_unsupported_version(tmp_path):
    path = corrupt(tmp_path, lambda doc: doc.update(version=99))
    with pytest.raises(VersionMismatch):
        load_checkpoint(path)


def test_load_missing_section(tmp_path):
    path = corrupt(tmp_path, lambda doc: doc.pop("mlps"))
    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(path)


def test_load_unknown_activation(tmp_path):
    def mutate(doc):
        doc["mlps"]["candidate"][0]["activation"] = "tanh"

    with pytest.raises(CorruptCheckpoint) as err:
        load_checkpoint(corrupt(tmp_path, mutate))
    assert "tanh" in str(err.value)


def test_load_bias_length_mismatch(tmp_path):
    def mutate(doc):
        doc["mlps"]["context"][0]["bias"].append(0.0)

    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(corrupt(tmp_path, mutate))


def test_load_weight_count_mismatch(tmp_path):
    def mutate(doc):
        doc["mlps"]["scoring"][0]["weights"].append(0.0)

    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(corrupt(tmp_path, mutate))


def test_load_architecture_config_disagreement(tmp_path):
    def mutate(doc):
        doc["config"]["embed_dim"] = 7

    with pytest.raises(CorruptCheckpoint):
        load_checkpoint(corrupt(tmp_path, mutate))


def test_checkpoint_dim_mismatch_surfaces_at_scoring(tmp_path):
    big = TripleScorer.create(
        ModelConfig(embed_dim=300, candidate_hidden=(8,), context_hidden=(8,),
                    scoring_hidden=(8,), seed=0)
    )
    path = tmp_path / "big.ckpt"
    save_checkpoint(big, path)
    loaded, _ = load_checkpoint(path)
    rng = np.random.default_rng(43)
    small_vectors = random_vectors(rng, 3, 200)  # from a 100-dim store
    with pytest.raises(ShapeMismatch):
        loaded.score_description(ENT, small_vectors)
