"""Cleaning, tokenization, vocabulary, encoding, and embedding training."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmfnd.errors import EmptyCorpus, ShapeMismatch
from mmfnd.textpipe import (
    PAD_ID,
    UNK_ID,
    EmbeddingParams,
    Vocab,
    build_vocab,
    choose_l_max,
    clean_text,
    encode,
    encode_batch,
    import_word2vec_text,
    load_embedding_model,
    oov_rate,
    save_embedding_model,
    tokenize,
    train_embeddings,
)


# --- cleaning ------------------------------------------------------------

@pytest.mark.parametrize(
    "raw, cleaned",
    [
        ("<b>വാർത്ത</b> 2023", "വാർത്ത NUM"),
        ("വില 500, 1000 രൂപ!", "വില NUM NUM രൂപ"),
        ("", ""),
        ("   ", ""),
        ("കേരളം&nbsp;വാർത്ത", "കേരളം വാർത്ത"),
        ("൧൨൩ പേർ", "NUM പേർ"),
        ("abc DEF", "abc DEF"),
        ("#breaking@news!", "breaking news"),
    ],
)
def test_clean_text_goldens(raw, cleaned):
    assert clean_text(raw) == cleaned


@given(st.text(max_size=200))
@settings(max_examples=200, deadline=None)
def test_clean_text_idempotent(raw):
    once = clean_text(raw)
    assert clean_text(once) == once


@given(st.text(max_size=200))
@settings(max_examples=200, deadline=None)
def test_clean_text_output_charset(raw):
    for ch in clean_text(raw):
        assert ch == " " or ch.isascii() and ch.isalpha() or "ഀ" <= ch <= "ൿ"


def test_tokenize_examples():
    assert tokenize("വാർത്ത NUM") == ["വാർത്ത", "NUM"]
    assert tokenize("") == []
    assert tokenize("ഒറ്റ") == ["ഒറ്റ"]


@given(st.lists(st.text(alphabet="അആഇകഖഗab", min_size=1, max_size=6), max_size=8))
@settings(max_examples=100, deadline=None)
def test_tokenize_inverts_join(tokens):
    assert tokenize(" ".join(tokens)) == tokens


# --- vocabulary ----------------------------------------------------------

def test_vocab_reserved_slots_and_frequency_order():
    corpus = [["b", "a", "b"], ["a", "c", "b"]]
    vocab = build_vocab(corpus)
    assert vocab.token_to_id["<pad>"] == PAD_ID
    assert vocab.token_to_id["<unk>"] == UNK_ID
    # b occurs 3x, a 2x, c once
    assert vocab.token_to_id["b"] == 2
    assert vocab.token_to_id["a"] == 3
    assert vocab.token_to_id["c"] == 4
    assert vocab.size == 5
    assert vocab.id_to_token[2] == "b"


def test_vocab_min_count_drops_rare_tokens():
    vocab = build_vocab([["a", "a", "b"]], min_count=2)
    assert "a" in vocab.token_to_id and "b" not in vocab.token_to_id
    assert vocab.lookup("b") == UNK_ID


def test_vocab_tie_break_is_codepoint_order():
    vocab = build_vocab([["ഖ", "ക"]])  # equal counts
    assert vocab.token_to_id["ക"] == 2 and vocab.token_to_id["ഖ"] == 3


def test_vocab_deterministic_across_runs():
    corpus = [["ഒന്ന്", "രണ്ട്", "ഒന്ന്"], ["മൂന്ന്"]]
    assert build_vocab(corpus) == build_vocab(corpus)


def test_vocab_empty_corpus_raises():
    with pytest.raises(EmptyCorpus):
        build_vocab([[], []])


def test_vocab_json_round_trip(tmp_path):
    vocab = build_vocab([["കേരളം", "വാർത്ത"]])
    vocab.to_json(tmp_path / "v.json")
    loaded = Vocab.from_json(tmp_path / "v.json")
    assert loaded == vocab


def test_vocab_json_rejects_gaps(tmp_path):
    (tmp_path / "v.json").write_text('{"<pad>": 0, "<unk>": 1, "x": 5}', encoding="utf-8")
    with pytest.raises(ShapeMismatch):
        Vocab.from_json(tmp_path / "v.json")


# --- encoding ------------------------------------------------------------

@pytest.fixture(scope="module")
def tiny_vocab():
    return build_vocab([["നായ", "പൂച്ച"]])


def test_encode_pads_to_length(tiny_vocab):
    enc = encode("നായ പൂച്ച", tiny_vocab, l_max=4)
    assert enc.ids.tolist() == [2, 3, 0, 0]
    assert enc.true_length == 2
    assert enc.ids.dtype == np.int32


def test_encode_truncates(tiny_vocab):
    enc = encode("നായ പൂച്ച", tiny_vocab, l_max=1)
    assert enc.ids.tolist() == [2] and enc.true_length == 1


def test_encode_maps_oov_to_unk(tiny_vocab):
    enc = encode("ആന", tiny_vocab, l_max=3)
    assert enc.ids.tolist() == [UNK_ID, 0, 0]


def test_encode_cleans_first(tiny_vocab):
    enc = encode("<i>നായ</i> 99", tiny_vocab, l_max=4)
    # "NUM" is out of this vocab, so it maps to UNK
    assert enc.ids.tolist() == [2, UNK_ID, 0, 0]


def test_encode_batch_shape(tiny_vocab):
    X = encode_batch(["നായ", "പൂച്ച നായ"], tiny_vocab, l_max=3)
    assert X.shape == (2, 3) and X.dtype == np.int32


@given(st.text(max_size=100))
@settings(max_examples=100, deadline=None)
def test_encode_ids_always_in_range(tiny_vocab, raw):
    enc = encode(raw, tiny_vocab, l_max=8)
    assert enc.ids.shape == (8,)
    assert ((enc.ids >= 0) & (enc.ids < tiny_vocab.size)).all()


def test_choose_l_max():
    assert choose_l_max([3] * 100) == 3
    assert choose_l_max(list(range(1, 101)), cap=32) == 32
    assert choose_l_max([], cap=32) == 32
    assert choose_l_max([0, 0]) == 1


def test_oov_rate(tiny_vocab):
    assert oov_rate([["നായ", "ആന"]], tiny_vocab) == 0.5
    assert oov_rate([], tiny_vocab) == 0.0


# --- embeddings ----------------------------------------------------------

def _cos(a, b):
    return float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


@pytest.fixture(scope="module")
def cooccurrence_model():
    # മഴ and വെള്ളം always share a window (and each other's contexts);
    # സൂര്യൻ never appears near either of them.
    corpus = [["മഴ", "വെള്ളം", "മഴ", "വെള്ളം", "മഴ"]] * 250 + [
        ["സൂര്യൻ", "ചൂട്", "സൂര്യൻ", "ചൂട്", "സൂര്യൻ"]
    ] * 250
    vocab = build_vocab(corpus)
    params = EmbeddingParams(vector_size=16, window=2, epochs=20, seed=42)
    return train_embeddings(corpus, vocab, params), corpus, vocab, params


def test_embeddings_reflect_cooccurrence(cooccurrence_model):
    model, _, _, _ = cooccurrence_model
    near = _cos(model.vector("മഴ"), model.vector("വെള്ളം"))
    far = _cos(model.vector("മഴ"), model.vector("സൂര്യൻ"))
    assert near > far


def test_embeddings_deterministic(cooccurrence_model):
    model, corpus, vocab, params = cooccurrence_model
    again = train_embeddings(corpus, vocab, params)
    assert np.array_equal(model.matrix, again.matrix)


def test_embedding_special_rows(cooccurrence_model):
    model, _, _, _ = cooccurrence_model
    assert np.all(model.matrix[PAD_ID] == 0.0)
    np.testing.assert_allclose(model.matrix[UNK_ID], model.matrix[2:].mean(axis=0), rtol=1e-6)


def test_embeddings_without_pairs_keep_init():
    corpus = [["ഏകം"], ["രണ്ട്"]]  # single-token sentences: no context pairs
    vocab = build_vocab(corpus)
    model = train_embeddings(corpus, vocab, EmbeddingParams(vector_size=8, seed=1))
    assert model.matrix.shape == (4, 8)
    assert np.all(model.matrix[PAD_ID] == 0.0)


def test_embeddings_empty_corpus_raises(tiny_vocab):
    with pytest.raises(EmptyCorpus):
        train_embeddings([[]], tiny_vocab, EmbeddingParams(vector_size=8))


def test_embedding_save_load_round_trip(tmp_path, cooccurrence_model):
    model, _, _, _ = cooccurrence_model
    save_embedding_model(model, tmp_path)
    loaded = load_embedding_model(tmp_path)
    assert np.array_equal(loaded.matrix, model.matrix)
    assert loaded.vocab == model.vocab
    assert loaded.params == model.params


def test_embedding_load_size_mismatch(tmp_path, cooccurrence_model):
    model, _, _, _ = cooccurrence_model
    save_embedding_model(model, tmp_path)
    raw = (tmp_path / "embeddings.f32").read_bytes()
    (tmp_path / "embeddings.f32").write_bytes(raw[:-4])  # drop one float
    with pytest.raises(ShapeMismatch):
        load_embedding_model(tmp_path)


def test_import_word2vec_text(tmp_path):
    vocab = build_vocab([["ക", "ഖ", "ഗ"]])
    path = tmp_path / "vectors.txt"
    path.write_text("2 3\nക 1 2 3\nഖ 4 5 6\n", encoding="utf-8")
    model = import_word2vec_text(path, vocab, dim=3)
    got_k = model.matrix[vocab.token_to_id["ക"]]
    np.testing.assert_array_equal(got_k, [1.0, 2.0, 3.0])
    mean = np.array([2.5, 3.5, 4.5], dtype=np.float32)
    np.testing.assert_array_equal(model.matrix[vocab.token_to_id["ഗ"]], mean)
    np.testing.assert_array_equal(model.matrix[UNK_ID], mean)


def test_import_word2vec_dim_mismatch(tmp_path):
    vocab = build_vocab([["ക"]])
    path = tmp_path / "vectors.txt"
    path.write_text("ക 1 2\n", encoding="utf-8")
    with pytest.raises(ShapeMismatch):
        import_word2vec_text(path, vocab, dim=3)
