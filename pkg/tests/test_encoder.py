"""Encoder behavior: vocabularies, typed cells, previous-answer gating."""

import numpy as np
import pytest

from seqtab.autodiff import Node, backward, constant, reduce_sum
from seqtab.encoder import (
    EMPTY_CELL_CHAR,
    Vocabulary,
    answer_indicators,
    build_vocabulary,
    condition_on_previous,
    encode_question,
    encode_table,
)
from seqtab.gradcheck import check_gradients
from seqtab.model import init_model_params
from seqtab.tables import AnswerCoordinates, Table, ValidationError


def small_table():
    return Table.build("t", ["name", "score"], [["ada", "3"], ["bob", "5"]])


def small_params(seed=0, d=8, dtype=np.float32):
    vocab = build_vocabulary(["ada", "bob", "name", "score", "35", "who scored?"])
    return init_model_params(vocab, d=d, seed=seed, dtype=dtype)


class TestVocabulary:
    def test_ids_dense_from_zero(self):
        v = build_vocabulary(["ab", "bc"])
        ids = sorted({v.unknown_id, *v.char_to_id.values()})
        assert ids == list(range(v.size))

    def test_unknown_chars_map_to_unknown_id(self):
        v = build_vocabulary(["ab"])
        np.testing.assert_array_equal(v.encode("axb"), [v.char_to_id["a"], v.unknown_id, v.char_to_id["b"]])

    def test_empty_cell_uses_reserved_char(self):
        v = build_vocabulary(["ab"])
        ids = v.encode_cell("")
        assert len(ids) == 1
        assert ids[0] == v.char_to_id[EMPTY_CELL_CHAR]

    def test_deterministic(self):
        assert build_vocabulary(["xyz", "abc"]) == build_vocabulary(["abc", "xyz"])


class TestEncodeQuestion:
    def test_identical_strings_identical_q(self):
        p = small_params()
        a = encode_question("who scored?", p)
        b = encode_question("who scored?", p)
        np.testing.assert_array_equal(a.value, b.value)

    def test_zero_weights_zero_q(self):
        p = small_params()
        for node in p.char_lstm.nodes().values():
            node.value[...] = 0.0
        q = encode_question("ada", p)
        np.testing.assert_array_equal(q.value, np.zeros(p.d))

    def test_one_char_difference_changes_q(self):
        p = small_params()
        a = encode_question("ada", p)
        b = encode_question("adb", p)
        assert np.abs(a.value - b.value).max() > 0

    def test_empty_question_rejected(self):
        with pytest.raises(ValidationError, match="empty"):
            encode_question("   ", small_params())


class TestEncodeTable:
    def test_shapes(self):
        p = small_params()
        t = small_table()
        enc = encode_table(t, p)
        assert enc.h.value.shape == (2, p.d)
        assert enc.t1.value.shape == (2, 2, p.d)
        assert enc.t.value.shape == (2, 2, p.d)

    def test_typed_cells_nonnegative(self):
        enc = encode_table(small_table(), small_params(seed=3))
        assert np.all(enc.t.value >= 0)

    def test_w1_zero_gives_zero_t(self):
        p = small_params()
        p.W1.value[...] = 0.0
        enc = encode_table(small_table(), p)
        np.testing.assert_array_equal(enc.t.value, np.zeros_like(enc.t.value))

    def test_gradient_through_typing(self):
        # Readout of t against W1 and the raw encodings, double precision.
        r = np.random.default_rng(5)
        h_val = r.uniform(-0.5, 0.5, (2, 3))
        t1_val = r.uniform(0.1, 0.9, (2, 2, 3))
        proj = r.standard_normal((2, 2, 3))

        def build(n):
            from seqtab.autodiff import matmul, mul, relu

            typed = relu(mul(n["t1"], matmul(n["h"], n["W1"])))
            return reduce_sum(mul(typed, constant(proj)))

        check_gradients(build, {"h": h_val, "t1": t1_val, "W1": r.uniform(0.2, 0.8, (3, 3))})


class TestConditioning:
    def test_no_previous_and_zero_w4_is_noop(self):
        p = small_params()
        p.W4.value[...] = 0.0
        enc = encode_table(small_table(), p)
        q = encode_question("who scored?", p)
        p1 = np.zeros((2, 2), dtype=np.float32)
        out = condition_on_previous(enc, q, p1, p)
        np.testing.assert_array_equal(out.t.value, enc.t.value)

    def test_unit_gate_doubles_cell(self):
        p = small_params()
        enc = encode_table(small_table(), p)
        # Force p to be exactly 1 at cell (0, 1) and 0 elsewhere.
        p.W3.value[...] = 1.0
        p.W4.value[...] = 0.0
        p1 = np.zeros((2, 2), dtype=np.float32)
        p1[0, 1] = 1.0
        q = encode_question("who scored?", p)
        out = condition_on_previous(enc, q, p1, p)
        np.testing.assert_allclose(out.t.value[0, 1], 2.0 * enc.t.value[0, 1], rtol=1e-6)
        np.testing.assert_array_equal(out.t.value[1, 0], enc.t.value[1, 0])

    def test_never_flips_sign(self):
        p = small_params(seed=9)
        enc = encode_table(small_table(), p)
        q = encode_question("who scored?", p)
        p1 = np.ones((2, 2), dtype=np.float32)
        out = condition_on_previous(enc, q, p1, p)
        assert np.all(out.t.value >= enc.t.value - 1e-6)

    def test_shape_mismatch_rejected(self):
        p = small_params()
        enc = encode_table(small_table(), p)
        q = encode_question("who scored?", p)
        with pytest.raises(ValidationError, match="p1 shape"):
            condition_on_previous(enc, q, np.zeros((3, 3), dtype=np.float32), p)


def test_answer_indicators():
    t = small_table()
    p1 = answer_indicators(AnswerCoordinates.of([(0, 0), (1, 1)]), t)
    np.testing.assert_array_equal(p1, [[1.0, 0.0], [0.0, 1.0]])


def test_full_pipeline_gradients_small_table():
    # The whole encode path on a 2x2 table in float64, every parameter.
    from seqtab.autodiff import mul

    from conftest import params_from_nodes

    table = Table.build("t", ["ab", "cd"], [["ab", "ba"], ["dc", "cd"]])
    vocab = build_vocabulary(["abcd", "ab?"])
    params = init_model_params(vocab, d=3, seed=11, dtype=np.float64)
    p1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    proj = np.random.default_rng(12).standard_normal((2, 2, 3))

    def build(nodes):
        rebuilt = params_from_nodes(vocab, 3, nodes)
        enc = encode_table(table, rebuilt)
        q = encode_question("ab?", rebuilt)
        out = condition_on_previous(enc, q, p1, rebuilt)
        return reduce_sum(mul(out.t, constant(proj)))

    values = {name: node.value for name, node in params.all_nodes().items()}
    check_gradients(build, values)
