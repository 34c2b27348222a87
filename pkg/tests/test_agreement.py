import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import alpha_oracle, pearson_oracle
from slede import (
    InteractivityScore,
    SpanAnnotation,
    UndefinedStatisticError,
    agreement_report,
    binarize,
    binarize_dialogue,
    krippendorff_alpha,
    pearson,
)
from slede.agreement import ROW_LABELS, ROW_TOKEN, ROW_UTTERANCE, infer_pairing

from test_corpus import make_corpus, make_dialogue


class TestBinarize:
    def test_no_spans_all_zero(self):
        d = make_dialogue(n_turns=2, tokens_per_turn=3)
        assert binarize(d.turns, [], "backchannels", "a1").tolist() == [0] * 6

    def test_single_span(self):
        d = make_dialogue(n_turns=1, tokens_per_turn=6)
        spans = [SpanAnnotation("d1", "a1", "backchannels", 0, 2, 5)]
        assert binarize(d.turns, spans, "backchannels", "a1").tolist() == [0, 0, 1, 1, 1, 0]

    def test_overlapping_spans_union(self):
        d = make_dialogue(n_turns=1, tokens_per_turn=6)
        spans = [
            SpanAnnotation("d1", "a1", "backchannels", 0, 1, 3),
            SpanAnnotation("d1", "a1", "backchannels", 0, 2, 4),
        ]
        assert binarize(d.turns, spans, "backchannels", "a1").tolist() == [0, 1, 1, 1, 0, 0]

    def test_offsets_across_turns(self):
        d = make_dialogue(n_turns=3, tokens_per_turn=4)
        spans = [SpanAnnotation("d1", "a1", "backchannels", 1, 0, 2)]
        vec = binarize(d.turns, spans, "backchannels", "a1")
        assert vec.tolist() == [0, 0, 0, 0, 1, 1, 0, 0, 0, 0, 0, 0]

    def test_unknown_feature_or_annotator(self):
        span = SpanAnnotation("d1", "a1", "backchannels", 0, 0, 1)
        corpus = make_corpus(spans=[span])
        with pytest.raises(KeyError, match="feature"):
            binarize_dialogue(corpus, "d1", "nope", "a1")
        with pytest.raises(KeyError, match="annotator"):
            binarize_dialogue(corpus, "d1", "backchannels", "ghost")


class TestPearson:
    def test_identity(self):
        assert pearson([1, 5, 2, 4], [1, 5, 2, 4]) == pytest.approx(1.0)

    def test_exact_reversal(self):
        assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)

    def test_frozen_value(self):
        expected = pearson_oracle([1, 2, 3], [1, 2, 4])
        assert expected == pytest.approx(0.98198, abs=1e-5)
        assert pearson([1, 2, 3], [1, 2, 4]) == pytest.approx(expected, abs=1e-12)

    def test_constant_vector_undefined(self):
        with pytest.raises(UndefinedStatisticError):
            pearson([1, 1, 1], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            pearson([1, 2], [1, 2, 3])

    @given(
        st.lists(st.integers(min_value=-50, max_value=50), min_size=3, max_size=20),
        st.integers(min_value=1, max_value=9),
        st.integers(min_value=-20, max_value=20),
    )
    def test_symmetry_and_affine_invariance(self, xs, scale, shift):
        rng = np.random.default_rng(len(xs) * 7 + scale)
        ys = rng.integers(-50, 50, len(xs)).tolist()
        if len(set(xs)) < 2 or len(set(ys)) < 2:
            return
        r = pearson(xs, ys)
        assert pearson(ys, xs) == pytest.approx(r, abs=1e-12)
        assert pearson([scale * x + shift for x in xs], ys) == pytest.approx(r, abs=1e-9)


class TestKrippendorffAlpha:
    def test_perfect_agreement(self):
        matrix = [[0, 0], [1, 1], [0, 0], [1, 1]]
        assert krippendorff_alpha(matrix, "nominal") == pytest.approx(1.0)

    def test_frozen_two_rater_case(self):
        matrix = [[0, 0], [0, 1], [1, 1], [1, 1]]
        expected = alpha_oracle(matrix, "nominal")
        assert expected == pytest.approx(8 / 15)  # ~0.5333
        assert krippendorff_alpha(matrix, "nominal") == pytest.approx(expected, abs=1e-12)

    def test_single_disagreeing_pair(self):
        # one unit, two raters, opposite marks: observed equals expected
        matrix = [[0, 1]]
        expected = alpha_oracle(matrix, "nominal")
        assert krippendorff_alpha(matrix, "nominal") == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.0)

    def test_missing_cells_excluded(self):
        matrix = [[0, 0, None], [1, None, 1], [None, 0, 0], [1, 1, None]]
        assert krippendorff_alpha(matrix, "nominal") == pytest.approx(
            alpha_oracle(matrix, "nominal"), abs=1e-12
        )

    def test_all_identical_undefined(self):
        with pytest.raises(UndefinedStatisticError):
            krippendorff_alpha([[1, 1], [1, 1]], "nominal")

    def test_interval_metric_matches_oracle(self):
        matrix = [[1, 2], [4, 4], [3, 5], [2, 2], [5, 4]]
        assert krippendorff_alpha(matrix, "interval") == pytest.approx(
            alpha_oracle(matrix, "interval"), abs=1e-12
        )

    def test_exhaustive_binary_two_raters(self):
        # every binary 2-rater matrix with up to 6 units
        checked = 0
        for n_units in range(1, 7):
            for cells in itertools.product((0, 1), repeat=2 * n_units):
                matrix = [list(cells[2 * i : 2 * i + 2]) for i in range(n_units)]
                try:
                    expected = alpha_oracle(matrix, "nominal")
                except ArithmeticError:
                    with pytest.raises(UndefinedStatisticError):
                        krippendorff_alpha(matrix, "nominal")
                    continue
                assert krippendorff_alpha(matrix, "nominal") == pytest.approx(
                    expected, abs=1e-9
                )
                checked += 1
        assert checked > 2000

    def test_random_three_rater_matrices(self):
        rng = np.random.default_rng(77)
        for _ in range(100):
            n_units = int(rng.integers(2, 8))
            matrix = rng.integers(0, 2, size=(n_units, 3)).tolist()
            # knock out a few cells to exercise missing-data handling
            for _ in range(int(rng.integers(0, 3))):
                matrix[int(rng.integers(0, n_units))][int(rng.integers(0, 3))] = None
            try:
                expected = alpha_oracle(matrix, "nominal")
            except ArithmeticError:
                with pytest.raises(UndefinedStatisticError):
                    krippendorff_alpha(matrix, "nominal")
                continue
            assert krippendorff_alpha(matrix, "nominal") == pytest.approx(expected, abs=1e-9)

    def test_relabeling_invariance(self):
        rng = np.random.default_rng(5)
        matrix = rng.integers(0, 3, size=(10, 2))
        relabeled = (2 - matrix).tolist()  # swap category names
        assert krippendorff_alpha(matrix.tolist(), "nominal") == pytest.approx(
            krippendorff_alpha(relabeled, "nominal"), abs=1e-12
        )

    def test_rater_column_permutation_invariance(self):
        rng = np.random.default_rng(6)
        matrix = rng.integers(0, 2, size=(12, 3))
        permuted = matrix[:, [2, 0, 1]]
        assert krippendorff_alpha(matrix.tolist(), "nominal") == pytest.approx(
            krippendorff_alpha(permuted.tolist(), "nominal"), abs=1e-12
        )


def corpus_with_two_annotators(mark_same=True):
    """Two 4-turn dialogues; a1 and a2 both mark, a2 optionally shifted."""
    from slede import Corpus, default_labels, default_registry

    d1 = make_dialogue(n_turns=4, tokens_per_turn=6, d_id="d1")
    d2 = make_dialogue(n_turns=4, tokens_per_turn=6, d_id="d2")
    spans = []
    for d_id in ("d1", "d2"):
        for t in range(4):
            spans.append(SpanAnnotation(d_id, "a1", "backchannels", t, 0, 3))
            spans.append(SpanAnnotation(d_id, "a1", "reference_word", t, 2, 4))
            shift = 0 if mark_same else 2
            spans.append(SpanAnnotation(d_id, "a2", "backchannels", t, 0 + shift, 3 + shift))
            spans.append(SpanAnnotation(d_id, "a2", "reference_word", t, 2, 4))
    per_dialogue = {
        "d1": [("topic", 4), ("tone", 2), ("opening", 5), ("closing", 3)],
        "d2": [("topic", 2), ("tone", 4), ("opening", 1), ("closing", 5)],
    }
    scores = {
        d_id: tuple(
            InteractivityScore(a, lid, s) for a in ("a1", "a2") for lid, s in pairs
        )
        for d_id, pairs in per_dialogue.items()
    }
    return Corpus(
        registry=default_registry(),
        labels=default_labels(),
        dialogues=(d1, d2),
        span_annotations=tuple(spans),
        interactivity_scores=scores,
    )


class TestAgreementReport:
    def test_identical_annotations_all_ones(self):
        report = agreement_report(corpus_with_two_annotators(mark_same=True))
        for row in (ROW_TOKEN, ROW_UTTERANCE):
            assert report.rows[row]["alpha"] == pytest.approx(1.0)
            assert report.rows[row]["pearson_r"] == pytest.approx(1.0)
        # identical scores on every label leave interval alpha at 1 but r undefined
        assert report.rows[ROW_LABELS]["alpha"] == pytest.approx(1.0)

    def test_rows_are_cell_means(self):
        report = agreement_report(corpus_with_two_annotators(mark_same=False))
        for row in (ROW_TOKEN, ROW_UTTERANCE, ROW_LABELS):
            cells = [c.alpha for c in report.cells if c.row == row and c.alpha is not None]
            if cells:
                assert report.rows[row]["alpha"] == pytest.approx(
                    sum(cells) / len(cells), abs=1e-12
                )

    def test_unmarked_features_excluded_and_counted(self):
        report = agreement_report(corpus_with_two_annotators())
        assert report.coverage["excluded_no_marks"] >= 15  # 17 features - 2 marked
        marked = {c.item_id for c in report.cells if c.row != ROW_LABELS}
        assert marked == {"backchannels", "reference_word"}

    def test_permuted_marks_give_zeroish_alpha(self):
        # Monte-Carlo: annotator B gets A's marks at permuted token positions
        rng = np.random.default_rng(99)
        alphas = []
        for _ in range(100):
            n = 80
            a = (rng.random(n) < 0.3).astype(int)
            b = a[rng.permutation(n)]
            matrix = np.stack([a, b], axis=1).tolist()
            try:
                alphas.append(krippendorff_alpha(matrix, "nominal"))
            except UndefinedStatisticError:
                continue
        assert abs(float(np.mean(alphas))) < 0.1

    def test_infer_pairing_requires_shared_dialogues(self):
        corpus = corpus_with_two_annotators()
        pairing = infer_pairing(corpus)
        assert ("a1", "a2") in pairing
        assert pairing[("a1", "a2")] == ("d1", "d2")
