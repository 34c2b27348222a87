import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slede import (
    Corpus,
    CorpusFormatError,
    CorpusValidationError,
    Dialogue,
    InteractivityScore,
    Speaker,
    SpanAnnotation,
    SyntheticConfig,
    Turn,
    corpus_from_dict,
    corpus_to_dict,
    default_labels,
    default_registry,
    generate_synthetic,
    load_corpus,
    majority_label,
    majority_labels,
    minis_from_dict,
    minis_to_dict,
    save_corpus,
    split_corpus,
    split_mini,
    validate_corpus,
    validate_label_copy,
)
from slede.corpus import contiguous_windows


def make_dialogue(n_turns=6, tokens_per_turn=4, d_id="d1"):
    turns = tuple(
        Turn(
            index=i,
            speaker_id=f"sp{i % 2}",
            tokens=tuple(f"t{i}_{j}" for j in range(tokens_per_turn)),
            raw_text=" ".join(f"t{i}_{j}" for j in range(tokens_per_turn)),
        )
        for i in range(n_turns)
    )
    return Dialogue(id=d_id, topic="demo", speakers=(Speaker("sp0"), Speaker("sp1")), turns=turns)


def make_corpus(n_turns=6, spans=(), scores=()):
    d = make_dialogue(n_turns)
    return Corpus(
        registry=default_registry(),
        labels=default_labels(),
        dialogues=(d,),
        span_annotations=tuple(spans),
        interactivity_scores={"d1": tuple(scores)} if scores else {},
    )


class TestRegistry:
    def test_default_shape(self):
        registry = default_registry()
        assert len(registry) == 17
        assert sum(1 for f in registry if f.level == "token") == 7
        assert sum(1 for f in registry if f.level == "utterance") == 10
        assert len({f.id for f in registry}) == 17

    def test_default_labels(self):
        labels = default_labels()
        assert [l.id for l in labels] == ["topic", "tone", "opening", "closing"]
        for l in labels:
            assert sorted(l.rubric) == [1, 2, 3, 4, 5]


class TestValidation:
    def test_valid_corpus_passes(self):
        validate_corpus(make_corpus())

    def test_span_end_past_turn(self):
        span = SpanAnnotation("d1", "a1", "backchannels", 0, 2, 9)
        with pytest.raises(CorpusValidationError, match=r"range \[2, 9\)"):
            validate_corpus(make_corpus(spans=[span]))

    def test_unknown_feature(self):
        span = SpanAnnotation("d1", "a1", "nope", 0, 0, 1)
        with pytest.raises(CorpusValidationError, match="unknown feature"):
            validate_corpus(make_corpus(spans=[span]))

    def test_score_out_of_range(self):
        score = InteractivityScore("a1", "topic", 7)
        with pytest.raises(CorpusValidationError, match="score 7"):
            validate_corpus(make_corpus(scores=[score]))

    def test_speaker_must_be_declared(self):
        d = make_dialogue()
        bad = Dialogue(id=d.id, topic=d.topic, speakers=(Speaker("sp0"),), turns=d.turns)
        corpus = Corpus(default_registry(), default_labels(), (bad,), (), {})
        with pytest.raises(CorpusValidationError, match="not declared"):
            validate_corpus(corpus)

    def test_tokens_must_normalize_to_raw_text(self):
        turn = Turn(index=0, speaker_id="sp0", tokens=("a", "b"), raw_text="something else")
        d = Dialogue("d1", "t", (Speaker("sp0"),), (turn,))
        corpus = Corpus(default_registry(), default_labels(), (d,), (), {})
        with pytest.raises(CorpusValidationError, match="normalize"):
            validate_corpus(corpus)


class TestFileFormat:
    def test_round_trip(self, tmp_path):
        span = SpanAnnotation("d1", "a1", "backchannels", 1, 0, 3)
        score = InteractivityScore("a1", "topic", 4)
        corpus = make_corpus(spans=[span], scores=[score])
        path = tmp_path / "corpus.json"
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        assert corpus_to_dict(loaded) == corpus_to_dict(corpus)

    def test_parse_error_carries_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"registry": [,]}', encoding="utf-8")
        with pytest.raises(CorpusFormatError, match="line 1 column"):
            load_corpus(path)

    def test_zero_dialogues_is_fine(self, tmp_path):
        path = tmp_path / "empty.json"
        path.write_text(
            json.dumps(
                {
                    "registry": [],
                    "labels": [],
                    "dialogues": [],
                    "span_annotations": [],
                    "interactivity_scores": {},
                }
            ),
            encoding="utf-8",
        )
        corpus = load_corpus(path)
        assert corpus.dialogue_count == 0

    def test_invalid_span_in_file_names_it(self, tmp_path):
        corpus = make_corpus()
        payload = corpus_to_dict(corpus)
        payload["span_annotations"].append(
            {
                "dialogue_id": "d1",
                "annotator_id": "a9",
                "feature_id": "backchannels",
                "turn_index": 0,
                "token_range": [0, 99],
            }
        )
        path = tmp_path / "bad_span.json"
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(CorpusValidationError, match="a9"):
            load_corpus(path)


class TestMajorityLabel:
    def test_unique_mode(self):
        assert majority_label([5, 5, 4]) == 5

    def test_tie_takes_lowest(self):
        assert majority_label([4, 5]) == 4

    def test_singleton(self):
        assert majority_label([3]) == 3

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            majority_label([])

    @given(st.lists(st.integers(min_value=1, max_value=5), min_size=1, max_size=30))
    def test_permutation_invariant(self, scores):
        assert majority_label(scores) == majority_label(sorted(scores))
        assert majority_label(scores) == majority_label(list(reversed(scores)))

    def test_majority_labels_per_label(self):
        scores = [
            InteractivityScore("a1", "topic", 5),
            InteractivityScore("a2", "topic", 5),
            InteractivityScore("a3", "topic", 4),
            InteractivityScore("a1", "tone", 2),
            InteractivityScore("a2", "tone", 3),
        ]
        assert majority_labels(scores) == {"topic": 5, "tone": 2}


class TestSplitMini:
    def test_exact_division(self):
        d = make_dialogue(n_turns=24)
        minis = split_mini(d, max_turns=12)
        assert [m.turn_window for m in minis] == [(0, 12), (12, 24)]

    def test_remainder_window(self):
        d = make_dialogue(n_turns=25)
        minis = split_mini(d, max_turns=12)
        assert [m.turn_window for m in minis] == [(0, 12), (12, 24), (24, 25)]

    def test_concatenation_reconstructs(self):
        d = make_dialogue(n_turns=31)
        minis = split_mini(d, max_turns=12)
        rebuilt = [tok for m in minis for t in m.turns for tok in t.tokens]
        original = [tok for t in d.turns for tok in t.tokens]
        assert rebuilt == original

    def test_label_inheritance(self):
        d = make_dialogue(n_turns=20)
        scores = [
            InteractivityScore("a1", "topic", 5),
            InteractivityScore("a2", "topic", 4),
            InteractivityScore("a3", "topic", 5),
        ]
        minis = split_mini(d, scores=scores, max_turns=12)
        for m in minis:
            assert m.inherited_labels["topic"] == majority_label([5, 4, 5])

    def test_span_projection_reindexes(self):
        d = make_dialogue(n_turns=20)
        spans = [
            SpanAnnotation("d1", "a1", "backchannels", 3, 1, 3),
            SpanAnnotation("d1", "a1", "backchannels", 15, 0, 2),
        ]
        minis = split_mini(d, spans=spans, max_turns=12)
        assert [s.turn_index for s in minis[0].projected_spans] == [3]
        assert [s.turn_index for s in minis[1].projected_spans] == [3]  # 15 - 12
        total = sum(len(m.projected_spans) for m in minis)
        assert total == len(spans)
        assert not any(s.clipped for m in minis for s in m.projected_spans)

    def test_sample_mode_is_seeded(self):
        d = make_dialogue(n_turns=60)
        a = split_mini(d, max_turns=12, sample_k=3, seed=5)
        b = split_mini(d, max_turns=12, sample_k=3, seed=5)
        assert [m.turn_window for m in a] == [m.turn_window for m in b]
        assert len(a) == 3

    def test_windows_never_exceed_max(self):
        for n in (1, 5, 12, 13, 100):
            for w in contiguous_windows(n, 12):
                assert w[1] - w[0] <= 12


class TestSplitCorpus:
    def test_sampling_hits_exact_total(self):
        cfg = SyntheticConfig(n_dialogues=10, turns_per_dialogue=30, planted_effects={})
        corpus = generate_synthetic(cfg, seed=3)
        minis = split_corpus(corpus, max_turns=12, total=17, seed=3)
        assert len(minis) == 17

    def test_minis_export_round_trip(self):
        cfg = SyntheticConfig(n_dialogues=3, turns_per_dialogue=15, planted_effects={})
        corpus = generate_synthetic(cfg, seed=3)
        minis = split_corpus(corpus, max_turns=12)
        payload = minis_to_dict(minis, corpus)
        rebuilt = minis_from_dict(payload)
        assert [m.id for m in rebuilt] == [m.id for m in minis]
        assert [m.inherited_labels for m in rebuilt] == [m.inherited_labels for m in minis]
        assert [len(m.projected_spans) for m in rebuilt] == [
            len(m.projected_spans) for m in minis
        ]


class TestValidateLabelCopy:
    def _minis(self):
        d = make_dialogue(n_turns=24)
        scores = [InteractivityScore("a1", lid, s) for lid, s in
                  [("topic", 4), ("tone", 2), ("opening", 5), ("closing", 1)]]
        return split_mini(d, scores=scores, max_turns=12)

    def test_identical_scores_give_one(self):
        minis = self._minis()
        fresh = {m.id: dict(m.inherited_labels) for m in minis}
        assert validate_label_copy(minis, fresh) == pytest.approx(1.0)

    def test_reversed_scores_give_minus_one(self):
        minis = self._minis()[:1]
        m = minis[0]
        # inherited (1,2,4,5) against fresh (5,4,2,1), pooled over labels
        inherited = sorted(m.inherited_labels.items(), key=lambda kv: kv[1])
        fresh_scores = {
            m.id: {
                lid: rev
                for (lid, _), rev in zip(inherited, sorted((s for _, s in inherited), reverse=True))
            }
        }
        assert validate_label_copy(minis, fresh_scores) == pytest.approx(-1.0)

    def test_too_few_pairs_rejected(self):
        minis = self._minis()
        with pytest.raises(ValueError):
            validate_label_copy(minis[:1], {minis[0].id: {"topic": 3}})


class TestGenerateSynthetic:
    def test_same_seed_identical_bytes(self):
        cfg = SyntheticConfig(n_dialogues=4, turns_per_dialogue=10, planted_effects={})
        a = json.dumps(corpus_to_dict(generate_synthetic(cfg, seed=9)), sort_keys=True)
        b = json.dumps(corpus_to_dict(generate_synthetic(cfg, seed=9)), sort_keys=True)
        assert a == b

    def test_different_seed_differs(self):
        cfg = SyntheticConfig(n_dialogues=4, turns_per_dialogue=10, planted_effects={})
        a = json.dumps(corpus_to_dict(generate_synthetic(cfg, seed=9)), sort_keys=True)
        b = json.dumps(corpus_to_dict(generate_synthetic(cfg, seed=10)), sort_keys=True)
        assert a != b

    def test_noise_free_scores_track_rates(self):
        # opposite slopes on topic: score must be a function of the two rates
        effects = {"reference_word": {"topic": 1.0}, "backchannels": {"topic": -1.0}}
        cfg = SyntheticConfig(n_dialogues=30, turns_per_dialogue=20, planted_effects=effects)
        corpus = generate_synthetic(cfg, seed=4)
        from slede.featurize import feature_weight

        seen: dict[tuple[float, float], int] = {}
        for d in corpus.dialogues:
            minis = split_mini(d, corpus.spans_for(d.id), corpus.scores_for(d.id), max_turns=999)
            m = minis[0]
            key = (
                round(feature_weight(m, "reference_word"), 1),
                round(feature_weight(m, "backchannels"), 1),
            )
            score = m.inherited_labels["topic"]
            assert seen.setdefault(key, score) == score

    def test_generated_corpus_validates(self, planted_corpus):
        validate_corpus(planted_corpus)
