"""Corpus data model: dialogues, span annotations, scores, and the JSON file format.

A corpus bundles a feature registry, the four interactivity labels, the
dialogues themselves, all span annotations, and per-dialogue 1-5 scores.
Everything is immutable after load; operations are pure functions of their
inputs plus an explicit seed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from ._rng import substream

LABEL_IDS = ("topic", "tone", "opening", "closing")
SCORE_RANGE = (1, 2, 3, 4, 5)
DEFAULT_MAX_TURNS = 12


class CorpusFormatError(ValueError):
    """Raised when a corpus file cannot be parsed into the expected shape."""


class CorpusValidationError(ValueError):
    """Raised when corpus content violates a structural invariant."""


# ---------------------------------------------------------------------------
# Domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureDef:
    """One micro-level feature: a short stable id plus display metadata."""

    id: str
    name: str
    level: str  # "token" or "utterance"
    description: str = ""

    def __post_init__(self):
        if self.level not in ("token", "utterance"):
            raise CorpusValidationError(
                f"feature {self.id!r}: level must be 'token' or 'utterance', got {self.level!r}"
            )


@dataclass(frozen=True)
class LabelDef:
    """One dialogue-level interactivity label with its 1-5 score rubric."""

    id: str
    rubric: Mapping[int, str] = field(default_factory=dict)
    name: str = ""

    def __post_init__(self):
        if self.id not in LABEL_IDS:
            raise CorpusValidationError(
                f"label id must be one of {LABEL_IDS}, got {self.id!r}"
            )
        for score in self.rubric:
            if score not in SCORE_RANGE:
                raise CorpusValidationError(
                    f"label {self.id!r}: rubric score {score} outside 1..5"
                )


@dataclass(frozen=True)
class Speaker:
    speaker_id: str
    proficiency: str | None = None


@dataclass(frozen=True)
class Turn:
    """One speaker turn, pre-tokenized so downstream numbers are tokenizer-independent."""

    index: int
    speaker_id: str
    tokens: tuple[str, ...]
    raw_text: str = ""


@dataclass(frozen=True)
class SpanAnnotation:
    """One annotator's marking of a token range [start, end) inside one turn."""

    dialogue_id: str
    annotator_id: str
    feature_id: str
    turn_index: int
    start: int
    end: int
    clipped: bool = False


@dataclass(frozen=True)
class InteractivityScore:
    """One annotator's 1-5 score for one interactivity label."""

    annotator_id: str
    label_id: str
    score: int


@dataclass(frozen=True)
class Dialogue:
    id: str
    topic: str
    speakers: tuple[Speaker, ...]
    turns: tuple[Turn, ...]

    @property
    def token_count(self) -> int:
        return sum(len(t.tokens) for t in self.turns)


@dataclass(frozen=True)
class MiniDialogue:
    """A window of consecutive turns cut from a parent dialogue.

    Turns and spans are re-indexed to the window (turn 0 is the window's
    first turn); inherited_labels carry the parent's majority labels.
    """

    id: str
    parent_dialogue_id: str
    turn_window: tuple[int, int]  # half-open [first, last) in parent coordinates
    inherited_labels: Mapping[str, int]
    turns: tuple[Turn, ...]
    projected_spans: tuple[SpanAnnotation, ...]

    @property
    def token_count(self) -> int:
        return sum(len(t.tokens) for t in self.turns)

    @property
    def raw_text(self) -> str:
        return "\n".join(t.raw_text or " ".join(t.tokens) for t in self.turns)


@dataclass(frozen=True)
class Corpus:
    registry: tuple[FeatureDef, ...]
    labels: tuple[LabelDef, ...]
    dialogues: tuple[Dialogue, ...]
    span_annotations: tuple[SpanAnnotation, ...]
    interactivity_scores: Mapping[str, tuple[InteractivityScore, ...]]

    @property
    def dialogue_count(self) -> int:
        return len(self.dialogues)

    def dialogue(self, dialogue_id: str) -> Dialogue:
        for d in self.dialogues:
            if d.id == dialogue_id:
                return d
        raise KeyError(f"unknown dialogue {dialogue_id!r}")

    def spans_for(self, dialogue_id: str) -> tuple[SpanAnnotation, ...]:
        return tuple(s for s in self.span_annotations if s.dialogue_id == dialogue_id)

    def scores_for(self, dialogue_id: str) -> tuple[InteractivityScore, ...]:
        return tuple(self.interactivity_scores.get(dialogue_id, ()))

    def feature_ids(self, level: str | None = None) -> tuple[str, ...]:
        defs = self.registry
        if level is not None:
            defs = tuple(f for f in defs if f.level == level)
        return tuple(f.id for f in defs)

    def annotator_ids(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for s in self.span_annotations:
            seen.setdefault(s.annotator_id)
        for scores in self.interactivity_scores.values():
            for sc in scores:
                seen.setdefault(sc.annotator_id)
        return tuple(seen)


# ---------------------------------------------------------------------------
# Default registry / labels
# ---------------------------------------------------------------------------


def _registry_payload() -> dict:
    text = resources.files("slede.data").joinpath("default_registry.json").read_text("utf-8")
    return json.loads(text)


def default_registry() -> tuple[FeatureDef, ...]:
    """The shipped 17-feature registry (7 token-level, 10 utterance-level)."""
    return tuple(
        FeatureDef(id=f["id"], name=f["name"], level=f["level"], description=f.get("description", ""))
        for f in _registry_payload()["registry"]
    )


def default_labels() -> tuple[LabelDef, ...]:
    """The four interactivity labels with their shipped 1-5 rubrics."""
    return tuple(
        LabelDef(
            id=entry["id"],
            name=entry.get("name", ""),
            rubric={int(k): v for k, v in entry.get("rubric", {}).items()},
        )
        for entry in _registry_payload()["labels"]
    )


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


def _norm_ws(text: str) -> str:
    return " ".join(text.split())


def validate_corpus(corpus: Corpus) -> None:
    """Check every structural invariant; raise CorpusValidationError naming the offender."""
    feature_ids = [f.id for f in corpus.registry]
    dupes = [fid for fid, n in Counter(feature_ids).items() if n > 1]
    if dupes:
        raise CorpusValidationError(f"duplicate feature ids in registry: {dupes}")

    label_ids = [l.id for l in corpus.labels]
    if sorted(label_ids) != sorted(set(label_ids)):
        raise CorpusValidationError("duplicate label ids")
    for lid in label_ids:
        if lid not in LABEL_IDS:
            raise CorpusValidationError(f"unknown label id {lid!r}")

    dialogue_ids = set()
    for d in corpus.dialogues:
        if d.id in dialogue_ids:
            raise CorpusValidationError(f"duplicate dialogue id {d.id!r}")
        dialogue_ids.add(d.id)
        if not d.turns:
            raise CorpusValidationError(f"dialogue {d.id!r} has no turns")
        speaker_ids = {s.speaker_id for s in d.speakers}
        for pos, turn in enumerate(d.turns):
            if turn.index != pos:
                raise CorpusValidationError(
                    f"dialogue {d.id!r}: turn at position {pos} has index {turn.index}"
                )
            if turn.speaker_id not in speaker_ids:
                raise CorpusValidationError(
                    f"dialogue {d.id!r} turn {pos}: speaker {turn.speaker_id!r} not declared"
                )
            if turn.raw_text and not turn.tokens:
                raise CorpusValidationError(
                    f"dialogue {d.id!r} turn {pos}: raw_text present but tokens empty"
                )
            if turn.raw_text and _norm_ws(" ".join(turn.tokens)) != _norm_ws(turn.raw_text):
                raise CorpusValidationError(
                    f"dialogue {d.id!r} turn {pos}: tokens do not normalize to raw_text"
                )

    by_id = {d.id: d for d in corpus.dialogues}
    registry_ids = set(feature_ids)
    for s in corpus.span_annotations:
        if s.dialogue_id not in by_id:
            raise CorpusValidationError(f"span references unknown dialogue {s.dialogue_id!r}")
        if s.feature_id not in registry_ids:
            raise CorpusValidationError(
                f"span in dialogue {s.dialogue_id!r}: unknown feature {s.feature_id!r}"
            )
        d = by_id[s.dialogue_id]
        if not 0 <= s.turn_index < len(d.turns):
            raise CorpusValidationError(
                f"span in dialogue {s.dialogue_id!r}: turn index {s.turn_index} out of range"
            )
        n_tokens = len(d.turns[s.turn_index].tokens)
        if not 0 <= s.start < s.end <= n_tokens:
            raise CorpusValidationError(
                f"span in dialogue {s.dialogue_id!r} turn {s.turn_index} by {s.annotator_id!r}: "
                f"range [{s.start}, {s.end}) outside 0..{n_tokens}"
            )

    for d_id, scores in corpus.interactivity_scores.items():
        if d_id not in by_id:
            raise CorpusValidationError(f"scores reference unknown dialogue {d_id!r}")
        known_labels = set(label_ids) or set(LABEL_IDS)
        for sc in scores:
            if sc.label_id not in known_labels:
                raise CorpusValidationError(
                    f"dialogue {d_id!r}: unknown label {sc.label_id!r} scored by {sc.annotator_id!r}"
                )
            if sc.score not in SCORE_RANGE:
                raise CorpusValidationError(
                    f"dialogue {d_id!r}: score {sc.score} by {sc.annotator_id!r} "
                    f"for {sc.label_id!r} outside 1..5"
                )


# ---------------------------------------------------------------------------
# Serialization (UTF-8 JSON, field-order-insensitive)
# ---------------------------------------------------------------------------


def _turn_to_dict(t: Turn) -> dict:
    return {"index": t.index, "speaker_id": t.speaker_id, "tokens": list(t.tokens), "raw_text": t.raw_text}


def _dialogue_to_dict(d: Dialogue) -> dict:
    return {
        "id": d.id,
        "topic": d.topic,
        "speakers": [
            {"speaker_id": s.speaker_id, "proficiency": s.proficiency} for s in d.speakers
        ],
        "turns": [_turn_to_dict(t) for t in d.turns],
    }


def _span_to_dict(s: SpanAnnotation) -> dict:
    out = {
        "dialogue_id": s.dialogue_id,
        "annotator_id": s.annotator_id,
        "feature_id": s.feature_id,
        "turn_index": s.turn_index,
        "token_range": [s.start, s.end],
    }
    if s.clipped:
        out["clipped"] = True
    return out


def corpus_to_dict(corpus: Corpus) -> dict:
    return {
        "registry": [
            {"id": f.id, "name": f.name, "level": f.level, "description": f.description}
            for f in corpus.registry
        ],
        "labels": [
            {"id": l.id, "name": l.name, "rubric": {str(k): v for k, v in l.rubric.items()}}
            for l in corpus.labels
        ],
        "dialogues": [_dialogue_to_dict(d) for d in corpus.dialogues],
        "span_annotations": [_span_to_dict(s) for s in corpus.span_annotations],
        "interactivity_scores": {
            d_id: [
                {"annotator_id": sc.annotator_id, "label_id": sc.label_id, "score": sc.score}
                for sc in scores
            ]
            for d_id, scores in corpus.interactivity_scores.items()
        },
    }


def _require(mapping: Mapping, key: str, where: str):
    if key not in mapping:
        raise CorpusFormatError(f"{where}: missing required field {key!r}")
    return mapping[key]


def _turn_from_dict(obj: Mapping, where: str) -> Turn:
    return Turn(
        index=int(_require(obj, "index", where)),
        speaker_id=str(_require(obj, "speaker_id", where)),
        tokens=tuple(str(t) for t in _require(obj, "tokens", where)),
        raw_text=str(obj.get("raw_text", "")),
    )


def _span_from_dict(obj: Mapping, where: str) -> SpanAnnotation:
    rng = _require(obj, "token_range", where)
    if not isinstance(rng, Sequence) or len(rng) != 2:
        raise CorpusFormatError(f"{where}: token_range must be a [start, end) pair")
    return SpanAnnotation(
        dialogue_id=str(_require(obj, "dialogue_id", where)),
        annotator_id=str(_require(obj, "annotator_id", where)),
        feature_id=str(_require(obj, "feature_id", where)),
        turn_index=int(_require(obj, "turn_index", where)),
        start=int(rng[0]),
        end=int(rng[1]),
        clipped=bool(obj.get("clipped", False)),
    )


def corpus_from_dict(payload: Mapping, validate: bool = True) -> Corpus:
    if not isinstance(payload, Mapping):
        raise CorpusFormatError("corpus document must be a JSON object")
    registry = tuple(
        FeatureDef(
            id=str(_require(f, "id", "registry entry")),
            name=str(f.get("name", f["id"])),
            level=str(_require(f, "level", f"registry entry {f.get('id')!r}")),
            description=str(f.get("description", "")),
        )
        for f in payload.get("registry", [])
    )
    labels = tuple(
        LabelDef(
            id=str(_require(l, "id", "label entry")),
            name=str(l.get("name", "")),
            rubric={int(k): str(v) for k, v in l.get("rubric", {}).items()},
        )
        for l in payload.get("labels", [])
    )
    dialogues = []
    for d in payload.get("dialogues", []):
        d_id = str(_require(d, "id", "dialogue entry"))
        where = f"dialogue {d_id!r}"
        dialogues.append(
            Dialogue(
                id=d_id,
                topic=str(d.get("topic", "")),
                speakers=tuple(
                    Speaker(
                        speaker_id=str(_require(s, "speaker_id", f"{where} speaker")),
                        proficiency=s.get("proficiency"),
                    )
                    for s in _require(d, "speakers", where)
                ),
                turns=tuple(
                    _turn_from_dict(t, f"{where} turn") for t in _require(d, "turns", where)
                ),
            )
        )
    spans = tuple(
        _span_from_dict(s, "span annotation") for s in payload.get("span_annotations", [])
    )
    scores = {
        str(d_id): tuple(
            InteractivityScore(
                annotator_id=str(_require(sc, "annotator_id", f"score for {d_id!r}")),
                label_id=str(_require(sc, "label_id", f"score for {d_id!r}")),
                score=int(_require(sc, "score", f"score for {d_id!r}")),
            )
            for sc in entries
        )
        for d_id, entries in payload.get("interactivity_scores", {}).items()
    }
    corpus = Corpus(
        registry=registry,
        labels=labels,
        dialogues=tuple(dialogues),
        span_annotations=spans,
        interactivity_scores=scores,
    )
    if validate:
        validate_corpus(corpus)
    return corpus


def dumps_canonical(payload: Mapping) -> str:
    """Serialize to the canonical byte form (sorted keys, 2-space indent)."""
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, indent=2) + "\n"


def save_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(corpus_to_dict(corpus)), encoding="utf-8")


def load_corpus(path: str | Path, validate: bool = True) -> Corpus:
    """Load and validate a corpus file.

    Parse failures raise CorpusFormatError with line/column; invariant
    violations raise CorpusValidationError naming the offending entity.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as e:
        raise CorpusFormatError(
            f"{path}: invalid JSON at line {e.lineno} column {e.colno}: {e.msg}"
        ) from e
    return corpus_from_dict(payload, validate=validate)


# ---------------------------------------------------------------------------
# Majority voting
# ---------------------------------------------------------------------------


def majority_label(scores: Sequence[int]) -> int:
    """Most frequent score; ties resolve to the lowest tied score."""
    if not scores:
        raise ValueError("majority_label needs at least one score")
    counts = Counter(scores)
    best = max(counts.values())
    return min(s for s, n in counts.items() if n == best)


def majority_labels(scores: Iterable[InteractivityScore]) -> dict[str, int]:
    """Per-label majority over a dialogue's score multiset."""
    by_label: dict[str, list[int]] = {}
    for sc in scores:
        by_label.setdefault(sc.label_id, []).append(sc.score)
    return {lid: majority_label(vals) for lid, vals in sorted(by_label.items())}


# ---------------------------------------------------------------------------
# Mini-dialogue splitting
# ---------------------------------------------------------------------------


def contiguous_windows(n_turns: int, max_turns: int = DEFAULT_MAX_TURNS) -> list[tuple[int, int]]:
    """Consecutive non-overlapping [first, last) windows covering all turns."""
    if max_turns < 1:
        raise ValueError("max_turns must be >= 1")
    return [(i, min(i + max_turns, n_turns)) for i in range(0, n_turns, max_turns)]


def _project_window(
    dialogue: Dialogue,
    spans: Sequence[SpanAnnotation],
    inherited: Mapping[str, int],
    window: tuple[int, int],
) -> MiniDialogue:
    first, last = window
    turns = tuple(
        replace(t, index=t.index - first) for t in dialogue.turns[first:last]
    )
    projected = tuple(
        replace(s, turn_index=s.turn_index - first)
        for s in spans
        if first <= s.turn_index < last
    )
    return MiniDialogue(
        id=f"{dialogue.id}:{first}-{last}",
        parent_dialogue_id=dialogue.id,
        turn_window=window,
        inherited_labels=dict(inherited),
        turns=turns,
        projected_spans=projected,
    )


def split_mini(
    dialogue: Dialogue,
    spans: Sequence[SpanAnnotation] = (),
    scores: Sequence[InteractivityScore] = (),
    max_turns: int = DEFAULT_MAX_TURNS,
    sample_k: int | None = None,
    seed: int | None = None,
) -> list[MiniDialogue]:
    """Split one dialogue into mini-dialogues of at most ``max_turns`` turns.

    Contiguous mode (default) emits every window; pass ``sample_k`` to draw
    that many windows without replacement using ``seed``. Every mini inherits
    the parent's majority labels and the spans that fall inside its window.
    Spans sit inside a single turn, and windows are made of whole turns, so a
    projected span is never cut; the ``clipped`` flag stays False.
    """
    inherited = majority_labels(scores)
    windows = contiguous_windows(len(dialogue.turns), max_turns)
    if sample_k is not None:
        if seed is None:
            raise ValueError("sample mode requires a seed")
        if not 0 <= sample_k <= len(windows):
            raise ValueError(
                f"sample_k={sample_k} outside 0..{len(windows)} for dialogue {dialogue.id!r}"
            )
        rng = substream(seed, "split", dialogue.id)
        picked = sorted(rng.choice(len(windows), size=sample_k, replace=False).tolist())
        windows = [windows[i] for i in picked]
    return [_project_window(dialogue, spans, inherited, w) for w in windows]


def split_corpus(
    corpus: Corpus,
    max_turns: int = DEFAULT_MAX_TURNS,
    total: int | None = None,
    seed: int | None = None,
) -> list[MiniDialogue]:
    """Split every dialogue; optionally sample ``total`` windows corpus-wide.

    With ``total`` set, windows are drawn without replacement from the pooled
    contiguous windows of all dialogues, so the corpus-level mini count is
    exact regardless of how dialogue lengths divide.
    """
    all_minis: list[MiniDialogue] = []
    for d in corpus.dialogues:
        all_minis.extend(
            split_mini(d, corpus.spans_for(d.id), corpus.scores_for(d.id), max_turns)
        )
    if total is None:
        return all_minis
    if seed is None:
        raise ValueError("sampling requires a seed")
    if not 0 <= total <= len(all_minis):
        raise ValueError(f"total={total} outside 0..{len(all_minis)} available windows")
    rng = substream(seed, "split", "corpus")
    picked = sorted(rng.choice(len(all_minis), size=total, replace=False).tolist())
    return [all_minis[i] for i in picked]


def minis_to_dict(minis: Sequence[MiniDialogue], corpus: Corpus) -> dict:
    """Mini-dialogue export: corpus schema plus parent/window fields."""
    payload = {
        "registry": corpus_to_dict(corpus)["registry"],
        "labels": corpus_to_dict(corpus)["labels"],
        "dialogues": [],
        "span_annotations": [],
        "interactivity_scores": {},
        "split": {"tie_rule": "lowest_tied_score"},
    }
    for m in minis:
        d = _dialogue_to_dict(
            Dialogue(
                id=m.id,
                topic="",
                speakers=tuple(
                    Speaker(sid) for sid in dict.fromkeys(t.speaker_id for t in m.turns)
                ),
                turns=m.turns,
            )
        )
        d["parent_dialogue_id"] = m.parent_dialogue_id
        d["turn_window"] = list(m.turn_window)
        payload["dialogues"].append(d)
        for s in m.projected_spans:
            span = _span_to_dict(s)
            span["dialogue_id"] = m.id
            payload["span_annotations"].append(span)
        payload["interactivity_scores"][m.id] = [
            {"annotator_id": "inherited", "label_id": lid, "score": score}
            for lid, score in sorted(m.inherited_labels.items())
        ]
    return payload


def minis_from_dict(payload: Mapping) -> list[MiniDialogue]:
    """Rebuild mini-dialogues from their export form."""
    minis = []
    spans_by_id: dict[str, list[SpanAnnotation]] = {}
    for s in payload.get("span_annotations", []):
        span = _span_from_dict(s, "span annotation")
        spans_by_id.setdefault(span.dialogue_id, []).append(span)
    for d in payload.get("dialogues", []):
        m_id = str(_require(d, "id", "mini entry"))
        turns = tuple(_turn_from_dict(t, f"mini {m_id!r} turn") for t in d.get("turns", []))
        inherited = {
            sc["label_id"]: int(sc["score"])
            for sc in payload.get("interactivity_scores", {}).get(m_id, [])
        }
        minis.append(
            MiniDialogue(
                id=m_id,
                parent_dialogue_id=str(d.get("parent_dialogue_id", m_id)),
                turn_window=tuple(d.get("turn_window", (0, len(turns)))),  # type: ignore[arg-type]
                inherited_labels=inherited,
                turns=turns,
                projected_spans=tuple(spans_by_id.get(m_id, ())),
            )
        )
    return minis


# ---------------------------------------------------------------------------
# Label-copy validation
# ---------------------------------------------------------------------------


def validate_label_copy(
    minis: Sequence[MiniDialogue],
    fresh_scores: Mapping[str, Mapping[str, int]],
) -> float:
    """Pearson r between inherited and freshly collected scores, pooled over labels.

    ``fresh_scores`` maps mini id -> label id -> re-annotated score; every
    (mini, label) pair present on both sides contributes one point.
    """
    from .agreement import pearson

    inherited, fresh = [], []
    for m in minis:
        fresh_for_mini = fresh_scores.get(m.id, {})
        for lid, score in sorted(m.inherited_labels.items()):
            if lid in fresh_for_mini:
                inherited.append(score)
                fresh.append(fresh_for_mini[lid])
    if len(inherited) < 2:
        raise ValueError("need at least 2 paired scores for a correlation")
    return pearson(inherited, fresh)


# ---------------------------------------------------------------------------
# Synthetic corpus generation (oracle substrate for tests and demos)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyntheticConfig:
    """Recipe for a corpus with planted feature-to-label effects.

    Each dialogue draws one marking rate per feature from ``rate_levels``;
    every label score is then a fixed monotone function of the slope-weighted
    sum of those rates (plus optional noise), and annotators realize the
    rates as spans via error-diffused per-turn counts. Labels with no planted
    slope get an independent uniform random score.
    """

    n_dialogues: int
    turns_per_dialogue: int
    planted_effects: Mapping[str, Mapping[str, float]] = field(default_factory=dict)
    noise: float = 0.0
    vocab: int = 200
    tokens_per_turn: tuple[int, int] = (6, 14)
    n_annotators: int = 2
    rate_levels: tuple[float, ...] = (0.1, 0.25, 0.4, 0.55, 0.7)

    def __post_init__(self):
        if self.n_dialogues < 1 or self.turns_per_dialogue < 1:
            raise ValueError("n_dialogues and turns_per_dialogue must be positive")
        if self.noise < 0:
            raise ValueError("noise must be >= 0")
        for fid, slopes in self.planted_effects.items():
            for lid, slope in slopes.items():
                if not (slope == slope and abs(slope) != float("inf")):
                    raise ValueError(f"non-finite slope for {fid!r}/{lid!r}")


def _score_bounds(
    effects: Mapping[str, Mapping[str, float]], label_id: str, levels: tuple[float, ...]
) -> tuple[float, float]:
    lo = hi = 0.0
    for slopes in effects.values():
        slope = slopes.get(label_id, 0.0)
        pair = sorted((slope * min(levels), slope * max(levels)))
        lo += pair[0]
        hi += pair[1]
    return lo, hi


def generate_synthetic(
    config: SyntheticConfig, seed: int, registry: Sequence[FeatureDef] | None = None
) -> Corpus:
    """Build a corpus whose labels are recoverable functions of marking rates."""
    registry = tuple(registry) if registry is not None else default_registry()
    labels = default_labels()
    registry_ids = {f.id for f in registry}
    for fid in config.planted_effects:
        if fid not in registry_ids:
            raise ValueError(f"planted effect references unknown feature {fid!r}")

    words = [f"w{i:03d}" for i in range(config.vocab)]
    dialogues, spans, all_scores = [], [], {}

    for d_idx in range(config.n_dialogues):
        rng = substream(seed, "synth", str(d_idx))
        d_id = f"dlg{d_idx:04d}"
        lo_tok, hi_tok = config.tokens_per_turn
        turns = []
        for t_idx in range(config.turns_per_dialogue):
            n_tok = int(rng.integers(lo_tok, hi_tok + 1))
            tokens = tuple(words[i] for i in rng.integers(0, len(words), n_tok))
            turns.append(
                Turn(
                    index=t_idx,
                    speaker_id=f"sp{t_idx % 2}",
                    tokens=tokens,
                    raw_text=" ".join(tokens),
                )
            )
        dialogues.append(
            Dialogue(
                id=d_id,
                topic="synthetic",
                speakers=(Speaker("sp0"), Speaker("sp1")),
                turns=tuple(turns),
            )
        )

        rates = {f.id: float(rng.choice(config.rate_levels)) for f in registry}

        # Label scores: monotone in the slope-weighted rate sum, binned to 1..5.
        dialogue_scores: dict[str, int] = {}
        for label in labels:
            lo, hi = _score_bounds(config.planted_effects, label.id, config.rate_levels)
            z = sum(
                slopes.get(label.id, 0.0) * rates[fid]
                for fid, slopes in config.planted_effects.items()
            )
            if hi <= lo:
                dialogue_scores[label.id] = int(rng.integers(1, 6))
                continue
            z += config.noise * float(rng.normal())
            u = min(max((z - lo) / (hi - lo), 0.0), 1.0 - 1e-12)
            dialogue_scores[label.id] = 1 + int(u * 5)

        # Spans: per annotator and feature, error-diffuse rate * turn-length
        # so each window's empirical rate tracks the planted rate closely.
        for a_idx in range(config.n_annotators):
            ann = f"ann{a_idx}"
            for f in registry:
                carry = 0.0
                for t in turns:
                    n_tok = len(t.tokens)
                    want = rates[f.id] * n_tok + carry
                    c = int(round(want))
                    carry = want - c
                    c = min(c, n_tok)
                    if c <= 0:
                        continue
                    start = int(rng.integers(0, n_tok - c + 1))
                    spans.append(
                        SpanAnnotation(
                            dialogue_id=d_id,
                            annotator_id=ann,
                            feature_id=f.id,
                            turn_index=t.index,
                            start=start,
                            end=start + c,
                        )
                    )

        all_scores[d_id] = tuple(
            InteractivityScore(annotator_id=f"ann{a_idx}", label_id=lid, score=score)
            for a_idx in range(config.n_annotators)
            for lid, score in sorted(dialogue_scores.items())
        )

    corpus = Corpus(
        registry=registry,
        labels=labels,
        dialogues=tuple(dialogues),
        span_annotations=tuple(spans),
        interactivity_scores=all_scores,
    )
    validate_corpus(corpus)
    return corpus
