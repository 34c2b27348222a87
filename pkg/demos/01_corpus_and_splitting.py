"""Build a corpus in code, save/load it, vote on labels, cut mini-dialogues.

Run: python3 demos/01_corpus_and_splitting.py
"""

import tempfile
from pathlib import Path

from slede import (
    Corpus,
    Dialogue,
    InteractivityScore,
    Speaker,
    SpanAnnotation,
    Turn,
    default_labels,
    default_registry,
    load_corpus,
    majority_label,
    save_corpus,
    split_mini,
)

# A two-speaker dialogue with pre-tokenized turns. Turn indices are 0-based
# and contiguous; raw_text is optional but must normalize to the tokens.
turns = [
    Turn(0, "lea", ("hi", "how", "are", "you"), "hi how are you"),
    Turn(1, "sam", ("good", "thanks", "and", "you"), "good thanks and you"),
    Turn(2, "lea", ("great", "did", "you", "watch", "the", "game"), "great did you watch the game"),
    Turn(3, "sam", ("yeah", "it", "was", "close"), "yeah it was close"),
]
dialogue = Dialogue(
    id="demo-1",
    topic="small talk",
    speakers=(Speaker("lea", proficiency="B2"), Speaker("sam", proficiency="C1")),
    turns=tuple(turns),
)

# Two annotators mark token spans with micro-level features (half-open
# ranges in turn-token coordinates), and score the four dialogue labels.
spans = (
    SpanAnnotation("demo-1", "ann0", "backchannels", 3, 0, 1),
    SpanAnnotation("demo-1", "ann1", "backchannels", 3, 0, 1),
    SpanAnnotation("demo-1", "ann0", "reference_word", 1, 3, 4),
)
scores = {
    "demo-1": (
        InteractivityScore("ann0", "topic", 4),
        InteractivityScore("ann1", "topic", 5),
        InteractivityScore("ann2", "topic", 4),
        InteractivityScore("ann0", "opening", 5),
        InteractivityScore("ann1", "opening", 5),
    )
}

corpus = Corpus(
    registry=default_registry(),
    labels=default_labels(),
    dialogues=(dialogue,),
    span_annotations=spans,
    interactivity_scores=scores,
)

print(f"registry: {len(corpus.registry)} features "
      f"({len(corpus.feature_ids('token'))} token, {len(corpus.feature_ids('utterance'))} utterance)")
print(f"majority topic score: {majority_label([4, 5, 4])}")

# Round trip through the canonical JSON format.
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "corpus.json"
    save_corpus(corpus, path)
    reloaded = load_corpus(path)
    print(f"round trip ok: {reloaded.dialogue_count} dialogue(s), "
          f"{len(reloaded.span_annotations)} spans")

# Mini-dialogues: windows of at most `max_turns` turns that inherit the
# parent's majority labels and carry window-projected spans.
minis = split_mini(dialogue, spans, scores["demo-1"], max_turns=2)
for m in minis:
    print(f"{m.id}: window={m.turn_window} labels={m.inherited_labels} "
          f"spans={len(m.projected_spans)}")
