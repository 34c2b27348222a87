"""Drive the annotation service in-process: post spans and scores, read
history, export, and fold-check the event log.

Run: python3 demos/05_annotation_service.py
(For a real deployment use: slede serve --corpus c.json --log events.jsonl
 --tokens-file tokens.json --port 8000, then open frontend/index.html.)
"""

import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from slede import SyntheticConfig, corpus_from_dict, generate_synthetic, validate_corpus
from slede.service import AnnotationStore, Assignment, create_app

corpus = generate_synthetic(
    SyntheticConfig(n_dialogues=2, turns_per_dialogue=6, planted_effects={}), seed=1
)

tmp = Path(tempfile.mkdtemp())
store = AnnotationStore(corpus, log_path=tmp / "events.jsonl")
tokens = {
    "secret-a": Assignment("annA", (corpus.dialogues[0].id,)),
    "secret-admin": Assignment("lead", (), admin=True),
}
client = TestClient(create_app(store, tokens))
auth = {"Authorization": "Bearer secret-a"}
d_id = corpus.dialogues[0].id

r = client.get("/dialogues", headers=auth)
print("assigned dialogues:", [d["id"] for d in r.json()["dialogues"]])

r = client.post("/annotations/span", headers=auth, json={
    "dialogue_id": d_id, "feature_id": "backchannels", "turn_index": 0, "token_range": [0, 2],
})
span_event = r.json()["event_id"]
print(f"span accepted -> event #{span_event}")

for label, score in (("topic", 4), ("topic", 5), ("closing", 2)):
    client.post("/annotations/label", headers=auth,
                json={"dialogue_id": d_id, "label_id": label, "score": score})

mine = client.get(f"/dialogues/{d_id}", headers=auth).json()["annotations"]
print("my folded state:", {"spans": len(mine["spans"]), "scores": mine["scores"]})

history = client.get(f"/history/{d_id}", headers=auth).json()["events"]
print("history:", [(e["event_id"], e["kind"]) for e in history])

client.delete(f"/annotations/span/{span_event}", headers=auth)
mine = client.get(f"/dialogues/{d_id}", headers=auth).json()["annotations"]
print("after delete:", {"spans": len(mine["spans"]), "scores": mine["scores"]})

exported = corpus_from_dict(client.get("/export", headers={"Authorization": "Bearer secret-admin"}).json())
validate_corpus(exported)
print(f"export validates: {exported.dialogue_count} dialogues, "
      f"{len(exported.span_annotations)} spans")

# The log on disk is the source of truth: replaying it reproduces the state.
replayed = AnnotationStore(corpus, log_path=tmp / "events.jsonl")
assert len(replayed.events()) == len(store.events())
print(f"event log replays cleanly: {len(replayed.events())} events")
