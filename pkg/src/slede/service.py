"""HTTP annotation service: serves dialogues, records span/label events, exports corpora.

State is an append-only event log over a base corpus. Folding the log always
reproduces current state, so the log is the single source of truth and every
response reflects all events appended before the request was accepted.
Persistence is one JSON-lines file per corpus; appends are serialized by a
lock, reads work on immutable snapshots.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Mapping

from fastapi import Depends, FastAPI, Header, HTTPException, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .corpus import (
    Corpus,
    CorpusValidationError,
    InteractivityScore,
    SpanAnnotation,
    corpus_to_dict,
    majority_labels,
    validate_corpus,
)

EVENT_SPAN_ADDED = "span_added"
EVENT_SPAN_REMOVED = "span_removed"
EVENT_LABEL_SET = "label_set"


@dataclass(frozen=True)
class AnnotationEvent:
    event_id: int
    timestamp: float
    annotator_id: str
    kind: str
    payload: Mapping
    supersedes: int | None = None

    def to_dict(self) -> dict:
        out = {
            "event_id": self.event_id,
            "timestamp": self.timestamp,
            "annotator_id": self.annotator_id,
            "kind": self.kind,
            "payload": dict(self.payload),
        }
        if self.supersedes is not None:
            out["supersedes"] = self.supersedes
        return out


@dataclass(frozen=True)
class Assignment:
    annotator_id: str
    assigned: tuple[str, ...]
    admin: bool = False

    def can_see(self, dialogue_id: str) -> bool:
        return self.admin or dialogue_id in self.assigned


def load_tokens(path: str | Path) -> dict[str, Assignment]:
    """Static token file: token -> {annotator_id, assigned: [...], admin: bool}."""
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return {
        token: Assignment(
            annotator_id=entry["annotator_id"],
            assigned=tuple(entry.get("assigned", ())),
            admin=bool(entry.get("admin", False)),
        )
        for token, entry in payload.items()
    }


class AnnotationStore:
    """Append-only event log over a base corpus, with folded-state snapshots."""

    def __init__(
        self,
        corpus: Corpus,
        log_path: str | Path | None = None,
        clock: Callable[[], float] = time.time,
    ):
        self.base = corpus
        self.log_path = Path(log_path) if log_path is not None else None
        self._clock = clock
        self._lock = threading.Lock()
        self._events: list[AnnotationEvent] = []
        if self.log_path is not None and self.log_path.exists():
            for line in self.log_path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    self._events.append(self._event_from_json(json.loads(line)))

    @staticmethod
    def _event_from_json(obj: Mapping) -> AnnotationEvent:
        return AnnotationEvent(
            event_id=int(obj["event_id"]),
            timestamp=float(obj["timestamp"]),
            annotator_id=str(obj["annotator_id"]),
            kind=str(obj["kind"]),
            payload=dict(obj["payload"]),
            supersedes=obj.get("supersedes"),
        )

    def append(
        self, kind: str, annotator_id: str, payload: Mapping, supersedes: int | None = None
    ) -> AnnotationEvent:
        with self._lock:
            event = AnnotationEvent(
                event_id=self._events[-1].event_id + 1 if self._events else 1,
                timestamp=self._clock(),
                annotator_id=annotator_id,
                kind=kind,
                payload=dict(payload),
                supersedes=supersedes,
            )
            if self.log_path is not None:
                with self.log_path.open("a", encoding="utf-8") as f:
                    f.write(json.dumps(event.to_dict(), sort_keys=True) + "\n")
            self._events.append(event)
            return event

    def events(self, dialogue_id: str | None = None) -> tuple[AnnotationEvent, ...]:
        with self._lock:
            snapshot = tuple(self._events)
        if dialogue_id is None:
            return snapshot
        return tuple(e for e in snapshot if e.payload.get("dialogue_id") == dialogue_id)

    def added_span_event(self, event_id: int) -> AnnotationEvent | None:
        """The span_added event with this id, or None if absent or already removed."""
        snapshot = self.events()
        removed = {e.supersedes for e in snapshot if e.kind == EVENT_SPAN_REMOVED}
        for e in snapshot:
            if e.event_id == event_id and e.kind == EVENT_SPAN_ADDED and event_id not in removed:
                return e
        return None

    def folded(self) -> Corpus:
        """Base corpus plus the net effect of the event log."""
        snapshot = self.events()
        removed = {e.supersedes for e in snapshot if e.kind == EVENT_SPAN_REMOVED}
        spans = list(self.base.span_annotations)
        for e in snapshot:
            if e.kind == EVENT_SPAN_ADDED and e.event_id not in removed:
                p = e.payload
                spans.append(
                    SpanAnnotation(
                        dialogue_id=p["dialogue_id"],
                        annotator_id=e.annotator_id,
                        feature_id=p["feature_id"],
                        turn_index=int(p["turn_index"]),
                        start=int(p["token_range"][0]),
                        end=int(p["token_range"][1]),
                    )
                )
        # label_set is last-write-wins per (annotator, dialogue, label)
        latest: dict[tuple[str, str, str], int] = {}
        for e in snapshot:
            if e.kind == EVENT_LABEL_SET:
                p = e.payload
                latest[(e.annotator_id, p["dialogue_id"], p["label_id"])] = int(p["score"])
        scores = {d_id: list(entries) for d_id, entries in self.base.interactivity_scores.items()}
        for (annotator_id, d_id, label_id), score in latest.items():
            kept = [
                sc
                for sc in scores.get(d_id, [])
                if not (sc.annotator_id == annotator_id and sc.label_id == label_id)
            ]
            kept.append(
                InteractivityScore(annotator_id=annotator_id, label_id=label_id, score=score)
            )
            scores[d_id] = kept
        return replace(
            self.base,
            span_annotations=tuple(spans),
            interactivity_scores={d_id: tuple(v) for d_id, v in scores.items()},
        )


# ---------------------------------------------------------------------------
# Wire shapes
# ---------------------------------------------------------------------------


class SpanBody(BaseModel):
    dialogue_id: str
    feature_id: str
    turn_index: int = Field(ge=0)
    token_range: tuple[int, int]


class LabelBody(BaseModel):
    dialogue_id: str
    label_id: str
    score: int = Field(ge=1, le=5)


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


def create_app(store: AnnotationStore, tokens: Mapping[str, Assignment]) -> FastAPI:
    app = FastAPI(title="slede annotation service")

    @app.exception_handler(RequestValidationError)
    async def malformed(request: Request, exc: RequestValidationError):
        return JSONResponse(status_code=400, content={"detail": exc.errors()})

    def caller(authorization: str = Header(default="")) -> Assignment:
        token = authorization.removeprefix("Bearer ").strip()
        if token not in tokens:
            raise HTTPException(status_code=401, detail="bad token")
        return tokens[token]

    def visible_dialogue(dialogue_id: str, who: Assignment):
        try:
            dialogue = store.base.dialogue(dialogue_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown dialogue {dialogue_id!r}")
        if not who.can_see(dialogue_id):
            raise HTTPException(status_code=403, detail="dialogue not assigned to you")
        return dialogue

    def caller_annotations(folded: Corpus, dialogue_id: str, annotator_id: str) -> dict:
        snapshot = store.events(dialogue_id)
        removed = {e.supersedes for e in snapshot if e.kind == EVENT_SPAN_REMOVED}
        event_span_ids = {
            (e.payload["feature_id"], int(e.payload["turn_index"]),
             int(e.payload["token_range"][0]), int(e.payload["token_range"][1])): e.event_id
            for e in snapshot
            if e.kind == EVENT_SPAN_ADDED
            and e.event_id not in removed
            and e.annotator_id == annotator_id
        }
        spans = []
        for s in folded.spans_for(dialogue_id):
            if s.annotator_id != annotator_id:
                continue
            key = (s.feature_id, s.turn_index, s.start, s.end)
            spans.append(
                {
                    "event_id": event_span_ids.get(key),
                    "feature_id": s.feature_id,
                    "turn_index": s.turn_index,
                    "token_range": [s.start, s.end],
                }
            )
        scores = {
            sc.label_id: sc.score
            for sc in folded.scores_for(dialogue_id)
            if sc.annotator_id == annotator_id
        }
        return {"spans": spans, "scores": scores}

    @app.get("/dialogues")
    def list_dialogues(who: Assignment = Depends(caller)):
        folded = store.folded()
        out = []
        for d in store.base.dialogues:
            if not who.can_see(d.id):
                continue
            mine = caller_annotations(folded, d.id, who.annotator_id)
            out.append(
                {
                    "id": d.id,
                    "topic": d.topic,
                    "n_turns": len(d.turns),
                    "progress": {
                        "spans_done": len(mine["spans"]),
                        "labels_done": len(mine["scores"]),
                    },
                }
            )
        return {"annotator_id": who.annotator_id, "dialogues": out}

    @app.get("/dialogues/{dialogue_id}")
    def get_dialogue(dialogue_id: str, who: Assignment = Depends(caller)):
        dialogue = visible_dialogue(dialogue_id, who)
        folded = store.folded()
        payload = corpus_to_dict(store.base)
        return {
            "dialogue": {
                "id": dialogue.id,
                "topic": dialogue.topic,
                "speakers": [
                    {"speaker_id": s.speaker_id, "proficiency": s.proficiency}
                    for s in dialogue.speakers
                ],
                "turns": [
                    {
                        "index": t.index,
                        "speaker_id": t.speaker_id,
                        "tokens": list(t.tokens),
                        "raw_text": t.raw_text,
                    }
                    for t in dialogue.turns
                ],
            },
            "registry": payload["registry"],
            "labels": payload["labels"],
            "annotations": caller_annotations(folded, dialogue_id, who.annotator_id),
        }

    @app.post("/annotations/span", status_code=201)
    def post_span(body: SpanBody, who: Assignment = Depends(caller)):
        dialogue = visible_dialogue(body.dialogue_id, who)
        if body.feature_id not in {f.id for f in store.base.registry}:
            raise HTTPException(status_code=400, detail=f"unknown feature {body.feature_id!r}")
        start, end = body.token_range
        if not 0 <= body.turn_index < len(dialogue.turns):
            raise HTTPException(
                status_code=409,
                detail=f"turn {body.turn_index} outside dialogue {dialogue.id!r}",
            )
        n_tokens = len(dialogue.turns[body.turn_index].tokens)
        if not 0 <= start < end <= n_tokens:
            raise HTTPException(
                status_code=409,
                detail=f"token range [{start}, {end}) outside turn of {n_tokens} tokens",
            )
        event = store.append(
            EVENT_SPAN_ADDED,
            who.annotator_id,
            {
                "dialogue_id": body.dialogue_id,
                "feature_id": body.feature_id,
                "turn_index": body.turn_index,
                "token_range": [start, end],
            },
        )
        return {"event_id": event.event_id}

    @app.post("/annotations/label", status_code=201)
    def post_label(body: LabelBody, who: Assignment = Depends(caller)):
        visible_dialogue(body.dialogue_id, who)
        label_ids = {l.id for l in store.base.labels}
        if body.label_id not in label_ids:
            raise HTTPException(status_code=400, detail=f"unknown label {body.label_id!r}")
        event = store.append(
            EVENT_LABEL_SET,
            who.annotator_id,
            {"dialogue_id": body.dialogue_id, "label_id": body.label_id, "score": body.score},
        )
        return {"event_id": event.event_id}

    @app.delete("/annotations/span/{event_id}")
    def delete_span(event_id: int, who: Assignment = Depends(caller)):
        added = store.added_span_event(event_id)
        if added is None:
            raise HTTPException(status_code=404, detail=f"no active span event {event_id}")
        if added.annotator_id != who.annotator_id and not who.admin:
            raise HTTPException(status_code=403, detail="span belongs to another annotator")
        event = store.append(
            EVENT_SPAN_REMOVED, who.annotator_id, dict(added.payload), supersedes=event_id
        )
        return {"event_id": event.event_id, "removed": event_id}

    @app.get("/history/{dialogue_id}")
    def history(dialogue_id: str, who: Assignment = Depends(caller)):
        visible_dialogue(dialogue_id, who)
        return {"events": [e.to_dict() for e in store.events(dialogue_id)]}

    @app.get("/export")
    def export(who: Assignment = Depends(caller)):
        folded = store.folded()
        try:
            validate_corpus(folded)
        except CorpusValidationError as e:  # pragma: no cover - log corruption guard
            raise HTTPException(status_code=500, detail=str(e))
        return corpus_to_dict(folded)

    @app.get("/majorities")
    def majorities(who: Assignment = Depends(caller)):
        folded = store.folded()
        return {
            d.id: majority_labels(folded.scores_for(d.id))
            for d in folded.dialogues
            if folded.scores_for(d.id)
        }

    return app


def build_service(
    corpus: Corpus,
    log_path: str | Path | None,
    tokens_path: str | Path,
    clock: Callable[[], float] = time.time,
) -> FastAPI:
    store = AnnotationStore(corpus, log_path=log_path, clock=clock)
    return create_app(store, load_tokens(tokens_path))
