/** Wire shapes of the annotation service (JSON bodies, verbatim). */

export interface FeatureDef {
  id: string;
  name: string;
  level: 'token' | 'utterance';
  description: string;
}

export interface LabelDef {
  id: string;
  name: string;
  rubric: Record<string, string>; // score "1".."5" -> description
}

export interface TurnView {
  index: number;
  speaker_id: string;
  tokens: string[];
  raw_text: string;
}

export interface DialogueSummary {
  id: string;
  topic: string;
  n_turns: number;
  progress: { spans_done: number; labels_done: number };
}

export interface SpanView {
  event_id: number | null; // null for spans imported with the base corpus
  feature_id: string;
  turn_index: number;
  token_range: [number, number];
}

export interface DialogueDetail {
  dialogue: {
    id: string;
    topic: string;
    speakers: { speaker_id: string; proficiency: string | null }[];
    turns: TurnView[];
  };
  registry: FeatureDef[];
  labels: LabelDef[];
  annotations: { spans: SpanView[]; scores: Record<string, number> };
}

export interface AnnotationEvent {
  event_id: number;
  timestamp: number;
  annotator_id: string;
  kind: 'span_added' | 'span_removed' | 'label_set';
  payload: Record<string, unknown>;
  supersedes?: number;
}

export interface TokenSelection {
  turnIndex: number;
  start: number; // inclusive token index
  end: number; // exclusive
}
