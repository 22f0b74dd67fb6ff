/** Payload types mirroring the service's JSON responses. */

export interface LearnerOverview {
  id: string;
  selected: boolean;
  weight: number;
  fitness: number | null;
  overall_diff: number | null;
}

export interface Overview {
  session_id: string;
  state_hash: string;
  num_samples: number;
  classes: string[];
  learners: LearnerOverview[];
  shots: { sample: number; class: number }[];
  accuracy: number | null;
}

export interface AgreementEntry {
  learner_id: string;
  overall_diff: number;
  per_class: [number, number, number][]; // learner_only, both, ensemble_only
}

export interface AgreementPayload {
  state_hash: string;
  learners: AgreementEntry[];
}

export interface HistogramPayload {
  state_hash: string;
  learner: number[]; // 4 bins
  ensemble: number[]; // 4 bins
}

export interface ProjectionSample {
  sample: number;
  x: number;
  y: number;
  class: number;
  margin: number;
  is_shot: boolean;
}

export interface ProjectionPayload {
  state_hash: string;
  seed: number;
  method: string;
  samples: ProjectionSample[];
}

export interface InfluencePayload {
  state_hash: string;
  learner_id: string;
  deltas: number[];
  up: number[];
  down: number[];
}

export interface CoveragePayload {
  state_hash: string;
  shot: number;
  neighbors: { sample: number; similarity: number }[];
}

export interface LearnerRecommendation {
  state_hash: string;
  selected_learner_ids: string[];
  objective: number;
  diversity_before: number;
  diversity_after: number;
  cooperation_before: number;
  cooperation_after: number;
  seed: number;
  converged: boolean;
}

export interface ShotRecommendation {
  state_hash: string;
  recommended_sample_indices: number[];
  to_add: number[];
  to_remove: number[];
  budget: number;
  seed: number;
}

export interface ClustersPayload {
  state_hash: string;
  kind: string;
  items: string[];
  merges: [number, number, number][];
  labels: number[];
  count: number;
}

export interface SampleDetail {
  state_hash: string;
  sample: number;
  ensemble: number[] | null;
  per_learner: Record<string, number[]>;
  is_shot: boolean;
  shot_class: number | null;
  image: string | null;
}

export type EditCommand =
  | { kind: "add_shot"; sample: number; class: number }
  | { kind: "remove_shot"; sample: number }
  | { kind: "set_learner"; learner_id: string; selected: boolean }
  | { kind: "set_weight"; learner_id: string; weight: number }
  | { kind: "undo" };
