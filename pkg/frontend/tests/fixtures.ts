/** Golden session payloads used by the snapshot tests. */

import type {
  AgreementPayload,
  HistogramPayload,
  InfluencePayload,
  Overview,
  ProjectionPayload,
} from "../src/types.js";

export const HASH = "a".repeat(32);

export const overview: Overview = {
  session_id: "s1",
  state_hash: HASH,
  num_samples: 12,
  classes: ["cat", "dog", "fox"],
  learners: [
    { id: "L0", selected: true, weight: 1.0, fitness: 0.2, overall_diff: 1 },
    { id: "L1", selected: true, weight: 1.5, fitness: 0.9, overall_diff: 4 },
  ],
  shots: [
    { sample: 0, class: 0 },
    { sample: 5, class: 1 },
  ],
  accuracy: 0.8,
};

export const agreement: AgreementPayload = {
  state_hash: HASH,
  learners: [
    {
      learner_id: "L0",
      overall_diff: 1,
      per_class: [
        [1, 3, 0],
        [0, 4, 1],
        [0, 2, 1],
      ],
    },
    {
      learner_id: "L1",
      overall_diff: 4,
      per_class: [
        [2, 2, 1],
        [1, 3, 2],
        [1, 1, 1],
      ],
    },
  ],
};

export const histogramsL0: HistogramPayload[] = [
  { state_hash: HASH, learner: [0, 1, 2, 1], ensemble: [1, 0, 1, 1] },
  { state_hash: HASH, learner: [2, 0, 1, 1], ensemble: [0, 2, 1, 2] },
  { state_hash: HASH, learner: [0, 0, 0, 2], ensemble: [1, 1, 1, 0] },
];

export const projection: ProjectionPayload = {
  state_hash: HASH,
  seed: 1,
  method: "tsne-exact",
  samples: [
    { sample: 0, x: 0.0, y: 0.0, class: 0, margin: 0.9, is_shot: true },
    { sample: 1, x: 1.0, y: 0.2, class: 0, margin: 0.15, is_shot: false },
    { sample: 2, x: 2.0, y: 1.5, class: 1, margin: 0.5, is_shot: false },
    { sample: 3, x: 0.4, y: 2.0, class: 2, margin: 0.2, is_shot: false },
    { sample: 5, x: 1.8, y: 1.4, class: 1, margin: 0.8, is_shot: true },
  ],
};

export const influence: InfluencePayload = {
  state_hash: HASH,
  learner_id: "L1",
  deltas: [0.25, -0.05, -0.3, 0.0, 0.1],
  up: [0],
  down: [2],
};
