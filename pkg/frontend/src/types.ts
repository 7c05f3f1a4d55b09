/** Wire format of the inference service (JSON over HTTP). */

export interface ModelInfo {
  K: number;
  D: number;
  H: number;
  mode: "preference" | "goal";
  landscape: string;
  c_g: number;
  m_g: number;
  training_steps: number;
}

export interface SampleRecord {
  coords: number[];
  r: number[];
  scalar_reward: number;
  in_focus?: boolean;
}

export interface SampleResponse {
  samples: SampleRecord[];
  goal_accuracy?: number;
}

export interface SampleRequest {
  mode: "preference" | "goal";
  d_g?: number[];
  w?: number[];
  c_g_override?: number;
  n: number;
  seed: number;
}

export interface LandscapePoint {
  r: number[];
  masked: boolean;
}

export interface LandscapeResponse {
  points: LandscapePoint[];
  front: number[][];
}

/** One probe of a focus region against the service; append-only history. */
export interface ProbeRecord {
  /** goal direction; for K=2 the angle in radians is derivable */
  payload: number[];
  c_g: number;
  n: number;
  seed: number;
  goal_accuracy: number | null;
  zero_reward_fraction: number;
  ts: number;
}
