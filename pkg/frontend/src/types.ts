// Wire shapes of the recording service (all bodies are schema: 1 documents).

export interface SourceDescriptor {
  kind: 'replay' | 'synthetic';
  name: string;
  params: Record<string, unknown>;
}

export interface LiveEventWire {
  session_id: string;
  elapsed_s: number;
  hr_bpm: number;
  beat_count: number;
  signal: 'ok' | 'lost';
  seq: number;
}

export interface VerdictWire {
  label: string;
  score: number;
}

export interface VerdictsWire {
  stress: VerdictWire;
  influenza: VerdictWire;
}

// Flat unit-suffixed report document; optional keys are omitted when the
// underlying quantity is undefined (e.g. lf_hf with zero HF power).
export interface ReportDoc {
  schema: number;
  window_start_s: number;
  window_end_s: number;
  beat_count: number;
  mean_rr_ms: number;
  sdnn_ms: number;
  rmssd_ms: number;
  pnn50_pct: number;
  mean_hr_bpm: number;
  vlf_power_ms2: number;
  lf_power_ms2: number;
  hf_power_ms2: number;
  total_power_ms2: number;
  sd1_ms: number;
  sd2_ms: number;
  sampen_m: number;
  sampen_r_ms: number;
  lf_hf?: number;
  lf_nu?: number;
  hf_nu?: number;
  sd1_sd2?: number;
  sampen?: number;
}

export interface StopSummary {
  session_id: string;
  state: 'Completed' | 'InsufficientData' | 'Failed' | string;
  duration_s: number;
  beat_count: number;
  removed_beats: number;
  min_duration_s: number | null;
  report: ReportDoc | null;
  verdicts: VerdictsWire | null;
}

export interface SessionRecordDoc {
  session_id: string;
  state: string;
  duration_s: number;
  subject: { pseudonym: string; age: number; sex: string; self_reported_condition: string };
  rr: { source_id: string; t_s: number[]; rr_ms: number[] };
  report: ReportDoc | null;
  verdicts: VerdictsWire | null;
}

export interface UploadReceiptWire {
  status: number;
  attempts: number;
  remote_id: string | null;
}

export interface EntryForm {
  pseudonym: string;
  age: string; // raw input text, validated before submit
  sex: 'female' | 'male' | 'unspecified';
  condition: string;
}

export interface ApiError {
  error: string;
  detail: string;
}
