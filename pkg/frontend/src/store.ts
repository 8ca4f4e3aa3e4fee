// Application state machine mirroring the recording session's lifecycle:
// Entry -> DevicePick -> Recording -> Result, plus an Error view with retry.
// Views render from this store; every displayed number comes from a service
// response field, never from client-side invention.

import { ApiClient, ServiceError } from './api.js';
import { subscribeLive, Subscription } from './stream.js';
import type {
  EntryForm,
  LiveEventWire,
  SourceDescriptor,
  StopSummary,
  UploadReceiptWire,
} from './types.js';

export const LIVE_BUFFER_SIZE = 300;

export interface LiveBuffer {
  events: LiveEventWire[]; // last LIVE_BUFFER_SIZE, oldest first
  hrBpm: number | null;
  beatCount: number;
  elapsedS: number;
  signal: 'ok' | 'lost';
  droppedEvents: number;
  reconnects: number;
}

export type ViewState =
  | { kind: 'entry'; form: EntryForm; fieldError: string | null; serverError: string | null; busy: boolean }
  | { kind: 'devicePick'; sessionId: string; devices: SourceDescriptor[]; loading: boolean; error: string | null }
  | { kind: 'recording'; sessionId: string; live: LiveBuffer; minDurationS: number | null; stopping: boolean }
  | {
      kind: 'result';
      sessionId: string;
      summary: StopSummary;
      uploadReceipt: UploadReceiptWire | null;
      uploadError: string | null;
      uploading: boolean;
    }
  | { kind: 'error'; message: string; retryLabel: string; retry: () => void };

export function emptyForm(): EntryForm {
  return { pseudonym: '', age: '', sex: 'unspecified', condition: '' };
}

export function emptyLive(): LiveBuffer {
  return {
    events: [],
    hrBpm: null,
    beatCount: 0,
    elapsedS: 0,
    signal: 'ok',
    droppedEvents: 0,
    reconnects: 0,
  };
}

/** Client-side mirror of the subject-entry invariants; null when valid. */
export function validateForm(form: EntryForm): string | null {
  if (!form.pseudonym.trim()) {
    return 'pseudonym must not be empty';
  }
  const age = Number(form.age);
  if (!Number.isInteger(age) || age < 1 || age > 130) {
    return 'age must be a whole number between 1 and 130';
  }
  return null;
}

type Listener = (state: ViewState) => void;

export class AppStore {
  private state: ViewState;
  private listeners: Listener[] = [];
  private subscription: Subscription | null = null;

  constructor(
    readonly api: ApiClient,
    /** min duration the service enforces, surfaced in the recording cue */
    private minDurationS: number | null = null,
  ) {
    this.state = { kind: 'entry', form: emptyForm(), fieldError: null, serverError: null, busy: false };
  }

  getState(): ViewState {
    return this.state;
  }

  subscribe(listener: Listener): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private setState(state: ViewState): void {
    this.state = state;
    for (const listener of [...this.listeners]) {
      listener(state);
    }
  }

  updateForm(patch: Partial<EntryForm>): void {
    if (this.state.kind !== 'entry') {
      return;
    }
    this.setState({ ...this.state, form: { ...this.state.form, ...patch }, fieldError: null });
  }

  /** Entry -> DevicePick. Invalid forms never reach the network. */
  async submitEntry(): Promise<void> {
    if (this.state.kind !== 'entry') {
      return;
    }
    const form = this.state.form;
    const fieldError = validateForm(form);
    if (fieldError) {
      this.setState({ ...this.state, fieldError });
      return;
    }
    this.setState({ ...this.state, busy: true, serverError: null });
    try {
      const { session_id } = await this.api.createSession({
        pseudonym: form.pseudonym.trim(),
        age: Number(form.age),
        sex: form.sex,
        self_reported_condition: form.condition,
      });
      this.setState({ kind: 'devicePick', sessionId: session_id, devices: [], loading: true, error: null });
      await this.refreshDevices();
    } catch (err) {
      const message = err instanceof ServiceError ? err.message : String(err);
      this.setState({ kind: 'entry', form, fieldError: null, serverError: message, busy: false });
    }
  }

  async refreshDevices(): Promise<void> {
    if (this.state.kind !== 'devicePick') {
      return;
    }
    this.setState({ ...this.state, loading: true, error: null });
    try {
      const devices = await this.api.listDevices();
      if (this.state.kind === 'devicePick') {
        this.setState({ ...this.state, devices, loading: false });
      }
    } catch (err) {
      if (this.state.kind === 'devicePick') {
        this.setState({ ...this.state, loading: false, error: String(err) });
      }
    }
  }

  /** DevicePick -> Recording: attach, then open the live subscription. */
  async pickDevice(source: SourceDescriptor): Promise<void> {
    if (this.state.kind !== 'devicePick') {
      return;
    }
    const sessionId = this.state.sessionId;
    try {
      await this.api.attach(sessionId, source);
    } catch (err) {
      const message = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
      this.setState({
        kind: 'error',
        message,
        retryLabel: 'Back to devices',
        retry: () => {
          this.setState({ kind: 'devicePick', sessionId, devices: [], loading: true, error: null });
          void this.refreshDevices();
        },
      });
      return;
    }
    this.enterRecording(sessionId);
  }

  /** Open the Recording view and subscribe; also the refresh-recovery path. */
  enterRecording(sessionId: string): void {
    this.setState({
      kind: 'recording',
      sessionId,
      live: emptyLive(),
      minDurationS: this.minDurationS,
      stopping: false,
    });
    this.openSubscription(sessionId);
  }

  private openSubscription(sessionId: string): void {
    this.subscription?.close();
    this.subscription = subscribeLive(
      this.api.liveUrl(sessionId),
      {
        onEvent: (event) => this.onLiveEvent(event),
        onGap: (missed) => this.onLiveGap(missed),
        onReconnect: () => this.onLiveReconnect(),
      },
      {
        fetchImpl: this.api.fetchImpl,
        shouldReconnect: async () => {
          try {
            const record = await this.api.getSession(sessionId);
            return record.state === 'Recording';
          } catch {
            return false;
          }
        },
        reconnectDelayMs: 500,
      },
    );
  }

  private onLiveEvent(event: LiveEventWire): void {
    if (this.state.kind !== 'recording' || event.session_id !== this.state.sessionId) {
      return;
    }
    const live = this.state.live;
    const events = [...live.events, event].slice(-LIVE_BUFFER_SIZE);
    this.setState({
      ...this.state,
      live: {
        ...live,
        events,
        hrBpm: event.hr_bpm,
        beatCount: event.beat_count,
        elapsedS: event.elapsed_s,
        signal: event.signal,
      },
    });
  }

  private onLiveGap(missed: number): void {
    if (this.state.kind !== 'recording') {
      return;
    }
    this.setState({
      ...this.state,
      live: { ...this.state.live, droppedEvents: this.state.live.droppedEvents + missed },
    });
  }

  private onLiveReconnect(): void {
    if (this.state.kind !== 'recording') {
      return;
    }
    this.setState({
      ...this.state,
      live: { ...this.state.live, reconnects: this.state.live.reconnects + 1 },
    });
  }

  /** Recording -> Result (either a full report or the too-short message). */
  async stopRecording(): Promise<void> {
    if (this.state.kind !== 'recording') {
      return;
    }
    const sessionId = this.state.sessionId;
    this.setState({ ...this.state, stopping: true });
    this.subscription?.close();
    this.subscription = null;
    try {
      const summary = await this.api.stop(sessionId);
      this.setState({
        kind: 'result',
        sessionId,
        summary,
        uploadReceipt: null,
        uploadError: null,
        uploading: false,
      });
    } catch (err) {
      const message = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
      this.setState({
        kind: 'error',
        message,
        retryLabel: 'New session',
        retry: () => this.reset(),
      });
    }
  }

  async uploadResult(): Promise<void> {
    if (this.state.kind !== 'result') {
      return;
    }
    this.setState({ ...this.state, uploading: true, uploadError: null });
    try {
      const receipt = await this.api.upload(this.state.sessionId);
      if (this.state.kind === 'result') {
        this.setState({ ...this.state, uploadReceipt: receipt, uploading: false });
      }
    } catch (err) {
      const message = err instanceof ServiceError ? `${err.code}: ${err.message}` : String(err);
      if (this.state.kind === 'result') {
        this.setState({ ...this.state, uploadError: message, uploading: false });
      }
    }
  }

  /** Full record document for the save-to-file button. */
  fetchRecord(sessionId: string) {
    return this.api.getSession(sessionId);
  }

  /** Recover the right view for a session id found in the URL. */
  async recover(sessionId: string): Promise<void> {
    try {
      const record = await this.api.getSession(sessionId);
      if (record.state === 'Recording') {
        this.enterRecording(sessionId);
      } else if (record.state === 'AwaitingDevice') {
        this.setState({ kind: 'devicePick', sessionId, devices: [], loading: true, error: null });
        await this.refreshDevices();
      } else {
        // terminal: synthesize a summary-shaped view from the record
        this.setState({
          kind: 'result',
          sessionId,
          summary: {
            session_id: sessionId,
            state: record.state,
            duration_s: record.duration_s,
            beat_count: record.rr.rr_ms.length,
            removed_beats: 0,
            min_duration_s: this.minDurationS,
            report: record.report,
            verdicts: record.verdicts,
          },
          uploadReceipt: null,
          uploadError: null,
          uploading: false,
        });
      }
    } catch {
      this.reset();
    }
  }

  reset(): void {
    this.subscription?.close();
    this.subscription = null;
    this.setState({ kind: 'entry', form: emptyForm(), fieldError: null, serverError: null, busy: false });
  }
}
