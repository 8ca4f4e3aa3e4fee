import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { AppStore, LIVE_BUFFER_SIZE, validateForm } from '../src/store.js';
import type { StopSummary } from '../src/types.js';
import { MockEventStream, jsonResponse, scriptedFetch, until } from './helpers.js';

const REST_DEVICE = {
  kind: 'synthetic' as const,
  name: 'synthetic:rest',
  params: { profile: 'rest', seed: 1, duration_s: 60.0, speed: 10.0 },
};

function completedSummary(): StopSummary {
  return {
    session_id: 's1',
    state: 'Completed',
    duration_s: 61.2,
    beat_count: 61,
    removed_beats: 0,
    min_duration_s: 5,
    report: {
      schema: 1,
      window_start_s: 0,
      window_end_s: 61.2,
      beat_count: 61,
      mean_rr_ms: 1001.2,
      sdnn_ms: 34.1,
      rmssd_ms: 44.0,
      pnn50_pct: 31.5,
      mean_hr_bpm: 59.9,
      vlf_power_ms2: 12.0,
      lf_power_ms2: 250.1,
      hf_power_ms2: 860.4,
      total_power_ms2: 1122.5,
      lf_hf: 0.29,
      lf_nu: 22.5,
      hf_nu: 77.5,
      sd1_ms: 31.2,
      sd2_ms: 36.8,
      sd1_sd2: 0.85,
      sampen: 1.43,
      sampen_m: 2,
      sampen_r_ms: 6.8,
    },
    verdicts: {
      stress: { label: 'rest', score: 1.1 },
      influenza: { label: 'healthy', score: 1.1 },
    },
  };
}

function storeWith(routes: Parameters<typeof scriptedFetch>[0], minDuration = 300) {
  return new AppStore(new ApiClient('http://test.local', scriptedFetch(routes)), minDuration);
}

describe('validateForm', () => {
  it('mirrors the subject-entry invariants', () => {
    expect(validateForm({ pseudonym: 'a', age: '30', sex: 'unspecified', condition: '' })).toBeNull();
    expect(validateForm({ pseudonym: '  ', age: '30', sex: 'unspecified', condition: '' })).toMatch(/pseudonym/);
    expect(validateForm({ pseudonym: 'a', age: '', sex: 'unspecified', condition: '' })).toMatch(/age/);
    expect(validateForm({ pseudonym: 'a', age: '0', sex: 'unspecified', condition: '' })).toMatch(/age/);
    expect(validateForm({ pseudonym: 'a', age: '131', sex: 'unspecified', condition: '' })).toMatch(/age/);
    expect(validateForm({ pseudonym: 'a', age: '30.5', sex: 'unspecified', condition: '' })).toMatch(/age/);
  });
});

describe('entry view', () => {
  it('invalid form never reaches the network', async () => {
    let requests = 0;
    const store = storeWith({
      'POST /sessions': () => {
        requests += 1;
        return jsonResponse({ session_id: 's1' }, 201);
      },
    });
    store.updateForm({ pseudonym: '', age: '30' });
    await store.submitEntry();
    const state = store.getState();
    expect(state.kind).toBe('entry');
    expect(state.kind === 'entry' && state.fieldError).toMatch(/pseudonym/);
    expect(requests).toBe(0);
  });

  it('server 422 surfaces inline and stays on the form', async () => {
    const store = storeWith({
      'POST /sessions': () =>
        jsonResponse({ error: 'InvalidEntry', detail: 'age must be an integer in [1, 130]' }, 422),
    });
    store.updateForm({ pseudonym: 'subject', age: '30' });
    await store.submitEntry();
    const state = store.getState();
    expect(state.kind).toBe('entry');
    expect(state.kind === 'entry' && state.serverError).toMatch(/age must be/);
  });

  it('valid form moves to device pick with the device list', async () => {
    const store = storeWith({
      'POST /sessions': () => jsonResponse({ session_id: 's1' }, 201),
      'GET /devices': () => jsonResponse([REST_DEVICE]),
    });
    store.updateForm({ pseudonym: 'subject', age: '30' });
    await store.submitEntry();
    const state = store.getState();
    expect(state.kind).toBe('devicePick');
    expect(state.kind === 'devicePick' && state.devices).toHaveLength(1);
  });
});

describe('device pick', () => {
  it('attach conflict lands in the error view with a retry back to devices', async () => {
    const store = storeWith({
      'POST /sessions': () => jsonResponse({ session_id: 's1' }, 201),
      'GET /devices': () => jsonResponse([REST_DEVICE]),
      'POST /sessions/s1/attach': () =>
        jsonResponse({ error: 'WrongState', detail: 'cannot attach in state Recording' }, 409),
    });
    store.updateForm({ pseudonym: 'subject', age: '30' });
    await store.submitEntry();
    await store.pickDevice(REST_DEVICE);
    const state = store.getState();
    expect(state.kind).toBe('error');
    expect(state.kind === 'error' && state.message).toMatch(/WrongState/);
    if (state.kind === 'error') {
      state.retry();
    }
    await until(() => store.getState().kind === 'devicePick');
  });
});

describe('recording', () => {
  function recordingStore(stream: MockEventStream) {
    return storeWith(
      {
        'POST /sessions': () => jsonResponse({ session_id: 's1' }, 201),
        'GET /devices': () => jsonResponse([REST_DEVICE]),
        'POST /sessions/s1/attach': () => jsonResponse({ state: 'Recording' }),
        'GET /sessions/s1/live': () => stream.response,
        'GET /sessions/s1': () => jsonResponse({ state: 'Recording' }),
        'POST /sessions/s1/stop': () => jsonResponse(completedSummary()),
      },
      5,
    );
  }

  async function startRecording(store: AppStore) {
    store.updateForm({ pseudonym: 'subject', age: '30' });
    await store.submitEntry();
    await store.pickDevice(REST_DEVICE);
    await until(() => store.getState().kind === 'recording');
  }

  it('live events update hr, beats, elapsed and signal', async () => {
    const stream = new MockEventStream();
    const store = recordingStore(stream);
    await startRecording(store);
    stream.emit({ seq: 1, hr_bpm: 61, beat_count: 1, elapsed_s: 1.0 });
    stream.emit({ seq: 2, hr_bpm: 62, beat_count: 2, elapsed_s: 2.1, signal: 'lost' });
    await until(() => {
      const s = store.getState();
      return s.kind === 'recording' && s.live.beatCount === 2;
    });
    const state = store.getState();
    if (state.kind !== 'recording') throw new Error('not recording');
    expect(state.live.hrBpm).toBe(62);
    expect(state.live.elapsedS).toBeCloseTo(2.1);
    expect(state.live.signal).toBe('lost');
  });

  it('keeps only the last 300 events and counts gaps', async () => {
    const stream = new MockEventStream();
    const store = recordingStore(stream);
    await startRecording(store);
    for (let seq = 1; seq <= 310; seq += 1) {
      stream.emit({ seq: seq === 310 ? 312 : seq }); // final jump: 2 dropped
    }
    await until(() => {
      const s = store.getState();
      return s.kind === 'recording' && s.live.events.length >= LIVE_BUFFER_SIZE;
    });
    const state = store.getState();
    if (state.kind !== 'recording') throw new Error('not recording');
    expect(state.live.events).toHaveLength(LIVE_BUFFER_SIZE);
    expect(state.live.droppedEvents).toBe(2);
  });

  it('stop lands in the result view with the summary', async () => {
    const stream = new MockEventStream();
    const store = recordingStore(stream);
    await startRecording(store);
    stream.emit({ seq: 1 });
    await store.stopRecording();
    const state = store.getState();
    expect(state.kind).toBe('result');
    expect(state.kind === 'result' && state.summary.state).toBe('Completed');
  });
});

describe('result', () => {
  it('upload success stores the receipt', async () => {
    const stream = new MockEventStream();
    const store = storeWith(
      {
        'POST /sessions': () => jsonResponse({ session_id: 's1' }, 201),
        'GET /devices': () => jsonResponse([REST_DEVICE]),
        'POST /sessions/s1/attach': () => jsonResponse({ state: 'Recording' }),
        'GET /sessions/s1/live': () => stream.response,
        'POST /sessions/s1/stop': () => jsonResponse(completedSummary()),
        'POST /sessions/s1/upload': () => jsonResponse({ status: 200, attempts: 1, remote_id: 'r1' }),
      },
      5,
    );
    store.updateForm({ pseudonym: 'subject', age: '30' });
    await store.submitEntry();
    await store.pickDevice(REST_DEVICE);
    await store.stopRecording();
    await store.uploadResult();
    const state = store.getState();
    expect(state.kind === 'result' && state.uploadReceipt?.remote_id).toBe('r1');
  });

  it('upload failure surfaces the service error code', async () => {
    const stream = new MockEventStream();
    const store = storeWith(
      {
        'POST /sessions': () => jsonResponse({ session_id: 's1' }, 201),
        'GET /devices': () => jsonResponse([REST_DEVICE]),
        'POST /sessions/s1/attach': () => jsonResponse({ state: 'Recording' }),
        'GET /sessions/s1/live': () => stream.response,
        'POST /sessions/s1/stop': () => jsonResponse(completedSummary()),
        'POST /sessions/s1/upload': () =>
          jsonResponse({ error: 'Unreachable', detail: 'SHESOP_UPLOAD_URL is not set' }, 502),
      },
      5,
    );
    store.updateForm({ pseudonym: 'subject', age: '30' });
    await store.submitEntry();
    await store.pickDevice(REST_DEVICE);
    await store.stopRecording();
    await store.uploadResult();
    const state = store.getState();
    expect(state.kind === 'result' && state.uploadError).toMatch(/Unreachable/);
  });
});

describe('refresh recovery', () => {
  it('recovers the recording view from the session record', async () => {
    const stream = new MockEventStream();
    const store = storeWith(
      {
        'GET /sessions/s9': () => jsonResponse({ state: 'Recording' }),
        'GET /sessions/s9/live': () => stream.response,
      },
      5,
    );
    await store.recover('s9');
    expect(store.getState().kind).toBe('recording');
    stream.emit({ seq: 1, session_id: 's9', hr_bpm: 64 });
    await until(() => {
      const s = store.getState();
      return s.kind === 'recording' && s.live.hrBpm === 64;
    });
  });

  it('recovers a terminal session into the result view', async () => {
    const store = storeWith({
      'GET /sessions/s9': () =>
        jsonResponse({
          session_id: 's9',
          state: 'InsufficientData',
          duration_s: 200.0,
          subject: { pseudonym: 'x', age: 30, sex: 'unspecified', self_reported_condition: '' },
          rr: { source_id: '', t_s: [], rr_ms: [] },
          report: null,
          verdicts: null,
        }),
    });
    await store.recover('s9');
    const state = store.getState();
    expect(state.kind).toBe('result');
    expect(state.kind === 'result' && state.summary.state).toBe('InsufficientData');
  });
});
