// DOM rendering for each view state. render() rebuilds the root element from
// the store state; handlers call back into the store. Every number displayed
// comes from a service response field (RR in the chart is the unit inverse
// of the live hr_bpm field).

import { drawRollingChart } from './chart.js';
import type { AppStore, ViewState } from './store.js';
import type { ReportDoc, SourceDescriptor, StopSummary } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  attrs: Record<string, string> = {},
  children: (Node | string)[] = [],
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) {
    node.setAttribute(key, value);
  }
  node.append(...children);
  return node;
}

function describeSource(source: SourceDescriptor): string {
  if (source.kind === 'synthetic') {
    return `${source.name} — simulated strap (${String(source.params['profile'])} profile)`;
  }
  return `${source.name} — recorded file`;
}

// -- entry ---------------------------------------------------------------

function renderEntry(state: Extract<ViewState, { kind: 'entry' }>, store: AppStore): HTMLElement {
  const pseudonym = el('input', {
    id: 'pseudonym',
    value: state.form.pseudonym,
    placeholder: 'pseudonym',
    autocomplete: 'off',
  });
  pseudonym.addEventListener('input', () => store.updateForm({ pseudonym: pseudonym.value }));

  const age = el('input', { id: 'age', value: state.form.age, placeholder: 'age', inputmode: 'numeric' });
  age.addEventListener('input', () => store.updateForm({ age: age.value }));

  const sex = el('select', { id: 'sex' });
  for (const option of ['unspecified', 'female', 'male']) {
    const opt = el('option', { value: option }, [option]);
    if (option === state.form.sex) {
      opt.selected = true;
    }
    sex.append(opt);
  }
  sex.addEventListener('change', () =>
    store.updateForm({ sex: sex.value as 'female' | 'male' | 'unspecified' }),
  );

  const condition = el('input', {
    id: 'condition',
    value: state.form.condition,
    placeholder: 'how do you feel? (free text)',
  });
  condition.addEventListener('input', () => store.updateForm({ condition: condition.value }));

  const submit = el('button', { id: 'submit-entry' }, [state.busy ? 'Creating…' : 'Continue']);
  submit.disabled = state.busy;
  submit.addEventListener('click', () => void store.submitEntry());

  const error = state.fieldError ?? state.serverError;
  return el('section', { class: 'view view-entry' }, [
    el('h2', {}, ['Subject entry']),
    el('label', { for: 'pseudonym' }, ['Pseudonym']),
    pseudonym,
    el('label', { for: 'age' }, ['Age']),
    age,
    el('label', { for: 'sex' }, ['Sex']),
    sex,
    el('label', { for: 'condition' }, ['Self-reported condition']),
    condition,
    submit,
    ...(error ? [el('p', { class: 'inline-error', role: 'alert' }, [error])] : []),
  ]);
}

// -- device pick -----------------------------------------------------------

function renderDevicePick(
  state: Extract<ViewState, { kind: 'devicePick' }>,
  store: AppStore,
): HTMLElement {
  const rescan = el('button', { id: 'rescan' }, ['Rescan']);
  rescan.addEventListener('click', () => void store.refreshDevices());

  let body: HTMLElement;
  if (state.loading) {
    body = el('p', {}, ['Scanning for sources…']);
  } else if (state.devices.length === 0) {
    body = el('div', { class: 'not-detected' }, [
      el('p', {}, ['No heart-rate source detected.']),
      rescan,
    ]);
  } else {
    const list = el('ul', { class: 'device-list' });
    for (const device of state.devices) {
      const pick = el('button', { class: 'pick-device', 'data-device': device.name }, ['Record']);
      pick.addEventListener('click', () => void store.pickDevice(device));
      list.append(el('li', {}, [describeSource(device), ' ', pick]));
    }
    body = el('div', {}, [list, rescan]);
  }
  return el('section', { class: 'view view-device-pick' }, [
    el('h2', {}, ['Pick a source']),
    body,
    ...(state.error ? [el('p', { class: 'inline-error' }, [state.error])] : []),
  ]);
}

// -- recording ---------------------------------------------------------------

function renderRecording(
  state: Extract<ViewState, { kind: 'recording' }>,
  store: AppStore,
): HTMLElement {
  const live = state.live;
  const min = state.minDurationS;
  const enough = min === null || live.elapsedS >= min;
  const cue = el(
    'p',
    { id: 'duration-cue', class: `duration-cue ${enough ? 'cue-green' : 'cue-amber'}` },
    [
      min === null
        ? `elapsed ${live.elapsedS.toFixed(0)} s`
        : enough
          ? `elapsed ${live.elapsedS.toFixed(0)} s — enough data (≥ ${min.toFixed(0)} s)`
          : `elapsed ${live.elapsedS.toFixed(0)} s of ${min.toFixed(0)} s minimum`,
    ],
  );

  const stop = el('button', { id: 'stop' }, [state.stopping ? 'Stopping…' : 'Stop & analyze']);
  stop.disabled = state.stopping;
  stop.addEventListener('click', () => void store.stopRecording());

  const canvas = el('canvas', { id: 'rr-chart', width: '560', height: '120' });
  // chart RR(ms) as the unit inverse of the live hr_bpm samples
  const points = live.events
    .filter((e) => e.hr_bpm > 0)
    .map((e) => ({ x: e.elapsed_s, y: 60000 / e.hr_bpm }));
  queueMicrotask(() => drawRollingChart(canvas, points, 'RR ms'));

  return el('section', { class: 'view view-recording' }, [
    el('h2', {}, ['Recording']),
    ...(live.signal === 'lost'
      ? [el('div', { id: 'signal-banner', class: 'banner' }, ['Signal lost — check the strap'])]
      : []),
    ...(live.droppedEvents > 0
      ? [
          el('p', { id: 'dropped-notice', class: 'notice' }, [
            `${live.droppedEvents} events dropped`,
          ]),
        ]
      : []),
    ...(live.reconnects > 0
      ? [el('p', { class: 'notice' }, [`stream reconnected ×${live.reconnects}`])]
      : []),
    el('div', { id: 'hr-numeral', class: 'hr-numeral' }, [
      live.hrBpm === null ? '—' : String(live.hrBpm),
    ]),
    el('p', { id: 'beat-count' }, [`${live.beatCount} beats`]),
    cue,
    canvas,
    stop,
  ]);
}

// -- result ---------------------------------------------------------------------

const REPORT_ROWS: [keyof ReportDoc, string, string][] = [
  ['mean_rr_ms', 'Mean RR', 'ms'],
  ['sdnn_ms', 'SDNN', 'ms'],
  ['rmssd_ms', 'RMSSD', 'ms'],
  ['pnn50_pct', 'pNN50', '%'],
  ['mean_hr_bpm', 'Mean HR', 'bpm'],
  ['vlf_power_ms2', 'VLF power', 'ms²'],
  ['lf_power_ms2', 'LF power', 'ms²'],
  ['hf_power_ms2', 'HF power', 'ms²'],
  ['total_power_ms2', 'Total power', 'ms²'],
  ['lf_hf', 'LF/HF', ''],
  ['lf_nu', 'LF', 'nu'],
  ['hf_nu', 'HF', 'nu'],
  ['sd1_ms', 'Poincaré SD1', 'ms'],
  ['sd2_ms', 'Poincaré SD2', 'ms'],
  ['sd1_sd2', 'SD1/SD2', ''],
  ['sampen', 'Sample entropy', ''],
];

function reportTable(report: ReportDoc): HTMLElement {
  const table = el('table', { id: 'report-table', class: 'report-table' });
  for (const [key, label, unit] of REPORT_ROWS) {
    const value = report[key];
    if (value === undefined) {
      continue; // absent by contract (e.g. lf_hf with zero HF power)
    }
    table.append(
      el('tr', {}, [
        el('td', {}, [label]),
        el('td', { class: 'num' }, [typeof value === 'number' ? value.toFixed(3) : String(value)]),
        el('td', { class: 'unit' }, [unit]),
      ]),
    );
  }
  return table;
}

function insufficientMessage(summary: StopSummary): string {
  const required =
    summary.min_duration_s === null ? 'the required minimum' : `${summary.min_duration_s.toFixed(0)} s`;
  return (
    `Not enough data: ${summary.duration_s.toFixed(0)} s recorded with ` +
    `${summary.beat_count} beats, but at least ${required} of recording is required.`
  );
}

function renderResult(state: Extract<ViewState, { kind: 'result' }>, store: AppStore): HTMLElement {
  const summary = state.summary;
  const children: (Node | string)[] = [el('h2', {}, ['Result'])];

  if (summary.state === 'Completed' && summary.report && summary.verdicts) {
    children.push(
      el('div', { id: 'nonclinical-banner', class: 'banner banner-warn' }, [
        'NON-CLINICAL — synthetic-data models, demonstration only',
      ]),
      el('div', { id: 'verdicts', class: 'verdicts' }, [
        el('p', {}, [
          `Stress: ${summary.verdicts.stress.label} ` +
            `(score ${summary.verdicts.stress.score.toFixed(2)})`,
        ]),
        el('p', {}, [
          `Influenza: ${summary.verdicts.influenza.label} ` +
            `(score ${summary.verdicts.influenza.score.toFixed(2)})`,
        ]),
      ]),
      el('p', {}, [
        `${summary.duration_s.toFixed(0)} s of recording, ${summary.beat_count} beats ` +
          `(${summary.removed_beats} removed as ectopic/implausible)`,
      ]),
      reportTable(summary.report),
    );
  } else if (summary.state === 'InsufficientData') {
    children.push(el('p', { id: 'insufficient-message', class: 'banner' }, [insufficientMessage(summary)]));
  } else {
    children.push(el('p', { class: 'inline-error' }, [`Session ended in state ${summary.state}.`]));
  }

  const save = el('button', { id: 'save' }, ['Save record']);
  save.addEventListener('click', () => {
    void store.fetchRecord(summary.session_id).then((record) => {
      const blob = new Blob([JSON.stringify(record, null, 2)], { type: 'application/json' });
      const link = el('a', {
        href: URL.createObjectURL(blob),
        download: `session-${summary.session_id}.json`,
      });
      link.click();
      URL.revokeObjectURL(link.href);
    });
  });

  const upload = el('button', { id: 'upload' }, [state.uploading ? 'Uploading…' : 'Upload']);
  upload.disabled = state.uploading;
  upload.addEventListener('click', () => void store.uploadResult());

  const again = el('button', { id: 'new-session' }, ['New session']);
  again.addEventListener('click', () => store.reset());

  children.push(el('div', { class: 'actions' }, [save, upload, again]));
  if (state.uploadReceipt) {
    children.push(
      el('p', { id: 'upload-receipt', class: 'notice' }, [
        `Uploaded (status ${state.uploadReceipt.status}, ` +
          `${state.uploadReceipt.attempts} attempt${state.uploadReceipt.attempts === 1 ? '' : 's'}` +
          `${state.uploadReceipt.remote_id ? `, id ${state.uploadReceipt.remote_id}` : ''})`,
      ]),
    );
  }
  if (state.uploadError) {
    children.push(el('p', { class: 'inline-error' }, [state.uploadError]));
  }
  return el('section', { class: 'view view-result' }, children);
}

// -- error ------------------------------------------------------------------------

function renderError(state: Extract<ViewState, { kind: 'error' }>): HTMLElement {
  const retry = el('button', { id: 'retry' }, [state.retryLabel]);
  retry.addEventListener('click', () => state.retry());
  return el('section', { class: 'view view-error' }, [
    el('h2', {}, ['Something went wrong']),
    el('p', { class: 'inline-error' }, [state.message]),
    retry,
  ]);
}

export function render(root: HTMLElement, state: ViewState, store: AppStore): void {
  root.replaceChildren();
  switch (state.kind) {
    case 'entry':
      root.append(renderEntry(state, store));
      break;
    case 'devicePick':
      root.append(renderDevicePick(state, store));
      break;
    case 'recording':
      root.append(renderRecording(state, store));
      break;
    case 'result':
      root.append(renderResult(state, store));
      break;
    case 'error':
      root.append(renderError(state));
      break;
  }
}

export { insufficientMessage };
