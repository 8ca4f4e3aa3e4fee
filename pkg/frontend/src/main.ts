// Bootstrap: wire the store to the DOM, keep the session id in the URL so a
// refresh mid-session recovers the recording view and resubscribes.

import { ApiClient } from './api.js';
import { AppStore } from './store.js';
import { render } from './views.js';

const params = new URLSearchParams(window.location.search);
const apiBase = params.get('api') ?? 'http://127.0.0.1:8080';
const minDuration = params.get('min') ? Number(params.get('min')) : 300;

const store = new AppStore(new ApiClient(apiBase), minDuration);
const root = document.getElementById('app');
if (!root) {
  throw new Error('missing #app container');
}

store.subscribe((state) => {
  render(root, state, store);
  const url = new URL(window.location.href);
  if ('sessionId' in state) {
    url.searchParams.set('session', state.sessionId);
  } else {
    url.searchParams.delete('session');
  }
  window.history.replaceState(null, '', url);
});

const existing = params.get('session');
if (existing) {
  void store.recover(existing);
} else {
  render(root, store.getState(), store);
}
