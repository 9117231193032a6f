import { TriageApi } from './api.js';
import { attachKeyboard } from './keyboard.js';
import { QueueStore } from './state.js';
import { render, ViewActions } from './view.js';

const root = document.getElementById('app');
if (!root) throw new Error('missing #app mount point');

const api = new TriageApi('');
const store = new QueueStore(api);

const actions: ViewActions = {
  selectTab: (tab) => void store.setTab(tab),
  setPage: (page) => void store.setPage(page),
  focusCard: (index) => store.moveFocus(index - store.snapshot().focus),
  keep: () => void store.submit('keep'),
  openReject: () => store.openReject(),
  cancelReject: () => store.closeReject(),
  confirmReject: (reason) => void store.submit('reject', reason),
  retry: () => void store.refresh(),
};

store.subscribe((state) => render(root, state, actions));

attachKeyboard((action) => {
  switch (action.kind) {
    case 'keep':
      void store.submit('keep');
      break;
    case 'reject':
      store.openReject();
      break;
    case 'next':
      store.moveFocus(1);
      break;
    case 'prev':
      store.moveFocus(-1);
      break;
    case 'tab':
      void store.setTab(action.tab);
      break;
    case 'close':
      store.closeReject();
      break;
  }
});

// the queue is server state; re-sync whenever the curator comes back
window.addEventListener('focus', () => void store.refresh());

void store.refresh();
