import type { QueueState } from './state.js';
import { REASON_CHIPS } from './state.js';
import type { PropertyCard, Tab } from './types.js';

export interface ViewActions {
  selectTab(tab: Tab): void;
  setPage(page: number): void;
  focusCard(index: number): void;
  keep(): void;
  openReject(): void;
  cancelReject(): void;
  confirmReject(reason: string): void;
  retry(): void;
}

const TABS: Tab[] = ['pending', 'kept', 'rejected'];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className = '',
  text = '',
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

export function render(root: HTMLElement, state: QueueState, actions: ViewActions): void {
  root.replaceChildren(
    renderHeader(state, actions),
    ...(state.banner ? [renderBanner(state.banner, actions)] : []),
    renderQueue(state, actions),
    renderFooter(state, actions),
  );
  if (state.rejecting) {
    const input = root.querySelector<HTMLInputElement>('#reject-reason');
    input?.focus();
  }
}

function renderHeader(state: QueueState, actions: ViewActions): HTMLElement {
  const header = el('header', 'app-header');
  header.append(el('h1', '', 'Property triage'));

  const tabs = el('nav', 'tabs');
  for (const tab of TABS) {
    const count = state.stats ? state.stats[tab] : null;
    const label = count === null ? tab : `${tab} (${count})`;
    const button = el('button', tab === state.tab ? 'tab active' : 'tab', label);
    button.addEventListener('click', () => actions.selectTab(tab));
    tabs.append(button);
  }
  header.append(tabs);

  if (state.stats && state.stats.total > 0) {
    const done = state.stats.kept + state.stats.rejected;
    const bar = el('div', 'progress');
    const fill = el('div', 'progress-fill');
    fill.style.width = `${Math.round((100 * done) / state.stats.total)}%`;
    bar.append(fill);
    header.append(bar, el('div', 'progress-label',
      `${done} of ${state.stats.total} properties triaged`));
  }
  header.append(el('div', 'hint',
    'keys: k keep · r reject · j/↓ next · ↑ prev · 1/2/3 tabs · esc cancel'));
  return header;
}

function renderBanner(message: string, actions: ViewActions): HTMLElement {
  const banner = el('div', 'banner', message + ' ');
  const retry = el('button', 'retry', 'Retry');
  retry.addEventListener('click', () => actions.retry());
  banner.append(retry);
  return banner;
}

function renderQueue(state: QueueState, actions: ViewActions): HTMLElement {
  const queue = el('main', 'queue');
  if (state.loading && !state.items.length) {
    queue.append(el('div', 'empty', 'loading…'));
    return queue;
  }
  if (!state.items.length) {
    if (state.tab === 'pending' && state.stats && state.stats.pending === 0) {
      queue.append(el('div', 'empty done',
        `All ${state.stats.total} properties triaged: ` +
        `${state.stats.kept} kept, ${state.stats.rejected} rejected.`));
    } else {
      queue.append(el('div', 'empty', `no ${state.tab} properties`));
    }
    return queue;
  }
  state.items.forEach((card, index) => {
    queue.append(renderCard(card, index, state, actions));
  });
  return queue;
}

function renderCard(
  card: PropertyCard,
  index: number,
  state: QueueState,
  actions: ViewActions,
): HTMLElement {
  const focused = index === state.focus;
  const node = el('article', focused ? 'card focused' : 'card');
  node.addEventListener('click', () => actions.focusCard(index));

  const title = el('div', 'card-title');
  title.append(
    el('span', 'label', card.label),
    el('span', 'pid', card.property_id),
    el('span', 'count', `${card.triplet_count} triplets`),
  );
  node.append(title);

  const suggestion = el('div', `suggestion ${card.suggestion.verdict}`);
  suggestion.append(el('span', 'verdict', `suggests ${card.suggestion.verdict}`));
  if (card.suggestion.fired_rules.length) {
    suggestion.append(el('span', 'rules', card.suggestion.fired_rules.join(', ')));
  }
  node.append(suggestion);

  if (card.effective_verdict) {
    node.append(el('div', `decided ${card.effective_verdict}`,
      `decision: ${card.effective_verdict}`));
  }

  const samples = el('table', 'samples');
  for (const fact of card.samples) {
    const row = el('tr');
    row.append(el('td', '', fact.subject), el('td', '', fact.property),
               el('td', '', fact.object));
    samples.append(row);
  }
  node.append(samples);

  if (card.preview_questions.length) {
    const previews = el('ul', 'previews');
    for (const question of card.preview_questions) {
      previews.append(el('li', '', question));
    }
    node.append(previews);
  }

  if (focused) {
    node.append(renderCardActions(card, state, actions));
  }
  return node;
}

function renderCardActions(
  card: PropertyCard,
  state: QueueState,
  actions: ViewActions,
): HTMLElement {
  const wrap = el('div', 'actions');
  const busy = state.inFlight === card.property_id;

  if (state.rejecting) {
    const editor = el('div', 'reject-editor');
    const input = el('input', 'reason-input');
    input.id = 'reject-reason';
    input.placeholder = 'why is this property unusable?';
    input.addEventListener('keydown', (event) => {
      if (event.key === 'Enter') actions.confirmReject(input.value);
    });
    const chips = el('div', 'chips');
    for (const chip of REASON_CHIPS) {
      const button = el('button', 'chip', chip);
      button.addEventListener('click', () => {
        input.value = chip;
        input.focus();
      });
      chips.append(button);
    }
    const confirm = el('button', 'confirm-reject', busy ? 'saving…' : 'Reject');
    confirm.disabled = busy;
    confirm.addEventListener('click', () => actions.confirmReject(input.value));
    const cancel = el('button', 'cancel', 'Cancel');
    cancel.addEventListener('click', () => actions.cancelReject());
    editor.append(chips, input, confirm, cancel);
    wrap.append(editor);
  } else {
    const keep = el('button', 'keep', busy ? 'saving…' : 'Keep (k)');
    keep.disabled = busy;
    keep.addEventListener('click', () => actions.keep());
    const reject = el('button', 'reject', 'Reject (r)');
    reject.disabled = busy;
    reject.addEventListener('click', () => actions.openReject());
    wrap.append(keep, reject);
  }

  if (state.inlineError) {
    wrap.append(el('div', 'inline-error', state.inlineError));
  }
  return wrap;
}

function renderFooter(state: QueueState, actions: ViewActions): HTMLElement {
  const footer = el('footer', 'pager');
  const prev = el('button', '', '← prev');
  prev.disabled = state.page <= 1;
  prev.addEventListener('click', () => actions.setPage(state.page - 1));
  const next = el('button', '', 'next →');
  next.disabled = state.page >= state.pageCount;
  next.addEventListener('click', () => actions.setPage(state.page + 1));
  footer.append(prev, el('span', '', `page ${state.page} of ${state.pageCount}`), next);
  return footer;
}
