export type KeyAction =
  | { kind: 'keep' }
  | { kind: 'reject' }
  | { kind: 'next' }
  | { kind: 'prev' }
  | { kind: 'tab'; tab: 'pending' | 'kept' | 'rejected' }
  | { kind: 'close' };

/** Pure key -> action mapping so the bindings are testable without a DOM. */
export function actionForKey(key: string): KeyAction | null {
  switch (key) {
    case 'k':
    case 'K':
      return { kind: 'keep' };
    case 'r':
    case 'R':
      return { kind: 'reject' };
    case 'j':
    case 'J':
    case 'ArrowDown':
      return { kind: 'next' };
    case 'ArrowUp':
      return { kind: 'prev' };
    case '1':
      return { kind: 'tab', tab: 'pending' };
    case '2':
      return { kind: 'tab', tab: 'kept' };
    case '3':
      return { kind: 'tab', tab: 'rejected' };
    case 'Escape':
      return { kind: 'close' };
    default:
      return null;
  }
}

export function isTypingTarget(target: unknown): boolean {
  if (typeof HTMLElement === 'undefined' || !(target instanceof HTMLElement)) {
    return false;
  }
  return (
    target instanceof HTMLInputElement ||
    target instanceof HTMLTextAreaElement ||
    target.isContentEditable
  );
}

export function attachKeyboard(handler: (action: KeyAction) => void): () => void {
  const onKeyDown = (event: KeyboardEvent) => {
    // never swallow keys the curator is typing into the reason editor,
    // except Escape which closes it
    if (isTypingTarget(event.target) && event.key !== 'Escape') return;
    const action = actionForKey(event.key);
    if (!action) return;
    event.preventDefault();
    handler(action);
  };
  window.addEventListener('keydown', onKeyDown);
  return () => window.removeEventListener('keydown', onKeyDown);
}
