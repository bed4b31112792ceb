import type { DialogView, GoalContext, Role, Taxonomy } from './types.js';
import { nodeId } from './types.js';

export interface Draft {
    utterance: string;
    act: string | null;
    grounding: string[];
    requestId: string;
}

export interface UiState {
    assignment: { flowId: string; dialogId: string } | null;
    dialog: DialogView | null;
    context: GoalContext | null;
    taxonomy: Taxonomy;
    draft: Draft;
    submitting: boolean;
    error: string | null;
}

let requestCounter = 0;

export function newRequestId(): string {
    if (typeof crypto !== 'undefined' && 'randomUUID' in crypto) {
        return crypto.randomUUID();
    }
    requestCounter += 1;
    return `req-${Date.now()}-${requestCounter}`;
}

export function freshDraft(): Draft {
    return { utterance: '', act: null, grounding: [], requestId: newRequestId() };
}

export function initialState(taxonomy: Taxonomy): UiState {
    return {
        assignment: null,
        dialog: null,
        context: null,
        taxonomy,
        draft: freshDraft(),
        submitting: false,
        error: null,
    };
}

/** The composer role is derived from transcript parity and is never
 *  user-selectable: user first, then strict alternation. Revisions do not
 *  advance the parity. */
export function currentRole(dialog: DialogView | null): Role {
    if (!dialog) return 'user';
    const position = dialog.turns.filter((t) => t.revises === null).length;
    return position % 2 === 0 ? 'user' : 'system';
}

export function actsForRole(taxonomy: Taxonomy, role: Role): string[] {
    return role === 'user' ? taxonomy.user_acts : taxonomy.system_acts;
}

/** Submit stays disabled until an act is chosen and the utterance is
 *  non-empty, and only while the dialog has an active goal. */
export function canSubmit(state: UiState): boolean {
    return Boolean(
        state.dialog &&
        !state.dialog.closed &&
        state.dialog.active_goal !== null &&
        !state.submitting &&
        state.draft.act &&
        state.draft.utterance.trim().length > 0,
    );
}

/** Node ids the context panel shows; grounding may only reference these,
 *  so the UI can never fabricate a node reference. */
export function visibleNodeIds(context: GoalContext | null): Set<string> {
    const ids = new Set<string>();
    if (!context) return ids;
    for (const node of context.path_from_root) ids.add(nodeId(node));
    if (context.parent) ids.add(nodeId(context.parent));
    for (const node of context.siblings) ids.add(nodeId(node));
    for (const node of context.children) ids.add(nodeId(node));
    for (const node of context.subtree) ids.add(nodeId(node));
    return ids;
}

/** Click-to-toggle grounding selection, constrained to visible nodes. */
export function toggleGrounding(draft: Draft, id: string, visible: Set<string>): Draft {
    if (!visible.has(id)) return draft;
    const grounding = draft.grounding.includes(id)
        ? draft.grounding.filter((g) => g !== id)
        : [...draft.grounding, id];
    return { ...draft, grounding };
}
