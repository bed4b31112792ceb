import { ApiClient, ApiRequestError } from './api.js';
import {
    UiState,
    actsForRole,
    canSubmit,
    currentRole,
    freshDraft,
    initialState,
    newRequestId,
    toggleGrounding,
    visibleNodeIds,
} from './state.js';
import type { NodeView, Role } from './types.js';
import { nodeId } from './types.js';

function el<K extends keyof HTMLElementTagNameMap>(
    tag: K, className?: string, text?: string): HTMLElementTagNameMap[K] {
    const node = document.createElement(tag);
    if (className) node.className = className;
    if (text !== undefined) node.textContent = text;
    return node;
}

/** One writer's annotation session: claims a flow, walks its goals in
 *  order, alternating user/system turns, and re-renders from state after
 *  every change. All state worth keeping lives on the server; reloading
 *  the page rebuilds the exact same view from the API. */
export class App {
    state: UiState;
    private inflight = 0;

    constructor(private api: ApiClient, private root: HTMLElement) {
        this.state = initialState({ user_acts: [], system_acts: [], question_acts: [] });
    }

    async boot(): Promise<void> {
        this.state.taxonomy = await this.api.getTaxonomy();
        const assignment = await this.api.claimNextFlow();
        if (assignment === null) {
            this.state.assignment = null;
            this.render();
            return;
        }
        this.state.assignment = { flowId: assignment.flow.flow_id, dialogId: assignment.dialog_id };
        this.state.dialog = assignment.dialog;
        await this.loadContext();
        this.render();
    }

    private async loadContext(): Promise<void> {
        const { assignment, dialog } = this.state;
        if (!assignment || !dialog || dialog.active_goal === null) {
            this.state.context = null;
            return;
        }
        this.state.context = await this.api.getContext(assignment.flowId, dialog.active_goal);
    }

    /** Resolves once no handler-initiated work is pending (test hook). */
    async settled(): Promise<void> {
        while (this.inflight > 0) {
            await new Promise((resolve) => setTimeout(resolve, 5));
        }
    }

    private track<T>(work: Promise<T>): Promise<T> {
        this.inflight += 1;
        return work.finally(() => { this.inflight -= 1; });
    }

    role(): Role {
        return currentRole(this.state.dialog);
    }

    setUtterance(text: string): void {
        this.state.draft.utterance = text;
        this.renderComposerValidity();
    }

    setAct(act: string): void {
        this.state.draft.act = act || null;
        this.renderComposerValidity();
    }

    toggleGround(id: string): void {
        this.state.draft = toggleGrounding(this.state.draft, id, visibleNodeIds(this.state.context));
        this.render();
    }

    async submitTurn(): Promise<void> {
        if (!canSubmit(this.state)) return;
        const { assignment, dialog, draft } = this.state;
        if (!assignment || !dialog || dialog.active_goal === null) return;
        this.state.submitting = true;
        this.state.error = null;
        this.render();
        try {
            // the request id is fixed per draft, so a network retry or a
            // double-fired handler stores exactly one turn
            const updated = await this.track(this.api.submitTurn(assignment.dialogId, {
                role: this.role(),
                utterance: draft.utterance.trim(),
                act: draft.act as string,
                grounding: draft.grounding,
                goal_index: dialog.active_goal,
                request_id: draft.requestId,
            }));
            this.state.dialog = updated;
            this.state.draft = freshDraft();
        } catch (error) {
            this.state.error = describe(error);
        } finally {
            this.state.submitting = false;
            this.render();
        }
    }

    async completeGoal(): Promise<void> {
        await this.finishGoal('completed');
    }

    async skipGoal(): Promise<void> {
        await this.finishGoal('skipped');
    }

    private async finishGoal(status: 'completed' | 'skipped'): Promise<void> {
        const { assignment, dialog } = this.state;
        if (!assignment || !dialog || dialog.active_goal === null) return;
        this.state.error = null;
        try {
            this.state.dialog = await this.track(this.api.setGoalStatus(
                assignment.dialogId, dialog.active_goal, status, newRequestId()));
            this.state.draft = freshDraft();
            await this.track(this.loadContext());
        } catch (error) {
            this.state.error = describe(error);
        }
        this.render();
    }

    // -- rendering ---------------------------------------------------------

    render(): void {
        this.root.textContent = '';
        if (!this.state.assignment) {
            this.root.append(el('p', 'empty-state', 'No flows available. Check back later.'));
            return;
        }
        this.root.append(this.renderHeader());
        const main = el('div', 'layout');
        main.append(this.renderGoalList(), this.renderCenter(), this.renderComposer());
        this.root.append(main);
    }

    private renderHeader(): HTMLElement {
        const header = el('header');
        header.append(el('h1', undefined, 'docdialog annotator'));
        header.append(el('span', 'flow-id', `flow ${this.state.assignment!.flowId}`));
        return header;
    }

    private renderGoalList(): HTMLElement {
        const aside = el('aside', 'goals panel');
        aside.append(el('h2', undefined, 'Dialog flow'));
        const dialog = this.state.dialog!;
        const list = el('ol', 'goal-list');
        dialog.goal_status.forEach((status, index) => {
            const item = el('li', `goal goal-${status}`);
            item.dataset.goalIndex = String(index);
            item.append(el('span', 'goal-status', status));
            item.append(el('span', 'goal-name', this.goalLabel(index)));
            if (index === dialog.active_goal) item.classList.add('goal-highlight');
            list.append(item);
        });
        aside.append(list);
        if (dialog.closed) aside.append(el('p', 'dialog-done', 'Dialog complete.'));
        return aside;
    }

    private goalLabel(index: number): string {
        const context = this.state.context;
        if (context && this.state.dialog!.active_goal === index) {
            return `${context.goal.node_id} (${context.pattern})`;
        }
        return `goal ${index}`;
    }

    private renderCenter(): HTMLElement {
        const center = el('section', 'center');
        const context = this.state.context;
        if (!context) {
            center.append(el('p', 'empty-state',
                this.state.dialog!.closed ? 'All goals are done.' : 'Loading context...'));
            center.append(this.renderTranscript());
            return center;
        }

        const prompt = el('div', 'prompt panel');
        prompt.append(el('h2', undefined, 'Prompt'));
        prompt.append(el('span', 'pattern-tag', context.pattern));
        prompt.append(el('p', 'guideline', context.prompt.guideline_text));
        center.append(prompt);

        const ctxPanel = el('div', 'context panel');
        ctxPanel.append(el('h2', undefined, 'Goal context'));
        const path = el('div', 'path');
        context.path_from_root.forEach((node, i) => {
            if (i > 0) path.append(el('span', 'path-sep', ' › '));
            const crumb = this.nodeChip(node, 'path-node');
            if (nodeId(node) === nodeId(context.goal)) crumb.classList.add('goal-node');
            path.append(crumb);
        });
        ctxPanel.append(path);
        ctxPanel.append(this.nodeGroup('Goal', [context.goal], true));
        if (context.parent) ctxPanel.append(this.nodeGroup('Parent', [context.parent]));
        if (context.siblings.length) ctxPanel.append(this.nodeGroup('Siblings', context.siblings));
        if (context.children.length) ctxPanel.append(this.nodeGroup('Children', context.children));
        center.append(ctxPanel);

        center.append(this.renderTranscript());
        return center;
    }

    private nodeGroup(title: string, nodes: NodeView[], emphasize = false): HTMLElement {
        const group = el('details', 'node-group');
        if (emphasize || title === 'Siblings') (group as HTMLDetailsElement).open = true;
        group.append(el('summary', undefined, title));
        for (const node of nodes) group.append(this.nodeChip(node, 'tree-node'));
        return group;
    }

    /** Every selectable chip carries the server-provided node id; clicking
     *  toggles it in the draft grounding. */
    private nodeChip(node: NodeView, className: string): HTMLElement {
        const id = nodeId(node);
        const chip = el('span', className);
        chip.dataset.nodeId = id;
        chip.append(el('code', 'node-type', node.type));
        chip.append(document.createTextNode(' ' + (node.text || node.node_id)));
        if (this.state.draft.grounding.includes(id)) chip.classList.add('selected');
        chip.addEventListener('click', () => this.toggleGround(id));
        return chip;
    }

    private renderTranscript(): HTMLElement {
        const transcript = el('div', 'transcript panel');
        transcript.append(el('h2', undefined, 'Dialog history'));
        const dialog = this.state.dialog!;
        if (!dialog.turns.length) transcript.append(el('p', 'empty-state', 'No turns yet.'));
        for (const turn of dialog.turns) {
            const row = el('div', `turn turn-${turn.role}`);
            row.append(el('span', 'turn-role', turn.role));
            row.append(el('span', 'turn-act', turn.act));
            row.append(el('p', 'turn-text', turn.utterance));
            if (turn.grounding.length) {
                row.append(el('span', 'turn-grounding', `grounded: ${turn.grounding.join(', ')}`));
            }
            transcript.append(row);
        }
        return transcript;
    }

    private renderComposer(): HTMLElement {
        const composer = el('section', 'composer panel');
        const dialog = this.state.dialog!;
        if (dialog.closed) {
            composer.append(el('p', 'dialog-done', 'Dialog complete. Nothing to write.'));
            return composer;
        }
        const role = this.role();
        composer.append(el('h2', undefined, `Write the next ${role} turn`));

        if (role === 'user') {
            composer.append(el('p', 'banner',
                'Pose an under-specified question; let the system narrow it down.'));
        } else if (this.state.context) {
            const suggestions = el('details', 'suggestions');
            (suggestions as HTMLDetailsElement).open = true;
            suggestions.append(el('summary', undefined, 'Suggestions from the goal subtree'));
            for (const node of this.state.context.subtree) {
                suggestions.append(this.nodeChip(node, 'tree-node suggestion'));
            }
            composer.append(suggestions);
        }

        const textarea = el('textarea', 'utterance');
        textarea.id = 'utterance';
        textarea.placeholder = `${role} says...`;
        textarea.value = this.state.draft.utterance;
        textarea.addEventListener('input', () => this.setUtterance(textarea.value));
        composer.append(textarea);

        const select = el('select', 'act');
        select.id = 'act';
        select.append(el('option', undefined, ''));
        for (const act of actsForRole(this.state.taxonomy, role)) {
            const option = el('option', undefined, act);
            option.value = act;
            if (this.state.draft.act === act) option.selected = true;
            select.append(option);
        }
        select.addEventListener('change', () => this.setAct(select.value));
        composer.append(labelled('Dialog act', select));

        const chips = el('div', 'selected-chips');
        chips.append(el('span', 'chips-label', 'Grounding: '));
        if (!this.state.draft.grounding.length) chips.append(el('span', 'empty-state', 'none'));
        for (const id of this.state.draft.grounding) {
            const chip = el('span', 'chip', id);
            chip.addEventListener('click', () => this.toggleGround(id));
            chips.append(chip);
        }
        composer.append(chips);

        const submit = el('button', 'submit', 'Submit turn');
        submit.id = 'submit-turn';
        submit.disabled = !canSubmit(this.state);
        submit.addEventListener('click', () => { void this.submitTurn(); });
        composer.append(submit);

        const complete = el('button', 'complete', 'Complete goal');
        complete.id = 'complete-goal';
        complete.addEventListener('click', () => { void this.completeGoal(); });
        const skip = el('button', 'skip', 'Skip goal');
        skip.id = 'skip-goal';
        skip.addEventListener('click', () => { void this.skipGoal(); });
        composer.append(complete, skip);

        const error = el('p', 'error');
        error.id = 'error';
        if (this.state.error) error.textContent = this.state.error;
        composer.append(error);
        return composer;
    }

    private renderComposerValidity(): void {
        const submit = this.root.querySelector<HTMLButtonElement>('#submit-turn');
        if (submit) submit.disabled = !canSubmit(this.state);
    }
}

function labelled(text: string, control: HTMLElement): HTMLElement {
    const wrap = el('label', 'field');
    wrap.append(el('span', 'field-label', text), control);
    return wrap;
}

function describe(error: unknown): string {
    if (error instanceof ApiRequestError) return `${error.code}: ${error.message}`;
    return String(error);
}
