import type { Assignment, DialogView, GoalContext, Role, Taxonomy } from './types.js';

export class ApiRequestError extends Error {
    constructor(public code: string, message: string, public status: number) {
        super(message);
    }
}

export interface TurnSubmission {
    role: Role;
    utterance: string;
    act: string;
    grounding: string[];
    goal_index: number;
    request_id: string;
}

/** Thin fetch wrapper; every mutating call carries the bearer token and a
 *  client request id so retries are duplicate-safe. */
export class ApiClient {
    constructor(private baseUrl: string, private token: string) {}

    private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
        const headers: Record<string, string> = { 'Content-Type': 'application/json' };
        if (method !== 'GET') headers['Authorization'] = `Bearer ${this.token}`;
        const response = await fetch(this.baseUrl + path, {
            method,
            headers,
            body: body === undefined ? undefined : JSON.stringify(body),
        });
        const text = await response.text();
        const payload = text ? JSON.parse(text) : {};
        if (!response.ok) {
            throw new ApiRequestError(
                payload.code ?? `HTTP${response.status}`,
                payload.message ?? response.statusText,
                response.status,
            );
        }
        return payload as T;
    }

    async claimNextFlow(): Promise<Assignment | null> {
        const body = await this.request<{ assignment: Assignment | null }>('POST', '/flows/next');
        return body.assignment;
    }

    getTaxonomy(): Promise<Taxonomy> {
        return this.request('GET', '/taxonomy');
    }

    getContext(flowId: string, goalIndex: number): Promise<GoalContext> {
        return this.request('GET', `/goals/${flowId}/${goalIndex}/context`);
    }

    getDialog(dialogId: string): Promise<DialogView> {
        return this.request('GET', `/dialogs/${dialogId}`);
    }

    async submitTurn(dialogId: string, turn: TurnSubmission): Promise<DialogView> {
        const body = await this.request<{ dialog: DialogView }>(
            'POST', `/dialogs/${dialogId}/turns`, turn);
        return body.dialog;
    }

    async setGoalStatus(dialogId: string, goalIndex: number,
                        status: 'completed' | 'skipped', requestId: string): Promise<DialogView> {
        const body = await this.request<{ dialog: DialogView }>(
            'POST', `/dialogs/${dialogId}/goals/${goalIndex}/status`,
            { status, request_id: requestId });
        return body.dialog;
    }
}
