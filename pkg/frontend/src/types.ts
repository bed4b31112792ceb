// Payload shapes of the collection service (see api/openapi.json).

export type Role = 'user' | 'system';

export interface NodeView {
    doc_id: string;
    node_id: string;
    type: string;
    text: string;
    is_super_leaf: boolean;
}

export function nodeId(node: NodeView): string {
    return `${node.doc_id}#${node.node_id}`;
}

export interface PromptView {
    pattern: string;
    guideline_text: string;
}

export interface FlowGoal {
    node: { doc_id: string; node_id: string };
    prompt: PromptView;
    pattern: string;
    transition_used: string;
}

export interface FlowView {
    flow_id: string;
    goals: FlowGoal[];
    truncated: boolean;
}

export interface GoalContext {
    goal: NodeView;
    prompt: PromptView;
    pattern: string;
    path_from_root: NodeView[];
    parent: NodeView | null;
    siblings: NodeView[];
    children: NodeView[];
    subtree: NodeView[];
}

export interface TurnView {
    index: number;
    role: Role;
    utterance: string;
    act: string;
    grounding: string[];
    goal_index: number;
    revises: number | null;
}

export interface DialogView {
    dialog_id: string;
    flow_id: string;
    writer_id: string;
    goal_status: string[];
    turns: TurnView[];
    closed: boolean;
    active_goal: number | null;
}

export interface Assignment {
    flow: FlowView;
    dialog_id: string;
    dialog: DialogView;
}

export interface Taxonomy {
    user_acts: string[];
    system_acts: string[];
    question_acts: string[];
}

export interface ApiError {
    code: string;
    message: string;
}
