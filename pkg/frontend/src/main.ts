import { ApiClient } from './api.js';
import { App } from './app.js';

// Base URL and token come from the query string (?base=...&token=...),
// falling back to same-origin and a stored token.
const params = new URLSearchParams(window.location.search);
const base = params.get('base') ?? '';
const token = params.get('token') ?? window.localStorage.getItem('docdialog-token') ?? '';
if (params.get('token')) window.localStorage.setItem('docdialog-token', token);

const root = document.getElementById('app');
if (!root) throw new Error('missing #app container');

const app = new App(new ApiClient(base, token), root);
void app.boot().catch((error) => {
    root.textContent = `Failed to start: ${error}`;
});
