import { TutorClient } from "./api.js";
import { mountApp } from "./app.js";

declare global {
  interface Window {
    /** Override the API origin, e.g. when the UI is served from a CDN. */
    EXTUTOR_BASE_URL?: string;
  }
}

const meta = document.querySelector('meta[name="extutor-base"]');
const base = window.EXTUTOR_BASE_URL ?? meta?.getAttribute("content") ?? "";

const root = document.getElementById("app");
if (root === null) {
  throw new Error('missing <div id="app"> mount point');
}
mountApp(root, new TutorClient(base));
