// Browser entry point. The API base defaults to the page origin so the
// emulator can be served by `aiuflow serve --ui frontend/dist`; a
// `?api=http://host:port` query overrides it for separate-origin runs.

import { ApiClient } from "./api.js";
import { EmulatorApp } from "./app.js";

function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  if (override) return override.replace(/\/$/, "");
  return window.location.origin;
}

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app element");
  const app = new EmulatorApp(root, new ApiClient(apiBase()), {
    confirmRestart: () => window.confirm("Abandon the current session?"),
  });
  void app.init();
});
