import { mountApp } from "./app.js";

declare global {
  interface Window {
    SEMANTIC_UNITS_API?: string;
  }
}

const root = document.getElementById("app");
if (root) {
  mountApp(root, { apiBase: window.SEMANTIC_UNITS_API ?? "" });
}
