import { initApp } from "./app";

// same-origin by default: the built files can be served next to the API
const base = new URLSearchParams(location.search).get("api") ?? "";

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) throw new Error("missing #app container");
  initApp(root, base).catch(err => {
    root.textContent = `failed to reach the imputation service: ${err}`;
  });
});
