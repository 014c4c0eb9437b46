import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const here = dirname(fileURLToPath(import.meta.url));

// written by globalSetup once the real service is healthy
export function serverBase(): string {
  return JSON.parse(readFileSync(join(here, ".server.json"), "utf8")).base;
}

export function fixturePath(name: string): string {
  return join(here, "..", "fixtures", name);
}

export async function waitFor(cond: () => boolean, ms = 15_000): Promise<void> {
  const deadline = Date.now() + ms;
  while (!cond()) {
    if (Date.now() > deadline) throw new Error("timed out waiting for condition");
    await new Promise(resolve => setTimeout(resolve, 25));
  }
}
