// Starts the real imputation service once for the whole test run and
// records its base URL in test/.server.json.
import { execFileSync, spawn } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

const PORT = 8742;

export default async function setup(): Promise<() => void> {
  const here = dirname(fileURLToPath(import.meta.url));
  const dir = mkdtempSync(join(tmpdir(), "webui-"));
  execFileSync("python3", [join(here, "make_fixture.py"), dir],
               { stdio: "inherit" });

  const proc = spawn("oasis", [
    "serve", "--ckpt", join(dir, "model.ckpt"),
    "--fixture", join(dir, "tides"), "--port", String(PORT)
  ], { stdio: "ignore" });

  const base = `http://127.0.0.1:${PORT}`;
  const deadline = Date.now() + 60_000;
  for (;;) {
    try {
      const res = await fetch(`${base}/v1/health`);
      if (res.ok) break;
    } catch {
      // not up yet
    }
    if (Date.now() > deadline) {
      proc.kill();
      throw new Error("imputation service did not come up on " + base);
    }
    await new Promise(resolve => setTimeout(resolve, 250));
  }
  writeFileSync(join(here, ".server.json"), JSON.stringify({ base }));

  return () => {
    proc.kill();
    rmSync(dir, { recursive: true, force: true });
  };
}
