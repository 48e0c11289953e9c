import { ChildProcess, execFileSync, spawn } from "child_process";

export const PYTHON = process.env.OTSEG_PYTHON ?? "python3";

/** Run the native CLI, throwing on nonzero exit. */
export function cli(args: string[]): string {
  return execFileSync(PYTHON, ["-m", "otseg.cli", ...args], {
    encoding: "utf-8",
    stdio: ["ignore", "pipe", "pipe"],
  });
}

export interface Service {
  baseUrl: string;
  stop: () => void;
}

async function tryStart(port: number): Promise<Service | null> {
  const proc: ChildProcess = spawn(PYTHON, ["-m", "otseg.service", "--port", String(port)], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  let stderr = "";
  proc.stderr?.on("data", (chunk) => (stderr += chunk));
  const baseUrl = `http://127.0.0.1:${port}`;
  const deadline = Date.now() + 60_000;
  while (Date.now() < deadline) {
    if (proc.exitCode !== null) {
      return null; // port taken or startup failure; caller retries elsewhere
    }
    try {
      const resp = await fetch(`${baseUrl}/health`);
      if (resp.ok) {
        return { baseUrl, stop: () => proc.kill("SIGTERM") };
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 250));
  }
  proc.kill("SIGTERM");
  throw new Error(`service did not come up on ${baseUrl}: ${stderr}`);
}

/** Spawn the HTTP service on a free port and wait until it answers. */
export async function startService(): Promise<Service> {
  for (let attempt = 0; attempt < 3; attempt++) {
    const port = 8100 + Math.floor(Math.random() * 20_000);
    const service = await tryStart(port);
    if (service) return service;
  }
  throw new Error("could not find a free port for the service");
}
