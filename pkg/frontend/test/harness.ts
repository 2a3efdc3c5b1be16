import { execFileSync, spawn } from "node:child_process";

export interface ServerHandle {
  url: string;
  stop(): void;
}

/** Spawn `quadkit serve` on the given port and wait for /health. */
export async function startServer(port: number): Promise<ServerHandle> {
  const proc = spawn("quadkit", ["serve", "--port", String(port)], {
    stdio: "ignore",
  });
  const url = `http://127.0.0.1:${port}`;
  for (let i = 0; i < 200; i++) {
    if (proc.exitCode !== null) {
      break;
    }
    try {
      const resp = await fetch(`${url}/health`);
      if (resp.ok) {
        return { url, stop: () => void proc.kill() };
      }
    } catch {
      // not listening yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  proc.kill();
  throw new Error(`quadkit serve did not come up on port ${port}`);
}

/** A free-ish port varied by pid so parallel runs do not collide. */
export function pickPort(): number {
  return 8700 + (process.pid % 250);
}

/** Run the CLI and return its stdout verbatim. */
export function cli(args: string[]): string {
  return execFileSync("quadkit", args, { encoding: "utf-8" });
}
