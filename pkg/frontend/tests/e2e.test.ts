/**
 * Scripted live session against a real gateway: fetch -> obstacle click ->
 * tug -> estop -> reset, then replay the server's recorded command log
 * headless and require the same terminal state and identical traces.
 *
 * Spawns `python -m fetchbot serve`; set FETCHBOT_E2E=0 to skip.
 */

import { spawn } from "node:child_process";
import { mkdtempSync, readFileSync } from "node:fs";
import { createServer } from "node:net";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import WebSocket from "ws";
import { describe, expect, it } from "vitest";

import { GatewayClient } from "../src/client.js";
import { Hello, Snapshot } from "../src/protocol.js";

const RUN_E2E = process.env.FETCHBOT_E2E !== "0";
const PYTHON = process.env.FETCHBOT_PYTHON ?? "python3";
const SCENARIO = fileURLToPath(new URL("../e2e/scenario.yaml", import.meta.url));

function freePort(): Promise<number> {
  return new Promise((resolve, reject) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
    srv.on("error", reject);
  });
}

function runCli(args: string[]): Promise<{ code: number; stdout: string }> {
  return new Promise((resolve, reject) => {
    const proc = spawn(PYTHON, ["-m", "fetchbot", ...args], { stdio: ["ignore", "pipe", "pipe"] });
    let stdout = "";
    let stderr = "";
    proc.stdout.on("data", (d) => (stdout += d));
    proc.stderr.on("data", (d) => (stderr += d));
    proc.on("error", reject);
    proc.on("exit", (code) => resolve({ code: code ?? -1, stdout: stdout || stderr }));
  });
}

describe.skipIf(!RUN_E2E)("scripted dashboard session", () => {
  it(
    "drives the served scenario to the same terminal state as the CLI replay",
    { timeout: 180_000 },
    async () => {
      const dir = mkdtempSync(join(tmpdir(), "fetchbot-e2e-"));
      const port = await freePort();
      const servedTrace = join(dir, "served.jsonl");
      const commandLog = join(dir, "commands.json");

      const server = spawn(
        PYTHON,
        ["-m", "fetchbot", "serve", SCENARIO, "--port", String(port), "--rate", "0",
         "--trace", servedTrace, "--command-log", commandLog],
        { stdio: ["ignore", "pipe", "pipe"] }
      );
      let serverErr = "";
      server.stderr.on("data", (d) => (serverErr += d));
      const serverExit = new Promise<number>((resolve) =>
        server.on("exit", (code) => resolve(code ?? -1))
      );

      let hello: Hello | null = null;
      let endState: string | null = null;
      let obstacleSent = false;
      let tugSent = false;
      let estopSent = false;
      let resetSent = false;
      let sawEstopState = false;
      let done: (v?: unknown) => void;
      const finished = new Promise((resolve) => (done = resolve));

      const client = new GatewayClient(
        `ws://127.0.0.1:${port}`,
        {
          onHello: (h) => (hello = h),
          onSnapshot: (snap: Snapshot) => {
            try {
              if (snap.state === "Listening" && snap.tick > 5 && !obstacleSent && !tugSent) {
                client.send({ type: "fetch", object: "water" });
              } else if (
                snap.state === "NavigatingToWarehouse" &&
                snap.pose.x > 2.4 &&
                !obstacleSent
              ) {
                // the operator's map click lands an obstacle on the route ahead
                client.send({ type: "add_obstacle", x: snap.pose.x + 1.3, y: 1.62, r: 0.2 });
                obstacleSent = true;
              } else if (snap.state === "Handover" && !tugSent) {
                client.send({ type: "tug", f_z: 6 });
                tugSent = true;
              } else if (tugSent && !estopSent && snap.state === "Idle") {
                client.send({ type: "estop" });
                estopSent = true;
              } else if (estopSent && snap.state === "EStopped" && !resetSent) {
                sawEstopState = true;
                client.send({ type: "reset" });
                resetSent = true;
              }
            } catch {
              /* socket may close as the run ends */
            }
          },
          onEnd: (msg) => {
            endState = msg.final_state;
            done();
          },
        },
        (url) => new WebSocket(url) as unknown as globalThis.WebSocket
      );
      client.connect();

      await finished;
      client.close();
      const exitCode = await serverExit;
      expect(exitCode, serverErr).toBe(0);
      expect(hello).not.toBeNull();
      expect(obstacleSent && tugSent).toBe(true);

      const served = readFileSync(servedTrace, "utf-8").trimEnd().split("\n");
      const lastRecord = JSON.parse(served[served.length - 1]);
      const recordedCommands = JSON.parse(readFileSync(commandLog, "utf-8"));
      const types = recordedCommands.map(([, c]: [number, { type: string }]) => c.type);
      expect(types).toContain("fetch");
      expect(types).toContain("add_obstacle");
      expect(types).toContain("tug");

      // headless replay of the recorded command log
      const replayTrace = join(dir, "replay.jsonl");
      const replay = await runCli([
        "run", SCENARIO, "--inject-log", commandLog,
        "--ticks", String(lastRecord.tick), "--trace", replayTrace,
      ]);
      const summary = JSON.parse(replay.stdout.trim().split("\n").pop()!);
      expect(summary.final_state).toBe(endState);

      const replayLines = readFileSync(replayTrace, "utf-8").trimEnd().split("\n");
      expect(replayLines.length).toBe(served.length);
      expect(replayLines).toEqual(served);

      // the estop leg of the session ran when the run had not ended first
      if (estopSent) expect(sawEstopState || endState === "Idle").toBe(true);
    }
  );
});
