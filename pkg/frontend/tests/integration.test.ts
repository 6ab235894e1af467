// Dashboard acceptance against a live fixture service (criterion 9):
// roster order, threshold monotonicity, exact what-if grades for memorized
// rows. The service is the real HTTP implementation over small artifacts.

import assert from "node:assert/strict";
import { spawn, type ChildProcess } from "node:child_process";
import { readFileSync } from "node:fs";
import { after, before, test } from "node:test";
import { fileURLToPath } from "node:url";
import * as path from "node:path";

import { ApiClient, ApiError, type RiskScore } from "../src/api.js";
import { DEFAULT_SORT, flaggedCount, rosterTableHTML, sortRoster } from "../src/roster.js";
import { validateThreshold } from "../src/threshold.js";
import { fieldsFromValues, collectPayload, formIsValid } from "../src/whatif.js";

const here = path.dirname(fileURLToPath(import.meta.url));
const fixtureScript = path.join(here, "..", "..", "tests", "fixture_service.py");

const TOKEN = "dashboard-test-token";

let proc: ChildProcess;
let api: ApiClient;
let probe: { features: Record<string, string | number>; expected_grade: number };

before(async () => {
  proc = spawn("python3", [fixtureScript], {
    env: { ...process.env, GRADELENS_TOKEN: TOKEN },
    stdio: ["ignore", "pipe", "inherit"],
  });
  const ready = await new Promise<string>((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("fixture service timed out")), 60_000);
    let buffer = "";
    proc.stdout!.on("data", (chunk: Buffer) => {
      buffer += chunk.toString();
      const match = buffer.match(/READY (\d+) (.+)/);
      if (match) {
        clearTimeout(timer);
        resolve(buffer);
      }
    });
    proc.on("exit", (code) => reject(new Error(`fixture exited early (${code})`)));
  });
  const match = ready.match(/READY (\d+) (.+)/)!;
  api = new ApiClient(`http://127.0.0.1:${match[1]}`, TOKEN);
  probe = JSON.parse(readFileSync(match[2].trim(), "utf-8"));
  // make sure the service answers before the tests start
  assert.equal((await api.health()).status, "ok");
});

after(() => {
  proc.kill();
});

test("roster renders sorted by descending p_fail", async () => {
  const doc = await api.roster();
  assert.ok(doc.roster.length > 0);
  const rendered = sortRoster(doc.roster, DEFAULT_SORT);
  const html = rosterTableHTML(rendered);
  const ids = [...html.matchAll(/data-sid="([^"]+)"/g)].map((m) => m[1]);
  const expected = [...doc.roster]
    .sort((a, b) => b.p_fail - a.p_fail || a.student_id.localeCompare(b.student_id))
    .map((r) => r.student_id);
  assert.deepEqual(ids, expected);
});

test("lowering the threshold 0.70 -> 0.50 grows the flagged set monotonically", async () => {
  await api.setThreshold(0.7);
  const before70 = await api.roster();
  const flagged70 = new Set(before70.roster.filter((r) => r.flagged).map((r) => r.student_id));

  await api.setThreshold(0.5);
  const at50 = await api.roster();
  const flagged50 = new Set(at50.roster.filter((r) => r.flagged).map((r) => r.student_id));

  for (const id of flagged70) assert.ok(flagged50.has(id), `lost ${id} when lowering`);
  assert.ok(flagged50.size >= flagged70.size);
  assert.equal(flaggedCount(at50.roster), flagged50.size);

  await api.setThreshold(0.7);
  const restored = await api.roster();
  const flaggedRestored = new Set(
    restored.roster.filter((r) => r.flagged).map((r) => r.student_id),
  );
  assert.deepEqual([...flaggedRestored].sort(), [...flagged70].sort());
});

test("client blocks an out-of-range threshold before any request", () => {
  // mirrors the slider handler: validation happens before the PUT
  assert.notEqual(validateThreshold(1.5), null);
  assert.notEqual(validateThreshold(0), null);
  assert.equal(validateThreshold(0.5), null);
});

test("server rejects out-of-range threshold with 409 and state is unchanged", async () => {
  const before = await api.threshold();
  await assert.rejects(
    () => api.setThreshold(1.5),
    (err: unknown) => err instanceof ApiError && err.status === 409,
  );
  const after409 = await api.threshold();
  assert.equal(after409.threshold, before.threshold);
});

test("what-if submission of a memorized training row shows that row's exact grade", async () => {
  const model = await api.model();
  const fields = fieldsFromValues(model.features, probe.features);
  assert.ok(formIsValid(fields), "probe row should pass client validation");
  const score: RiskScore = await api.predict(collectPayload(fields));
  assert.ok(Math.abs(score.predicted_grade - probe.expected_grade) <= 1e-9);
});

test("editing a field and resubmitting changes the answer (exploration loop)", async () => {
  const model = await api.model();
  const base = await api.predict(probe.features);
  const edited: Record<string, string | number> = { ...probe.features };
  const numeric = model.features.find((f) => f.kind === "numeric")!;
  edited[numeric.name] = Number(probe.features[numeric.name]) === 0 ? 1 : 0;
  const changed = await api.predict(edited);
  assert.ok(
    base.predicted_grade !== changed.predicted_grade || base.p_fail !== changed.p_fail,
  );
});

test("unknown feature injected into the body yields a 400 with field errors", async () => {
  const body = { ...probe.features, hacked_field: 42 };
  await assert.rejects(
    () => api.predict(body),
    (err: unknown) =>
      err instanceof ApiError &&
      err.status === 400 &&
      err.fields.some((f) => f.field === "hacked_field"),
  );
});

test("out-of-range numeric value yields a 400 attached to the offending field", async () => {
  const body = { ...probe.features, entry_score: 999 };
  await assert.rejects(
    () => api.predict(body),
    (err: unknown) =>
      err instanceof ApiError &&
      err.status === 400 &&
      err.fields.some((f) => f.field === "entry_score"),
  );
});

test("requests without the bearer token are rejected with 401", async () => {
  const anonymous = new ApiClient(api.origin, null);
  await assert.rejects(
    () => anonymous.roster(),
    (err: unknown) => err instanceof ApiError && err.status === 401,
  );
});

test("displayed values round-trip the service JSON within 1e-9", async () => {
  const doc = await api.roster();
  for (const row of doc.roster.slice(0, 10)) {
    const reparsed = JSON.parse(JSON.stringify(row)) as RiskScore;
    assert.ok(Math.abs(reparsed.p_fail - row.p_fail) <= 1e-9);
    assert.ok(Math.abs(reparsed.predicted_grade - row.predicted_grade) <= 1e-9);
  }
});
