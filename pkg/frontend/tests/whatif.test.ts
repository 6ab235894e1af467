import assert from "node:assert/strict";
import { test } from "node:test";

import type { FeatureSpec, RiskScore } from "../src/api.js";
import { validateThreshold } from "../src/threshold.js";
import {
  attachServerErrors,
  blankFields,
  collectPayload,
  contributionBarsHTML,
  fieldsFromValues,
  formIsValid,
  riskPanelHTML,
  validateAll,
  validateField,
} from "../src/whatif.js";

const numeric: FeatureSpec = { name: "avg_grade_sem1", kind: "numeric", range: [0, 20] };
const categorical: FeatureSpec = {
  name: "attendance_shift",
  kind: "categorical",
  values: ["day", "evening"],
};

test("numeric range validation mirrors the schema", () => {
  assert.equal(validateField(numeric, "12.5"), null);
  assert.equal(validateField(numeric, "0"), null);
  assert.equal(validateField(numeric, "20"), null);
  assert.match(validateField(numeric, "21") ?? "", /between 0 and 20/);
  assert.match(validateField(numeric, "-1") ?? "", /between/);
  assert.match(validateField(numeric, "abc") ?? "", /number/);
  assert.match(validateField(numeric, "") ?? "", /required/);
});

test("categorical validation accepts only known values", () => {
  assert.equal(validateField(categorical, "day"), null);
  assert.match(validateField(categorical, "night") ?? "", /one of/);
});

test("client blocks out-of-range threshold before sending", () => {
  assert.equal(validateThreshold(0.5), null);
  assert.notEqual(validateThreshold(1.5), null);
  assert.notEqual(validateThreshold(0), null);
  assert.notEqual(validateThreshold(1), null);
  assert.notEqual(validateThreshold("oops"), null);
});

test("blank and prefilled field construction", () => {
  const blanks = blankFields([numeric, categorical]);
  assert.equal(blanks[0].raw, "");
  assert.equal(blanks[1].raw, "day");
  const filled = fieldsFromValues([numeric, categorical], {
    avg_grade_sem1: 14.5,
    attendance_shift: "evening",
  });
  assert.equal(filled[0].raw, "14.5");
  assert.equal(filled[1].raw, "evening");
});

test("payload collection casts numerics and passes categoricals through", () => {
  const fields = fieldsFromValues([numeric, categorical], {
    avg_grade_sem1: "9.5",
    attendance_shift: "evening",
  });
  assert.deepEqual(collectPayload(fields), {
    avg_grade_sem1: 9.5,
    attendance_shift: "evening",
  });
});

test("validateAll and formIsValid agree", () => {
  const bad = fieldsFromValues([numeric], { avg_grade_sem1: "99" });
  assert.equal(formIsValid(bad), false);
  const validated = validateAll(bad);
  assert.match(validated[0].error ?? "", /between/);
  const good = fieldsFromValues([numeric], { avg_grade_sem1: "10" });
  assert.equal(formIsValid(good), true);
});

test("server field errors attach to the offending inputs only", () => {
  const fields = fieldsFromValues([numeric, categorical], {
    avg_grade_sem1: "10",
    attendance_shift: "day",
  });
  const attached = attachServerErrors(fields, [
    { field: "attendance_shift", error: "unknown category" },
  ]);
  assert.equal(attached[0].error, null);
  assert.equal(attached[1].error, "unknown category");
});

function score(partial: Partial<RiskScore> = {}): RiskScore {
  return {
    student_id: "what-if",
    p_fail: 0.82,
    flagged: true,
    predicted_grade: 5.1,
    contributions: [
      { feature: "avg_grade_sem1", value: -1.2 },
      { feature: "scholarship_holder", value: 0.3 },
    ],
    ...partial,
  };
}

test("risk panel shows probability, flag and grade from the response", () => {
  const html = riskPanelHTML(score());
  assert.match(html, /0\.820/);
  assert.match(html, /5\.1/);
  assert.match(html, /above threshold/);
});

test("contribution bars are signed for linear-style attributions", () => {
  const html = contributionBarsHTML(score());
  assert.match(html, /data-kind="signed weight × value"/);
  assert.match(html, /class="bar neg"/);
  assert.match(html, /class="bar pos"/);
});

test("contribution bars are unsigned importances for forests", () => {
  const html = contributionBarsHTML(
    score({ contributions: [{ feature: "a", value: 0.7 }, { feature: "b", value: 0.3 }] }),
  );
  assert.match(html, /data-kind="importance share"/);
  assert.ok(!html.includes('class="bar neg"'));
});
