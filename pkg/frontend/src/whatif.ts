// What-if form logic: fields are generated from the service's feature
// specs, validated client-side with the same ranges the schema enforces,
// and submitted unchanged. Editing and resubmitting lets a teacher explore
// "what if attendance improves" before deciding on an intervention.

import type { FeatureSpec, RiskScore } from "./api.js";
import { escapeHtml, formatGrade, formatProbability } from "./roster.js";

export interface FieldState {
  spec: FeatureSpec;
  raw: string;
  error: string | null;
}

export function blankFields(specs: FeatureSpec[]): FieldState[] {
  return specs.map((spec) => ({
    spec,
    raw: spec.kind === "categorical" ? (spec.values?.[0] ?? "") : "",
    error: null,
  }));
}

export function fieldsFromValues(
  specs: FeatureSpec[],
  values: Record<string, string | number>,
): FieldState[] {
  return specs.map((spec) => ({
    spec,
    raw: values[spec.name] !== undefined ? String(values[spec.name]) : "",
    error: null,
  }));
}

export function validateField(spec: FeatureSpec, raw: string): string | null {
  if (raw.trim() === "") return "required";
  if (spec.kind === "numeric") {
    const value = Number(raw);
    if (!Number.isFinite(value)) return "must be a number";
    if (spec.range) {
      const [lo, hi] = spec.range;
      if (value < lo || value > hi) return `must be between ${lo} and ${hi}`;
    }
    return null;
  }
  if (spec.values && !spec.values.includes(raw)) {
    return `must be one of: ${spec.values.join(", ")}`;
  }
  return null;
}

export function validateAll(fields: FieldState[]): FieldState[] {
  return fields.map((f) => ({ ...f, error: validateField(f.spec, f.raw) }));
}

export function formIsValid(fields: FieldState[]): boolean {
  return fields.every((f) => validateField(f.spec, f.raw) === null);
}

export function collectPayload(fields: FieldState[]): Record<string, string | number> {
  const payload: Record<string, string | number> = {};
  for (const f of fields) {
    payload[f.spec.name] = f.spec.kind === "numeric" ? Number(f.raw) : f.raw;
  }
  return payload;
}

export function attachServerErrors(
  fields: FieldState[],
  serverErrors: { field: string; error: string }[],
): FieldState[] {
  const byField = new Map(serverErrors.map((e) => [e.field, e.error]));
  return fields.map((f) => ({ ...f, error: byField.get(f.spec.name) ?? null }));
}

// Linear/logistic contributions are signed; tree and forest importances are
// nonnegative shares. Bars are labeled accordingly.
export function contributionBarsHTML(score: RiskScore): string {
  const maxAbs = Math.max(1e-12, ...score.contributions.map((c) => Math.abs(c.value)));
  const signed = score.contributions.some((c) => c.value < 0);
  const bars = score.contributions
    .map((c) => {
      const width = Math.round((Math.abs(c.value) / maxAbs) * 100);
      const cls = c.value < 0 ? "neg" : "pos";
      return `<div class="bar-row">
  <span class="bar-label">${escapeHtml(c.feature)}</span>
  <span class="bar ${cls}" style="width:${width}%"></span>
  <span class="bar-value">${c.value.toFixed(3)}</span>
</div>`;
    })
    .join("\n");
  const kind = signed ? "signed weight × value" : "importance share";
  return `<div class="contributions" data-kind="${kind}">${bars}</div>`;
}

export function riskPanelHTML(score: RiskScore): string {
  return `<div class="risk-panel ${score.flagged ? "flagged" : ""}">
  <h3>${escapeHtml(score.student_id)}</h3>
  <p>Failure probability: <strong>${formatProbability(score.p_fail)}</strong>
     ${score.flagged ? '<span class="flag">above threshold</span>' : ""}</p>
  <p>Predicted final grade: <strong>${formatGrade(score.predicted_grade)}</strong></p>
  ${contributionBarsHTML(score)}
</div>`;
}
