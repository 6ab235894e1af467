// Intervention-threshold control. The server owns the value: every update
// round-trips and the UI re-renders from the server's answer, so concurrent
// sessions reconcile on the next fetch.

export function validateThreshold(raw: string | number): string | null {
  const value = typeof raw === "number" ? raw : Number(raw);
  if (!Number.isFinite(value)) return "threshold must be a number";
  if (!(value > 0 && value < 1)) return "threshold must lie strictly between 0 and 1";
  return null;
}

export function parseThreshold(raw: string | number): number | null {
  return validateThreshold(raw) === null ? Number(raw) : null;
}
