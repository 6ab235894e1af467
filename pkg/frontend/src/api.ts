// Thin typed client for the gradelens risk service. All dashboard numbers
// come from these responses; the client never recomputes model outputs.

export interface Contribution {
  feature: string;
  value: number;
}

export interface RiskScore {
  student_id: string;
  p_fail: number;
  flagged: boolean;
  predicted_grade: number;
  contributions: Contribution[];
}

export interface RosterResponse {
  threshold: number;
  roster: RiskScore[];
}

export interface FeatureSpec {
  name: string;
  kind: "numeric" | "categorical";
  range?: [number, number];
  values?: string[];
}

export interface ModelInfo {
  api_version: number;
  classification: { family: string; hyperparameters: Record<string, unknown> };
  regression: { family: string; hyperparameters: Record<string, unknown> };
  features: FeatureSpec[];
  grade_scale: [number, number];
  pass_threshold: number;
}

export interface FieldError {
  field: string;
  error: string;
}

export class ApiError extends Error {
  status: number;
  fields: FieldError[];

  constructor(status: number, message: string, fields: FieldError[] = []) {
    super(message);
    this.status = status;
    this.fields = fields;
  }
}

export class ApiClient {
  origin: string;
  token: string | null;

  constructor(origin: string, token: string | null = null) {
    this.origin = origin.replace(/\/$/, "");
    this.token = token;
  }

  private headers(json = false): Record<string, string> {
    const h: Record<string, string> = {};
    if (this.token) h["Authorization"] = `Bearer ${this.token}`;
    if (json) h["Content-Type"] = "application/json";
    return h;
  }

  private async request<T>(path: string, init: RequestInit = {}): Promise<T> {
    const res = await fetch(`${this.origin}${path}`, init);
    let body: unknown = null;
    try {
      body = await res.json();
    } catch {
      body = null;
    }
    if (!res.ok) {
      const doc = (body ?? {}) as { error?: string; fields?: FieldError[] };
      throw new ApiError(res.status, doc.error ?? `HTTP ${res.status}`, doc.fields ?? []);
    }
    return body as T;
  }

  health(): Promise<{ status: string }> {
    return this.request("/api/health");
  }

  roster(): Promise<RosterResponse> {
    return this.request("/api/roster", { headers: this.headers() });
  }

  threshold(): Promise<{ threshold: number }> {
    return this.request("/api/threshold", { headers: this.headers() });
  }

  setThreshold(value: number): Promise<{ threshold: number }> {
    return this.request("/api/threshold", {
      method: "PUT",
      headers: this.headers(true),
      body: JSON.stringify({ threshold: value }),
    });
  }

  predict(values: Record<string, string | number>): Promise<RiskScore> {
    return this.request("/api/predict", {
      method: "POST",
      headers: this.headers(true),
      body: JSON.stringify(values),
    });
  }

  model(): Promise<ModelInfo> {
    return this.request("/api/model", { headers: this.headers() });
  }
}
