// Thin typed client for the gradelens risk service. All dashboard numbers
// come from these responses; the client never recomputes model outputs.
export class ApiError extends Error {
    constructor(status, message, fields = []) {
        super(message);
        this.status = status;
        this.fields = fields;
    }
}
export class ApiClient {
    constructor(origin, token = null) {
        this.origin = origin.replace(/\/$/, "");
        this.token = token;
    }
    headers(json = false) {
        const h = {};
        if (this.token)
            h["Authorization"] = `Bearer ${this.token}`;
        if (json)
            h["Content-Type"] = "application/json";
        return h;
    }
    async request(path, init = {}) {
        const res = await fetch(`${this.origin}${path}`, init);
        let body = null;
        try {
            body = await res.json();
        }
        catch {
            body = null;
        }
        if (!res.ok) {
            const doc = (body ?? {});
            throw new ApiError(res.status, doc.error ?? `HTTP ${res.status}`, doc.fields ?? []);
        }
        return body;
    }
    health() {
        return this.request("/api/health");
    }
    roster() {
        return this.request("/api/roster", { headers: this.headers() });
    }
    threshold() {
        return this.request("/api/threshold", { headers: this.headers() });
    }
    setThreshold(value) {
        return this.request("/api/threshold", {
            method: "PUT",
            headers: this.headers(true),
            body: JSON.stringify({ threshold: value }),
        });
    }
    predict(values) {
        return this.request("/api/predict", {
            method: "POST",
            headers: this.headers(true),
            body: JSON.stringify(values),
        });
    }
    model() {
        return this.request("/api/model", { headers: this.headers() });
    }
}
