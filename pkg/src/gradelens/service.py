"""HTTP/JSON service exposing the trained model pair to the dashboard.

Endpoints:
    GET  /api/health     liveness (never authenticated)
    GET  /api/roster     all risk scores, sorted by descending p_fail
    GET  /api/threshold  current intervention threshold
    PUT  /api/threshold  update threshold, re-deriving flags atomically
    POST /api/predict    raw named feature values -> full risk score
    GET  /api/model      families, hyperparameters, feature specs, version

Authentication is one static bearer token read from an environment
variable; when the variable is empty or unset the API is open (local use).
Only the threshold mutates state; a lock keeps (threshold, flags) pairs
consistent for concurrent readers. The service adds no model logic: predict
is exactly the risk module's score_student behind normalization.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .errors import UnseenCategory
from .models.artifact import ModelArtifact, load_model
from .risk import RiskConfig, RiskScore, score_student
from .schema import CATEGORICAL, NUMERIC, FeatureSchema

API_VERSION = 1


@dataclass
class ServiceState:
    classifier: ModelArtifact
    regressor: ModelArtifact
    schema: FeatureSchema
    roster: list[RiskScore]
    risk: RiskConfig
    metrics: Optional[dict] = None
    token: Optional[str] = None

    def __post_init__(self):
        self._lock = threading.Lock()
        with self._lock:
            self._apply_threshold(self.risk.threshold)

    def _apply_threshold(self, threshold: float):
        self.risk = RiskConfig(threshold=threshold, top_k=self.risk.top_k)
        for s in self.roster:
            s.flagged = s.p_fail > threshold
        self.roster.sort(key=lambda s: (-s.p_fail, s.student_id))

    def snapshot_roster(self) -> dict:
        with self._lock:
            return {
                "threshold": self.risk.threshold,
                "roster": [s.to_dict() for s in self.roster],
            }

    def get_threshold(self) -> float:
        with self._lock:
            return self.risk.threshold

    def set_threshold(self, threshold: float):
        with self._lock:
            self._apply_threshold(threshold)

    def feature_specs(self) -> list[dict]:
        specs = []
        norm = self.classifier.norm
        for name in norm.feature_names:
            col = self.schema.column(name)
            spec = {"name": name, "kind": col.kind}
            if col.kind == NUMERIC and col.valid_range is not None:
                spec["range"] = list(col.valid_range)
            if col.kind == CATEGORICAL:
                spec["values"] = sorted(norm.code_maps.get(name, {}).keys())
            specs.append(spec)
        return specs

    def validate_body(self, body: dict) -> tuple[Optional[dict], list[dict]]:
        """Field-level validation of a predict body against the schema."""
        errors = []
        norm = self.classifier.norm
        known = set(norm.feature_names)
        for key in body:
            if key not in known and key != "student_id":
                errors.append({"field": key, "error": "unknown feature"})
        cleaned = {}
        for name in norm.feature_names:
            if name not in body:
                errors.append({"field": name, "error": "missing"})
                continue
            value = body[name]
            col = self.schema.column(name)
            if col.kind == NUMERIC:
                try:
                    v = float(value)
                except (TypeError, ValueError):
                    errors.append({"field": name, "error": "not a number"})
                    continue
                if col.valid_range is not None:
                    lo, hi = col.valid_range
                    if not lo <= v <= hi:
                        errors.append(
                            {"field": name, "error": f"outside valid range [{lo}, {hi}]"}
                        )
                        continue
                cleaned[name] = v
            else:
                v = str(value)
                if v not in norm.code_maps.get(name, {}):
                    errors.append({"field": name, "error": "unknown category"})
                    continue
                cleaned[name] = v
        return (cleaned if not errors else None), errors

    def predict(self, cleaned: dict, student_id: str) -> RiskScore:
        x = self.classifier.norm.vectorize(cleaned)
        with self._lock:
            cfg = self.risk
        return score_student(
            x, student_id, self.classifier.model, self.regressor.model,
            self.classifier.norm, cfg,
        )

    def model_info(self) -> dict:
        return {
            "api_version": API_VERSION,
            "classification": {
                "family": self.classifier.config.family,
                "hyperparameters": self.classifier.config.resolved(),
                "format_version": self.classifier.format_version,
                "fingerprint": self.classifier.fingerprint,
            },
            "regression": {
                "family": self.regressor.config.family,
                "hyperparameters": self.regressor.config.resolved(),
                "format_version": self.regressor.format_version,
                "fingerprint": self.regressor.fingerprint,
            },
            "metrics": self.metrics,
            "features": self.feature_specs(),
            "grade_scale": list(self.schema.grade_scale),
            "pass_threshold": self.schema.pass_threshold,
        }


class _Handler(BaseHTTPRequestHandler):
    state: ServiceState = None
    static_dir: Optional[Path] = None
    protocol_version = "HTTP/1.1"

    # -- plumbing ---------------------------------------------------------

    def log_message(self, fmt, *args):  # quiet by default
        pass

    def _send_json(self, code: int, doc: dict):
        payload = json.dumps(doc).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header(
            "Access-Control-Allow-Headers", "Authorization, Content-Type"
        )
        self.send_header("Access-Control-Allow-Methods", "GET, PUT, POST, OPTIONS")
        self.end_headers()
        self.wfile.write(payload)

    def _authorized(self) -> bool:
        token = self.state.token
        if not token:
            return True
        header = self.headers.get("Authorization", "")
        return header == f"Bearer {token}"

    def _read_body(self) -> Optional[dict]:
        try:
            length = int(self.headers.get("Content-Length", 0))
            doc = json.loads(self.rfile.read(length).decode("utf-8"))
        except (ValueError, UnicodeDecodeError):
            return None
        return doc if isinstance(doc, dict) else None

    # -- routes -----------------------------------------------------------

    def do_OPTIONS(self):
        self._send_json(204, {})

    def do_GET(self):
        path = self.path.split("?")[0]
        if path == "/api/health":
            self._send_json(200, {"status": "ok"})
            return
        if path.startswith("/api/"):
            if not self._authorized():
                self._send_json(401, {"error": "missing or invalid bearer token"})
                return
            if path == "/api/roster":
                self._send_json(200, self.state.snapshot_roster())
            elif path == "/api/threshold":
                self._send_json(200, {"threshold": self.state.get_threshold()})
            elif path == "/api/model":
                self._send_json(200, self.state.model_info())
            else:
                self._send_json(404, {"error": f"no such endpoint {path}"})
            return
        self._serve_static(path)

    def do_PUT(self):
        path = self.path.split("?")[0]
        if path != "/api/threshold":
            self._send_json(404, {"error": f"no such endpoint {path}"})
            return
        if not self._authorized():
            self._send_json(401, {"error": "missing or invalid bearer token"})
            return
        body = self._read_body()
        if body is None or "threshold" not in body:
            self._send_json(400, {"error": "body must be {\"threshold\": <number>}"})
            return
        try:
            threshold = float(body["threshold"])
        except (TypeError, ValueError):
            self._send_json(400, {"error": "threshold must be a number"})
            return
        if not 0.0 < threshold < 1.0:
            self._send_json(409, {"error": "threshold must lie strictly inside (0, 1)"})
            return
        self.state.set_threshold(threshold)
        self._send_json(200, {"threshold": self.state.get_threshold()})

    def do_POST(self):
        path = self.path.split("?")[0]
        if path != "/api/predict":
            self._send_json(404, {"error": f"no such endpoint {path}"})
            return
        if not self._authorized():
            self._send_json(401, {"error": "missing or invalid bearer token"})
            return
        body = self._read_body()
        if body is None:
            self._send_json(400, {"error": "body must be a JSON object of feature values"})
            return
        student_id = str(body.get("student_id", "what-if"))
        cleaned, errors = self.state.validate_body(body)
        if cleaned is None:
            self._send_json(400, {"error": "invalid feature values", "fields": errors})
            return
        try:
            score = self.state.predict(cleaned, student_id)
        except UnseenCategory as exc:
            self._send_json(400, {"error": str(exc)})
            return
        self._send_json(200, score.to_dict())

    # -- static assets ------------------------------------------------------

    def _serve_static(self, path: str):
        if self.static_dir is None:
            self._send_json(404, {"error": "no static assets configured"})
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": f"not found: {path}"})
            return
        ctype = {
            ".html": "text/html; charset=utf-8",
            ".js": "text/javascript; charset=utf-8",
            ".css": "text/css; charset=utf-8",
            ".map": "application/json",
            ".svg": "image/svg+xml",
        }.get(target.suffix, "application/octet-stream")
        payload = target.read_bytes()
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)


def build_state(
    classifier_path,
    regressor_path,
    schema: FeatureSchema,
    roster_doc: dict,
    risk: RiskConfig,
    metrics: Optional[dict] = None,
    token_env: str = "GRADELENS_TOKEN",
) -> ServiceState:
    cls_art = load_model(classifier_path)
    reg_art = load_model(regressor_path)
    roster = [
        RiskScore(
            student_id=entry["student_id"],
            p_fail=float(entry["p_fail"]),
            flagged=bool(entry["flagged"]),
            predicted_grade=float(entry["predicted_grade"]),
            contributions=[(c["feature"], float(c["value"])) for c in entry["contributions"]],
        )
        for entry in roster_doc.get("roster", [])
    ]
    token = os.environ.get(token_env) or None
    return ServiceState(
        classifier=cls_art,
        regressor=reg_art,
        schema=schema,
        roster=roster,
        risk=risk,
        metrics=metrics,
        token=token,
    )


def make_server(state: ServiceState, port: int, static_dir: Optional[Path] = None) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"state": state, "static_dir": static_dir})
    server = ThreadingHTTPServer(("0.0.0.0", port), handler)
    server.daemon_threads = True
    return server


def serve(state: ServiceState, port: int = 8080, static_dir: Optional[Path] = None):
    server = make_server(state, port, static_dir)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
