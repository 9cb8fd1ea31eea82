"""Local HTTP service exposing a fitted model to interactive clients.

Endpoints (JSON, loopback-oriented, no authentication):

    GET  /api/controls   catalog: ids, categories, labels, level encoding
    GET  /api/model      the exact published model-params document
    POST /api/forecast   {"maturity": {"1a": "not", ...}}  all 22 controls
                         -> x, dgi, incident/annual risk, marginal ranking

The service performs all risk math server-side; clients only render the
returned numbers.  ``GET /api/model`` serves the params document verbatim as
loaded from disk, so clients see exactly what was published.  When a UI
directory is configured, its files are served from the root path.
"""

from __future__ import annotations

import json
import logging
import mimetypes
import warnings
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Tuple

from .controls import CONTROLS, CONTROL_IDS, MATURITY_WIRE_VALUES, MaturityLevel, parse_maturity
from .forecast import ExtrapolationWarning, forecast_from_maturity, forecast_to_dict, marginal_control_ranking, ranking_to_dicts
from .gap_model import ModelParams, model_params_from_dict, model_params_to_dict

log = logging.getLogger(__name__)

MAX_BODY_BYTES = 1 << 20

CONTROLS_DOCUMENT = {
    "levels": list(MATURITY_WIRE_VALUES),
    "level_display": {lvl.wire: lvl.display_name for lvl in MaturityLevel},
    "controls": [
        {
            "id": c.code,
            "category_index": c.category_index,
            "category": c.category,
            "label": c.label,
        }
        for c in CONTROLS
    ],
}


class ModelAPIServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(
        self,
        address: Tuple[str, int],
        params_doc: Mapping,
        ui_dir: Optional[Path] = None,
    ):
        self.params_doc = dict(params_doc)
        self.params: ModelParams = model_params_from_dict(params_doc)
        self.ui_dir = Path(ui_dir).resolve() if ui_dir else None
        super().__init__(address, _Handler)


def create_model_server(
    params_doc: Mapping,
    host: str = "127.0.0.1",
    port: int = 8377,
    ui_dir: Optional[Path] = None,
) -> ModelAPIServer:
    server = ModelAPIServer((host, port), params_doc, ui_dir)
    log.info("model API listening on http://%s:%d/", *server.server_address)
    return server


class _Handler(BaseHTTPRequestHandler):
    server: ModelAPIServer
    protocol_version = "HTTP/1.1"

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt: str, *args) -> None:
        log.debug("%s " + fmt, self.client_address[0], *args)

    def _send_json(self, status: int, payload: Mapping) -> None:
        body = json.dumps(payload, sort_keys=True).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def _send_file(self, path: Path) -> None:
        data = path.read_bytes()
        ctype = mimetypes.guess_type(str(path))[0] or "application/octet-stream"
        self.send_response(200)
        self.send_header("Content-Type", ctype)
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    # -- routes ------------------------------------------------------------

    def do_OPTIONS(self) -> None:  # CORS preflight for dev setups
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.send_header("Content-Length", "0")
        self.end_headers()

    def do_GET(self) -> None:
        if self.path == "/api/controls":
            self._send_json(200, CONTROLS_DOCUMENT)
        elif self.path == "/api/model":
            self._send_json(200, self.server.params_doc)
        elif self.server.ui_dir is not None:
            self._serve_static()
        else:
            self._send_json(404, {"error": f"no such resource: {self.path}"})

    def _serve_static(self) -> None:
        rel = self.path.split("?", 1)[0].lstrip("/") or "index.html"
        target = (self.server.ui_dir / rel).resolve()
        if not str(target).startswith(str(self.server.ui_dir)) or not target.is_file():
            self._send_json(404, {"error": f"no such resource: {self.path}"})
            return
        self._send_file(target)

    def do_POST(self) -> None:
        if self.path != "/api/forecast":
            self._send_json(404, {"error": f"no such resource: {self.path}"})
            return
        length = int(self.headers.get("Content-Length") or 0)
        if length <= 0 or length > MAX_BODY_BYTES:
            self._send_json(400, {"error": "request body required"})
            return
        try:
            body = json.loads(self.rfile.read(length).decode("utf-8"))
        except (json.JSONDecodeError, UnicodeDecodeError):
            self._send_json(400, {"error": "request body is not valid JSON"})
            return
        maturity_raw = body.get("maturity") if isinstance(body, dict) else None
        if not isinstance(maturity_raw, dict):
            self._send_json(400, {"error": "body must be an object with a 'maturity' map"})
            return

        missing = [cid for cid in CONTROL_IDS if cid not in maturity_raw]
        unknown = sorted(set(maturity_raw) - set(CONTROL_IDS), key=str)
        maturity: Dict[str, MaturityLevel] = {}
        invalid: List[str] = []
        for cid in CONTROL_IDS:
            if cid in maturity_raw:
                try:
                    maturity[cid] = parse_maturity(str(maturity_raw[cid]))
                except ValueError:
                    invalid.append(cid)
        if missing or unknown or invalid:
            self._send_json(400, {
                "error": "maturity map must cover exactly the 22 catalog controls",
                "missing": missing,
                "unknown": unknown,
                "invalid": invalid,
            })
            return

        params = self.server.params
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ExtrapolationWarning)
            point = forecast_from_maturity(params, maturity)
            ranking = marginal_control_ranking(params, maturity)
        payload = forecast_to_dict(point)
        payload["ranking"] = ranking_to_dicts(ranking)
        self._send_json(200, payload)
