"""Deterministic evaluator stub speaking the resource wire protocol.

The stub answers exactly as the local rule evaluators would: it parses
the JSON blocks out of the prompt's <device> and <task> tags, rebuilds
the profile and task, and runs ``evaluate_terminal`` or ``evaluate_ec``.
Useful as an integration peer in tests and as a reference for anyone
implementing a real evaluator service.

Run standalone with:  python -m trustpath.stubserver --port 8099
"""

from __future__ import annotations

import argparse
import json
import re
import threading
from contextlib import contextmanager
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .network import Device, DeviceKind, Task
from .resources import ResourceProfile, evaluate_ec, evaluate_terminal

_TAG_RE = {
    "device": re.compile(r"<device>\s*(.*?)\s*</device>", re.DOTALL),
    "task": re.compile(r"<task>\s*(.*?)\s*</task>", re.DOTALL),
}


def _extract(tag: str, prompt: str) -> dict:
    match = _TAG_RE[tag].search(prompt)
    if match is None:
        raise ValueError(f"prompt has no <{tag}> section")
    return json.loads(match.group(1))


def answer_prompt(prompt: str) -> int:
    """Rule-oracle verdict for a prompt built by ``build_prompt``."""
    dev = _extract("device", prompt)
    tsk = _extract("task", prompt)
    kind = DeviceKind(dev["kind"])
    profile = ResourceProfile(
        device=dev.get("id", "device"),
        available_storage_bits=float(dev["available_storage_bits"]),
        available_compute_seconds=float(dev.get("available_compute_seconds", 0.0)),
        willing=bool(dev["willing"]),
        healthy=bool(dev["healthy"]),
    )
    task = Task(
        owner="owner",
        # terminal prompts omit density; the storage rule never reads it
        density=float(tsk.get("density", 1.0)),
        size_bits=float(tsk["size_bits"]),
        c_tf=float(tsk["c_tf"]),
        c_ec=float(tsk["c_ec"]),
        s_tf_soft=float(tsk["s_tf_soft"]),
        s_tf_hard=float(tsk["s_tf_hard"]),
        s_ec_soft=float(tsk["s_ec_soft"]),
        s_ec_hard=float(tsk["s_ec_hard"]),
    )
    if kind is DeviceKind.EDGE_COMPUTE:
        ec = Device(
            id=profile.device,
            kind=kind,
            position=(0.0, 0.0),
            tx_power=1.0,
            price=0.0,
            cpu_hz=float(dev["cpu_hz"]),
        )
        return evaluate_ec(profile, task, ec).t_res
    return evaluate_terminal(profile, task).t_res


class _Handler(BaseHTTPRequestHandler):
    def do_POST(self):  # noqa: N802 (http.server naming)
        try:
            length = int(self.headers.get("Content-Length", "0"))
            body = json.loads(self.rfile.read(length).decode("utf-8"))
            if body.get("version") != 1:
                raise ValueError("unsupported protocol version")
            t_res = answer_prompt(body["prompt"])
        except Exception as exc:  # malformed request: report, never guess
            self._reply(400, {"error": str(exc)})
            return
        self._reply(200, {"t_res": t_res})

    def _reply(self, status: int, payload: dict) -> None:
        data = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, fmt, *args):  # keep test output quiet
        return


def make_server(host: str = "127.0.0.1", port: int = 0) -> ThreadingHTTPServer:
    return ThreadingHTTPServer((host, port), _Handler)


@contextmanager
def running_stub(host: str = "127.0.0.1", port: int = 0):
    """Start the stub in a daemon thread; yields its evaluate URL."""
    server = make_server(host, port)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    try:
        yield f"http://{server.server_address[0]}:{server.server_address[1]}/evaluate"
    finally:
        server.shutdown()
        server.server_close()
        thread.join(timeout=5)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="Rule-oracle resource evaluator stub")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8099)
    args = parser.parse_args(argv)
    server = make_server(args.host, args.port)
    print(f"stub evaluator listening on http://{args.host}:{server.server_address[1]}/evaluate")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
