"""Stdio JSON worker that executes candidate code against test cases.

Protocol: the worker prints ``{"ready": true}`` at startup, then reads one
JSON request per line and writes exactly one JSON response per line.

Request:  {"request_id", "code", "tests": [{"test_id", "payload", "kind"}],
           "timeout_ms", "entry_point"}
Response: {"request_id", "per_test": [{"test_id", "status", "detail"}]}

Statuses: pass, fail, error, timeout. Each test runs in a fresh child
process so candidate-defined names never leak between tests or requests,
and tight loops can be killed on timeout.
"""

from __future__ import annotations

import argparse
import io
import json
import multiprocessing as mp
import sys

DEFAULT_GRACE_MS = 500

_ctx = mp.get_context("fork") if sys.platform != "win32" else mp.get_context("spawn")


def _normalize_output(text: str) -> str:
    lines = [line.rstrip() for line in text.split("\n")]
    while lines and lines[-1] == "":
        lines.pop()
    return "\n".join(lines)


def _child(code: str, payload: str, kind: str, entry_point, conn) -> None:
    """Execute one test in a fresh namespace and report (status, detail)."""
    try:
        if kind == "io_pair":
            spec = json.loads(payload)
            stdin_text = spec.get("stdin", "")
            expected = spec.get("stdout", "")
            sys.stdin = io.StringIO(stdin_text)
            out = io.StringIO()
            sys.stdout = out
            namespace = {"__name__": "__main__"}
            try:
                exec(code, namespace)
            except SystemExit:
                pass
            except BaseException as exc:
                sys.stdout = sys.__stdout__
                conn.send(("error", f"{type(exc).__name__}: {exc}"))
                return
            sys.stdout = sys.__stdout__
            actual = out.getvalue()
            if _normalize_output(actual) == _normalize_output(expected):
                conn.send(("pass", None))
            else:
                conn.send(("fail", f"expected {expected!r}, got {actual!r}"))
        else:
            namespace: dict = {"__name__": "__test__"}
            try:
                exec(code, namespace)
            except BaseException as exc:
                conn.send(("error", f"{type(exc).__name__}: {exc}"))
                return
            if entry_point and entry_point in namespace:
                namespace.setdefault("candidate", namespace[entry_point])
            try:
                exec(payload, namespace)
            except AssertionError as exc:
                conn.send(("fail", str(exc) or "assertion failed"))
            except BaseException as exc:
                conn.send(("error", f"{type(exc).__name__}: {exc}"))
            else:
                conn.send(("pass", None))
    except BaseException as exc:  # last-resort: never die silently
        try:
            conn.send(("error", f"runner internal: {exc}"))
        except Exception:
            pass


def run_one_test(code: str, test: dict, timeout_ms: int, entry_point=None, grace_ms: int = DEFAULT_GRACE_MS):
    """Run a single test case in a child process; returns (status, detail)."""
    parent_conn, child_conn = _ctx.Pipe(duplex=False)
    proc = _ctx.Process(
        target=_child,
        args=(code, test.get("payload", ""), test.get("kind", "assertion"), entry_point, child_conn),
    )
    proc.start()
    child_conn.close()
    deadline_s = (timeout_ms + grace_ms) / 1000.0
    if parent_conn.poll(deadline_s):
        try:
            status, detail = parent_conn.recv()
        except EOFError:
            status, detail = "error", "child exited without a verdict"
        proc.join(grace_ms / 1000.0)
        if proc.is_alive():
            proc.kill()
            proc.join()
        return status, detail
    proc.kill()
    proc.join()
    return "timeout", f"exceeded {timeout_ms} ms"


def handle_request(request: dict, grace_ms: int = DEFAULT_GRACE_MS) -> dict:
    request_id = request.get("request_id")
    code = request.get("code")
    tests = request.get("tests")
    timeout_ms = request.get("timeout_ms")
    if not isinstance(code, str) or not isinstance(tests, list) or not isinstance(timeout_ms, int):
        per_test = []
        if isinstance(tests, list):
            per_test = [
                {"test_id": t.get("test_id") if isinstance(t, dict) else None, "status": "error", "detail": "bad request"}
                for t in tests
            ]
        return {"request_id": request_id, "per_test": per_test, "error": "bad request"}
    entry_point = request.get("entry_point")
    per_test = []
    for test in tests:
        if not isinstance(test, dict) or "test_id" not in test or "payload" not in test:
            per_test.append({"test_id": test.get("test_id") if isinstance(test, dict) else None,
                             "status": "error", "detail": "bad request"})
            continue
        status, detail = run_one_test(code, test, timeout_ms, entry_point, grace_ms)
        per_test.append({"test_id": test["test_id"], "status": status, "detail": detail})
    return {"request_id": request_id, "per_test": per_test}


def serve(stdin=None, stdout=None, grace_ms: int = DEFAULT_GRACE_MS) -> None:
    """Request loop: ready line, then one response line per request line."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    def emit(obj: dict) -> None:
        stdout.write(json.dumps(obj) + "\n")
        stdout.flush()

    emit({"ready": True})
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            request = json.loads(line)
            if not isinstance(request, dict):
                raise ValueError("request must be an object")
        except ValueError:
            emit({"request_id": None, "per_test": [], "error": "bad request"})
            continue
        try:
            emit(handle_request(request, grace_ms))
        except Exception as exc:  # keep the loop alive no matter what
            emit({"request_id": request.get("request_id"), "per_test": [], "error": f"internal: {exc}"})


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="exec-runner")
    parser.add_argument("--grace-ms", type=int, default=DEFAULT_GRACE_MS)
    args = parser.parse_args(argv)
    serve(grace_ms=args.grace_ms)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
