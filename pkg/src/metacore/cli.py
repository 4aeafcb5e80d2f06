"""Command-line entry point: script runner, REPL, reflection, server.

The CLI holds no model logic at all.  It is a thin client of the HTTP
service: by default it mounts the service in-process (no network, fully
deterministic), with ``--url`` it talks to a remote instance instead.

Exit codes: 0 all requests ok, 1 a request failed, 2 I/O or snapshot error.
"""

from __future__ import annotations

import argparse
import asyncio
import sys

import httpx

from .errors import MetaError
from .kernel import kind_of_token
from .literals import tokenize, unescape_string


class _InProcessTransport(httpx.BaseTransport):
    """Synchronous bridge onto the in-process ASGI app."""

    def __init__(self, app):
        self._asgi = httpx.ASGITransport(app=app)
        self._loop = asyncio.new_event_loop()

    def handle_request(self, request):
        response = self._loop.run_until_complete(self._asgi.handle_async_request(request))
        content = self._loop.run_until_complete(response.aread())
        return httpx.Response(
            status_code=response.status_code,
            headers=response.headers,
            content=content,
        )

    def close(self):
        self._loop.run_until_complete(self._asgi.aclose())
        self._loop.close()


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="metacore",
        description="Deterministic model repository: CRUD scripts, REPL, reflection.",
    )
    sub = parser.add_subparsers(dest="command")

    def add_session_args(p):
        p.add_argument("--load", metavar="PATH", help="snapshot to load before any request")
        p.add_argument("--save", metavar="PATH", help="snapshot to write on success")
        p.add_argument(
            "--capacity",
            action="append",
            default=[],
            metavar="KIND=N",
            help="slot capacity override, repeatable",
        )
        p.add_argument("--url", help="remote service URL (default: in-process)")

    run = sub.add_parser("run", help="run a request script or an interactive session")
    add_session_args(run)
    run.add_argument("--script", metavar="PATH", help="request script; omit for a REPL")
    run.add_argument(
        "--continue-on-error",
        action="store_true",
        help="keep executing after a failed request (default: strict abort)",
    )

    reflect = sub.add_parser("reflect", help="apply one reflective meta-model change")
    add_session_args(reflect)
    reflect.add_argument("operation")
    reflect.add_argument("subject")
    reflect.add_argument("params", nargs="*", metavar="KEY=VALUE")
    reflect.add_argument("--force", action="store_true", help="apply even if destructive")
    reflect.add_argument("--dry-run", action="store_true", help="report impact only")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)

    return parser


def _parse_capacities(pairs: list[str]) -> dict[str, int]:
    out = {}
    for pair in pairs:
        name, sep, number = pair.partition("=")
        try:
            kind_of_token(name)
            value = int(number)
        except (MetaError, ValueError):
            raise SystemExit(f"metacore: bad --capacity {pair!r}")
        if not sep or value < 1:
            raise SystemExit(f"metacore: bad --capacity {pair!r}")
        out[name] = value
    return out


class Client:
    """Minimal wrapper over the service API."""

    def __init__(self, url: str | None):
        if url:
            self._http = httpx.Client(base_url=url, timeout=60.0)
        else:
            from .service import create_app

            self._http = httpx.Client(
                transport=_InProcessTransport(create_app()),
                base_url="http://metacore",
            )
        self.session_id: str | None = None

    def close(self):
        if self.session_id:
            self._http.delete(f"/sessions/{self.session_id}")
        self._http.close()

    def open_session(self, capacities: dict[str, int], snapshot: str | None):
        body = {}
        if capacities:
            body["capacities"] = capacities
        if snapshot is not None:
            body["snapshot"] = snapshot
        reply = self._http.post("/sessions", json=body)
        if reply.status_code != 200:
            detail = reply.json().get("detail", {})
            code = detail.get("code", "ServiceError") if isinstance(detail, dict) else "ServiceError"
            text = detail.get("detail", "") if isinstance(detail, dict) else str(detail)
            raise RuntimeError(f"error {code} {text}")
        self.session_id = reply.json()["session_id"]

    def run_lines(self, lines: list[str], stop_on_error: bool) -> list[str]:
        reply = self._http.post(
            f"/sessions/{self.session_id}/requests",
            json={"lines": lines, "stop_on_error": stop_on_error},
        )
        reply.raise_for_status()
        return reply.json()["responses"]

    def validate(self) -> list[str]:
        reply = self._http.post(f"/sessions/{self.session_id}/validate")
        reply.raise_for_status()
        return reply.json()["diagnostics"]

    def snapshot(self) -> bytes:
        reply = self._http.get(f"/sessions/{self.session_id}/snapshot")
        reply.raise_for_status()
        return reply.json()["snapshot"].encode("utf-8")

    def reflect(self, body: dict) -> dict:
        reply = self._http.post(f"/sessions/{self.session_id}/reflect", json=body)
        if reply.status_code != 200:
            detail = reply.json().get("detail", {})
            if isinstance(detail, dict):
                return {
                    "applied": False,
                    "verdict": "error",
                    "report_lines": [],
                    "error": f"error {detail.get('code', 'ServiceError')} {detail.get('detail', '')}",
                }
        reply.raise_for_status()
        return reply.json()


def _open_client(args) -> Client:
    """Create a client and session; raises RuntimeError with a wire-style
    message on snapshot or configuration problems."""
    snapshot = None
    if args.load:
        try:
            with open(args.load, "rb") as fh:
                snapshot = fh.read().decode("utf-8")
        except OSError as exc:
            raise RuntimeError(f"error IOError {exc}") from None
    client = Client(args.url)
    try:
        client.open_session(_parse_capacities(args.capacity), snapshot)
    except Exception:
        client.close()
        raise
    return client


def _write_snapshot(client: Client, path: str) -> int:
    try:
        data = client.snapshot()
        with open(path, "wb") as fh:
            fh.write(data)
    except OSError as exc:
        print(f"metacore: cannot write snapshot: {exc}", file=sys.stderr)
        return 2
    return 0


def _script_lines(path: str) -> list[tuple[int, str]]:
    """Request lines with their original line numbers; blank lines and
    '#' comments are script-runner conveniences, not protocol."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read().split("\n")
    out = []
    for number, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        out.append((number, line))
    return out


def _run_script(args, client: Client) -> int:
    strict = not args.continue_on_error
    try:
        numbered = _script_lines(args.script)
    except OSError as exc:
        print(f"metacore: cannot read script: {exc}", file=sys.stderr)
        return 2
    responses = client.run_lines([line for _, line in numbered], stop_on_error=strict)
    failed_at = None
    for (number, _), response in zip(numbered, responses):
        print(response)
        if response.startswith("error ") and failed_at is None:
            failed_at = (number, response)
    if failed_at and strict:
        print(f"metacore: line {failed_at[0]}: {failed_at[1]}", file=sys.stderr)
        return 1
    if args.save:
        code = _write_snapshot(client, args.save)
        if code:
            return code
    return 1 if failed_at else 0


def _repl_reflect(client: Client, tokens: list[str]) -> list[str]:
    body: dict = {"force": False}
    if tokens and tokens[0] == "reflect":
        tokens = tokens[1:]
    if len(tokens) < 2:
        return ["error ParseError malformed request"]
    body["operation"] = tokens[0]
    body["subject"] = tokens[1]
    for token in tokens[2:]:
        if token == "--force":
            body["force"] = True
            continue
        if token == "--dry-run":
            body["dry_run"] = True
            continue
        key, sep, raw = token.partition("=")
        if not sep:
            return ["error ParseError malformed request"]
        try:
            if key in ("feature", "datatype"):
                body[key] = raw
            elif key == "value":
                body["potency_value"] = int(raw)
            elif key == "perlevel":
                if raw not in ("true", "false"):
                    raise ValueError(raw)
                body["per_level"] = raw == "true"
            elif key == "name":
                body["name"] = unescape_string(raw) if raw.startswith('"') else raw
            else:
                return ["error ParseError malformed request"]
        except (ValueError, MetaError):
            return ["error ParseError malformed request"]
    result = client.reflect(body)
    lines = list(result.get("report_lines", ()))
    if result.get("applied"):
        lines.append("ok")
    else:
        lines.append(result.get("error") or "error IntegrityViolation rejected")
    return lines


def _run_repl(args, client: Client) -> int:
    interactive = sys.stdin.isatty()
    while True:
        if interactive:
            print("> ", end="", flush=True)
        line = sys.stdin.readline()
        if not line:
            break
        line = line.rstrip("\n")
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped == ":quit":
            break
        if stripped == ":validate":
            for diagnostic in client.validate():
                print(diagnostic)
            continue
        if stripped.startswith(":save"):
            parts = stripped.split(None, 1)
            if len(parts) != 2:
                print("error ParseError malformed request")
                continue
            code = _write_snapshot(client, parts[1])
            print("ok" if code == 0 else f"error IOError {parts[1]}")
            continue
        if stripped.startswith(":reflect"):
            try:
                tokens = tokenize(stripped[1:])
            except MetaError:
                print("error ParseError malformed request")
                continue
            for out in _repl_reflect(client, tokens):
                print(out)
            continue
        if stripped.startswith(":"):
            print("error ParseError malformed request")
            continue
        print(client.run_lines([line], stop_on_error=False)[0])
    if args.save:
        return _write_snapshot(client, args.save)
    return 0


def _cmd_run(args) -> int:
    try:
        client = _open_client(args)
    except RuntimeError as exc:
        print(f"metacore: {exc}", file=sys.stderr)
        return 2
    try:
        if args.script:
            return _run_script(args, client)
        return _run_repl(args, client)
    finally:
        client.close()


def _cmd_reflect(args) -> int:
    try:
        client = _open_client(args)
    except RuntimeError as exc:
        print(f"metacore: {exc}", file=sys.stderr)
        return 2
    try:
        tokens = [args.operation, args.subject, *args.params]
        if args.force:
            tokens.append("--force")
        if args.dry_run:
            tokens.append("--dry-run")
        lines = _repl_reflect(client, tokens)
        for line in lines:
            print(line)
        ok = lines[-1] == "ok" or args.dry_run
        if ok and args.save:
            code = _write_snapshot(client, args.save)
            if code:
                return code
        return 0 if ok else 1
    finally:
        client.close()


def _cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    uvicorn.run(create_app(), host=args.host, port=args.port, log_level="warning")
    return 0


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if argv and argv[0] not in ("run", "reflect", "serve", "-h", "--help"):
        argv.insert(0, "run")
    elif not argv:
        argv = ["run"]
    args = _build_parser().parse_args(argv)
    if args.command == "serve":
        return _cmd_serve(args)
    if args.command == "reflect":
        return _cmd_reflect(args)
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
