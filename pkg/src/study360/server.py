"""Network front door for a SessionHub.

FastAPI carries the WebSocket (`/ws`) plus the manifest and ranged
media endpoints; an optional raw TCP listener speaks the same protocol
over 4-byte length-prefixed frames for clients without a WebSocket
stack.  Both adapters funnel into one hub on one event loop, so
commands stay ordered without locks; a background task drives the
scheduler and heartbeats.
"""

from __future__ import annotations

import asyncio
import itertools
from contextlib import suppress
from pathlib import Path

import uvicorn
from fastapi import FastAPI, Request, Response, WebSocket, WebSocketDisconnect

from . import protocol as proto
from .clock import WallClock
from .config import canonicalize, load_study
from .eventlog import LogWriter
from .hub import SessionHub
from .media import MediaCatalog, build_manifest, resolve_media_request
from .session import BiometricRule

TICK_INTERVAL_MS = 25

_peer_seq = itertools.count(1)


async def _pump(outbox: "asyncio.Queue[str | None]", send_text) -> None:
    """Single writer per connection: keeps hub sends ordered."""
    while True:
        text = await outbox.get()
        if text is None:
            return
        try:
            await send_text(text)
        except Exception:
            return  # peer gone; reader side notices and cleans up


def build_app(hub: SessionHub, catalog: MediaCatalog, clock: WallClock) -> FastAPI:
    app = FastAPI()

    @app.get("/manifest/{session_id}")
    def manifest(session_id: str, request: Request) -> Response:
        if session_id != hub.session_id:
            return Response("unknown session\n", status_code=404, media_type="text/plain")
        base = str(request.base_url).rstrip("/")
        return Response(
            build_manifest(hub.session.config, catalog, base),
            media_type="application/json",
        )

    @app.get("/media/{media_id:path}")
    def media(media_id: str, request: Request) -> Response:
        resolved = resolve_media_request(catalog, media_id, request.headers.get("range"))
        return Response(content=resolved.body, status_code=resolved.status, headers=resolved.headers)

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket) -> None:
        await ws.accept()
        peer_id = f"ws-{next(_peer_seq)}"
        outbox: asyncio.Queue[str | None] = asyncio.Queue()
        pump = asyncio.create_task(_pump(outbox, ws.send_text))
        joined = False
        try:
            raw = await ws.receive_text()
            hello = _expect_hello(raw, outbox)
            if hello is not None:
                joined = hub.connect(peer_id, hello, outbox.put_nowait, clock.now_ms())
            if joined:
                while True:
                    raw = await ws.receive_text()
                    hub.handle_text(peer_id, raw, clock.now_ms())
        except WebSocketDisconnect:
            pass
        finally:
            if joined:
                hub.disconnect(peer_id)
            outbox.put_nowait(None)
            await pump
            with suppress(Exception):
                await ws.close()

    return app


def _expect_hello(raw: str, outbox: "asyncio.Queue[str | None]") -> proto.Hello | None:
    try:
        msg = proto.decode(raw)
    except proto.ProtocolError as exc:
        outbox.put_nowait(proto.encode(proto.Err("bad_message", str(exc))))
        return None
    if not isinstance(msg, proto.Hello):
        outbox.put_nowait(proto.encode(proto.Err("bad_message", "first message must be hello")))
        return None
    return msg


def make_tcp_handler(hub: SessionHub, clock: WallClock):
    async def handle(reader: asyncio.StreamReader, writer: asyncio.StreamWriter) -> None:
        peer_id = f"tcp-{next(_peer_seq)}"
        decoder = proto.FrameDecoder()
        outbox: asyncio.Queue[str | None] = asyncio.Queue()

        async def send_frame(text: str) -> None:
            writer.write(proto.frame(text))
            await writer.drain()

        pump = asyncio.create_task(_pump(outbox, send_frame))
        joined = False
        try:
            while True:
                chunk = await reader.read(65536)
                if not chunk:
                    break
                try:
                    payloads = decoder.feed(chunk)
                except proto.FrameError:
                    outbox.put_nowait(proto.encode(proto.Err("bad_message", "oversize frame")))
                    break
                for payload in payloads:
                    text = payload.decode("utf-8", errors="replace")
                    if not joined:
                        hello = _expect_hello(text, outbox)
                        if hello is None:
                            return
                        joined = hub.connect(peer_id, hello, outbox.put_nowait, clock.now_ms())
                        if not joined:
                            return
                    else:
                        hub.handle_text(peer_id, text, clock.now_ms())
        except ConnectionError:
            pass
        finally:
            if joined:
                hub.disconnect(peer_id)
            outbox.put_nowait(None)
            await pump
            writer.close()
            with suppress(Exception):
                await writer.wait_closed()

    return handle


async def run_ticker(hub: SessionHub, clock: WallClock, interval_ms: int = TICK_INTERVAL_MS) -> None:
    while True:
        hub.advance(clock.now_ms())
        await asyncio.sleep(interval_ms / 1000)


async def _serve_async(
    hub: SessionHub,
    catalog: MediaCatalog,
    clock: WallClock,
    *,
    host: str,
    port: int,
    tcp_port: int | None,
) -> None:
    app = build_app(hub, catalog, clock)
    config = uvicorn.Config(app, host=host, port=port, log_level="warning")
    server = uvicorn.Server(config)
    ticker = asyncio.create_task(run_ticker(hub, clock))
    tcp_server = None
    if tcp_port is not None:
        tcp_server = await asyncio.start_server(make_tcp_handler(hub, clock), host, tcp_port)
    try:
        await server.serve()
    finally:
        ticker.cancel()
        with suppress(asyncio.CancelledError):
            await ticker
        if tcp_server is not None:
            tcp_server.close()
            await tcp_server.wait_closed()


def serve(
    config_path: str | Path,
    media_dir: str | Path,
    port: int,
    log_path: str | Path,
    *,
    host: str = "127.0.0.1",
    tcp_port: int | None = None,
    rules: tuple[BiometricRule, ...] = (),
) -> None:
    """Host one session until interrupted: protocol, media, logging."""
    cfg = canonicalize(load_study(config_path))
    catalog = MediaCatalog.scan(media_dir)
    clock = WallClock()
    with LogWriter(log_path) as log:
        hub = SessionHub(cfg, log=log, rules=rules)
        asyncio.run(
            _serve_async(hub, catalog, clock, host=host, port=port, tcp_port=tcp_port)
        )
