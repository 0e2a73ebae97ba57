"""Backend registry and the four-method HTTP protocol client.

A model backend is any HTTP server exposing POST /startup, /shutdown,
/preprocess, and /generate with one JSON message per call. The frontend keeps
one descriptor per registered model: REGISTERED on sight, READY once startup
succeeds, DOWN after shutdown or a transport failure.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import httpx

REGISTERED = "registered"
READY = "ready"
DOWN = "down"


class BackendProtocolError(Exception):
    pass


class BackendUnreachable(BackendProtocolError):
    pass


class BackendError(BackendProtocolError):
    """The backend answered with an error; the message passes through."""


class NotReady(Exception):
    """The named model is unknown or not in the READY state."""


@dataclass
class BackendDescriptor:
    model: str
    endpoint: str
    status: str = REGISTERED


class BackendRegistry:
    """Tracks descriptors and speaks the four-method protocol.

    ``transport_factory`` lets tests mount an in-process ASGI backend; when
    None, plain HTTP to the registered endpoint is used.
    """

    def __init__(
        self,
        timeout: float = 30.0,
        transport_factory: Callable[[str], httpx.AsyncBaseTransport] | None = None,
    ):
        self.timeout = timeout
        self.transport_factory = transport_factory
        self._backends: dict[str, BackendDescriptor] = {}
        self._clients: dict[str, httpx.AsyncClient] = {}

    def descriptor(self, model: str) -> BackendDescriptor | None:
        return self._backends.get(model)

    def descriptors(self) -> list[BackendDescriptor]:
        return [self._backends[name] for name in sorted(self._backends)]

    def require_ready(self, model: str) -> BackendDescriptor:
        descriptor = self._backends.get(model)
        if descriptor is None or descriptor.status != READY:
            raise NotReady(model)
        return descriptor

    def _client(self, descriptor: BackendDescriptor) -> httpx.AsyncClient:
        if descriptor.model not in self._clients:
            transport = (
                self.transport_factory(descriptor.endpoint) if self.transport_factory else None
            )
            self._clients[descriptor.model] = httpx.AsyncClient(
                base_url=descriptor.endpoint, transport=transport, timeout=self.timeout
            )
        return self._clients[descriptor.model]

    async def _post(self, descriptor: BackendDescriptor, method: str, payload: dict) -> dict:
        client = self._client(descriptor)
        try:
            response = await client.post(f"/{method}", json=payload)
        except httpx.HTTPError as exc:
            descriptor.status = DOWN
            raise BackendUnreachable(f"{descriptor.model}: {method} failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendError(f"{descriptor.model}: {method} -> {response.status_code}: {response.text}")
        return response.json()

    async def register(self, model: str, endpoint: str) -> BackendDescriptor:
        """Register and start a backend; it must be reachable right now."""
        descriptor = BackendDescriptor(model=model, endpoint=endpoint, status=REGISTERED)
        self._backends[model] = descriptor
        old_client = self._clients.pop(model, None)
        if old_client is not None:
            await old_client.aclose()
        await self._post(descriptor, "startup", {"model": model})
        descriptor.status = READY
        return descriptor

    async def preprocess(self, model: str, context_items: list[dict]) -> dict:
        descriptor = self.require_ready(model)
        reply = await self._post(descriptor, "preprocess", {"context": context_items})
        return reply.get("prepared", reply)

    async def generate(self, model: str, prepared: dict, config: dict) -> str:
        descriptor = self.require_ready(model)
        reply = await self._post(descriptor, "generate", {"prepared": prepared, "config": config})
        if "text" not in reply:
            raise BackendError(f"{model}: generate reply lacks text")
        return reply["text"]

    async def shutdown(self, model: str) -> None:
        descriptor = self._backends.get(model)
        if descriptor is None:
            return
        if descriptor.status == READY:
            try:
                await self._post(descriptor, "shutdown", {"model": model})
            except BackendProtocolError:
                pass
        descriptor.status = DOWN
        client = self._clients.pop(model, None)
        if client is not None:
            await client.aclose()

    async def shutdown_all(self) -> None:
        for model in list(self._backends):
            await self.shutdown(model)
