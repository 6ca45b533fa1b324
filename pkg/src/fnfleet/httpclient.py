"""Small JSON-POST client seam.

Action dispatch, webhook notification, and agent registration all go
through an HttpPoster so the simulator can wire them in-process while
production uses httpx.
"""

from __future__ import annotations

from typing import Callable, Optional

import httpx


class HttpPostError(Exception):
    """Network-level failure: connect refused, timeout, DNS."""


class HttpPoster:
    def post(
        self, url: str, body: dict, headers: Optional[dict] = None, timeout: float = 10.0
    ) -> tuple[int, dict]:
        """POST JSON; returns (status, parsed body or {}).

        Raises HttpPostError only for transport-level failures; HTTP error
        statuses are returned, not raised.
        """
        raise NotImplementedError


class HttpxPoster(HttpPoster):
    def post(self, url, body, headers=None, timeout=10.0):
        try:
            resp = httpx.post(url, json=body, headers=headers or {}, timeout=timeout)
        except httpx.HTTPError as exc:
            raise HttpPostError(f"POST {url}: {exc}") from exc
        try:
            parsed = resp.json()
        except ValueError:
            parsed = {}
        return resp.status_code, parsed if isinstance(parsed, dict) else {}


RouteHandler = Callable[[str, dict, dict], tuple[int, dict]]


class RoutingPoster(HttpPoster):
    """Dispatches by URL prefix to in-process handlers (simulator mode)."""

    def __init__(self) -> None:
        self._routes: list[tuple[str, RouteHandler]] = []

    def add_route(self, prefix: str, handler: RouteHandler) -> None:
        self._routes.append((prefix, handler))

    def remove_route(self, prefix: str) -> None:
        self._routes = [(p, h) for p, h in self._routes if p != prefix]

    def post(self, url, body, headers=None, timeout=10.0):
        for prefix, handler in self._routes:
            if url.startswith(prefix):
                return handler(url, body, headers or {})
        raise HttpPostError(f"POST {url}: connection refused")


class RecordingPoster(HttpPoster):
    """Accepts every POST and remembers it; used as a webhook sink."""

    def __init__(self) -> None:
        self.requests: list[tuple[str, dict]] = []

    def post(self, url, body, headers=None, timeout=10.0):
        self.requests.append((url, body))
        return 200, {}
