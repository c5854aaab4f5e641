from __future__ import annotations

import json
import logging
import socket
import urllib.error
import urllib.request
from typing import Any, Mapping

from .errors import TransportError

log = logging.getLogger(__name__)


def post_json(
    url: str,
    payload: Any,
    *,
    timeout: float,
    retries: int = 0,
    headers: Mapping[str, str] | None = None,
) -> Any:
    """POST ``payload`` as JSON and decode the JSON reply.

    Makes at most ``retries + 1`` attempts. Timeouts, connection failures and
    5xx answers are retried; 4xx answers fail immediately.
    """
    body = json.dumps(payload).encode("utf-8")
    all_headers = {"Content-Type": "application/json", "Accept": "application/json"}
    all_headers.update(headers or {})
    attempts = 0
    last: Exception | None = None
    while attempts <= retries:
        attempts += 1
        request = urllib.request.Request(url, data=body, headers=all_headers, method="POST")
        try:
            with urllib.request.urlopen(request, timeout=timeout) as resp:
                raw = resp.read()
        except urllib.error.HTTPError as exc:
            last = exc
            if exc.code < 500:
                break
        except (urllib.error.URLError, socket.timeout, TimeoutError, ConnectionError) as exc:
            last = exc
        else:
            try:
                return json.loads(raw.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise TransportError(f"{url}: reply is not JSON ({exc})", attempts=attempts) from exc
        log.debug("attempt %d to %s failed: %s", attempts, url, last)
    raise TransportError(f"{url}: {last}", attempts=attempts) from last
