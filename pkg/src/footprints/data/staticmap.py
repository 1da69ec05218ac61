"""Static-map tile fetcher (additive data source, required by nothing else)."""

from __future__ import annotations

import io
import os
import time
from typing import Optional

import numpy as np
from PIL import Image

API_KEY_ENV = "STATICMAP_API_KEY"
DEFAULT_URL = "https://maps.googleapis.com/maps/api/staticmap"
QUOTA_STATUSES = (403, 429)


class StaticMapError(RuntimeError):
    pass


def fetch_static_map(
    lat: float,
    lon: float,
    zoom: int,
    size: int,
    api_key: Optional[str] = None,
    session=None,
    url: str = DEFAULT_URL,
    max_attempts: int = 3,
    sleep=time.sleep,
) -> np.ndarray:
    """Fetch one size x size satellite tile centered on (lat, lon).

    Retries transient failures with exponential backoff (max_attempts
    total); quota errors are surfaced verbatim without retry. The API key
    comes from the argument or the STATICMAP_API_KEY environment variable,
    and its absence is a configuration error raised before any network call.
    """
    key = api_key or os.environ.get(API_KEY_ENV)
    if not key:
        raise StaticMapError(
            f"no API key: pass api_key or set the {API_KEY_ENV} environment variable"
        )
    if session is None:
        import requests

        session = requests.Session()
    params = {
        "center": f"{lat},{lon}",
        "zoom": str(zoom),
        "size": f"{size}x{size}",
        "maptype": "satellite",
        "key": key,
    }
    last_error = None
    for attempt in range(max_attempts):
        if attempt:
            sleep(0.5 * 2 ** (attempt - 1))
        try:
            resp = session.get(url, params=params, timeout=30)
        except Exception as exc:  # requests.RequestException and test fakes
            last_error = f"request failed: {exc}"
            continue
        if resp.status_code in QUOTA_STATUSES:
            raise StaticMapError(resp.text)
        if resp.status_code != 200:
            last_error = f"HTTP {resp.status_code}"
            continue
        image = Image.open(io.BytesIO(resp.content)).convert("RGB")
        return np.asarray(image)
    raise StaticMapError(f"giving up after {max_attempts} attempts: {last_error}")
