"""File formats: CSV vectors and matrices, row-group files and PNG images (local or http(s))."""

from __future__ import annotations

import io
import logging
from pathlib import Path

import httpx
import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ImageFetchError, InputFileError
from .types import CostMatrix, Histogram, RGBImage, TransportPlan

logger = logging.getLogger(__name__)

CSV_FORMAT = "%.17g"


def _load(path: Path, ndmin: int) -> np.ndarray:
    try:
        return np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=ndmin)
    except (OSError, ValueError) as exc:
        raise InputFileError(f"Cannot read {path}: {exc}", details={"path": str(path)}) from exc


def read_vector(path: str | Path) -> np.ndarray:
    """One value per line or one comma-separated line."""
    values = _load(Path(path), 2)
    if min(values.shape) != 1:
        raise InputFileError(f"{path} holds a {values.shape} matrix, expected a vector.")
    return values.ravel()


def read_matrix(path: str | Path) -> np.ndarray:
    return _load(Path(path), 2)


def read_histogram(path: str | Path) -> Histogram:
    return Histogram(weights=read_vector(path))


def read_cost(path: str | Path) -> CostMatrix:
    return CostMatrix(entries=read_matrix(path))


def write_matrix(path: str | Path, values: np.ndarray | TransportPlan) -> None:
    """Write with 17 significant digits so a re-read is bit-exact."""
    data = values.entries if isinstance(values, TransportPlan) else np.atleast_2d(values)
    try:
        np.savetxt(path, data, delimiter=",", fmt=CSV_FORMAT)
    except OSError as exc:
        raise InputFileError(f"Cannot write {path}: {exc}") from exc


def read_groups(path: str | Path) -> tuple[tuple[int, ...], ...]:
    """Row groups, one group per non-empty line of whitespace-separated row indices."""
    try:
        lines = Path(path).read_text().splitlines()
        return tuple(tuple(int(tok) for tok in line.split()) for line in lines if line.strip())
    except (OSError, ValueError) as exc:
        raise InputFileError(f"Cannot read groups from {path}: {exc}") from exc


# ---------------------------------------------------------------------------
# Images
# ---------------------------------------------------------------------------


def is_url(source: str) -> bool:
    return source.startswith(("http://", "https://"))


def fetch_bytes(url: str, http: httpx.Client | None = None) -> bytes:
    owned = http is None
    client = http or httpx.Client(timeout=30.0, follow_redirects=True)
    try:
        res = client.request("GET", url)
    except httpx.HTTPError as exc:
        raise ImageFetchError(f"GET {url} failed: {exc}", details={"url": url}) from exc
    finally:
        if owned:
            client.close()
    if not res.is_success:
        raise ImageFetchError(
            f"GET {url} returned HTTP {res.status_code}.",
            details={"url": url, "status": res.status_code},
        )
    return res.content


def decode_image(data: bytes) -> RGBImage:
    """RGB in [0, 1]; an alpha plane, if any, is kept as raw 8-bit values."""
    try:
        img = Image.open(io.BytesIO(data))
        img.load()
    except (OSError, UnidentifiedImageError) as exc:
        raise InputFileError(f"Not a readable image: {exc}") from exc
    has_alpha = "A" in img.getbands() or "transparency" in img.info
    arr = np.asarray(img.convert("RGBA" if has_alpha else "RGB"), dtype=np.uint8)
    alpha = arr[..., 3].copy() if has_alpha else None
    return RGBImage(rgb=arr[..., :3] / 255.0, alpha=alpha)


def read_image(source: str | Path, http: httpx.Client | None = None) -> RGBImage:
    """Load a PNG from a local path or an http(s) URL."""
    source = str(source)
    if is_url(source):
        logger.info("fetching %s", source)
        return decode_image(fetch_bytes(source, http))
    try:
        data = Path(source).read_bytes()
    except OSError as exc:
        raise InputFileError(f"Cannot read {source}: {exc}", details={"path": source}) from exc
    return decode_image(data)


def encode_png(image: RGBImage) -> bytes:
    rgb8 = np.clip(np.rint(image.rgb * 255.0), 0, 255).astype(np.uint8)
    if image.alpha is not None:
        img = Image.fromarray(np.dstack([rgb8, image.alpha.astype(np.uint8)]))
    else:
        img = Image.fromarray(rgb8)
    buf = io.BytesIO()
    img.save(buf, format="PNG")
    return buf.getvalue()


def write_image(image: RGBImage, path: str | Path) -> None:
    try:
        Path(path).write_bytes(encode_png(image))
    except OSError as exc:
        raise InputFileError(f"Cannot write {path}: {exc}") from exc
