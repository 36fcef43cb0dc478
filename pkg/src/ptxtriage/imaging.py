"""Grayscale image type, PGM I/O, and the geometric primitives used everywhere.

Images are immutable-by-convention wrappers around a 2-D float64 array with
intensities in [0, 1]. All functions return new images; nothing mutates its
input, so values are safe to share across threads.
"""

from __future__ import annotations

import io
import re
from dataclasses import dataclass

import numpy as np


class MalformedHeader(ValueError):
    """PGM header is not parseable (bad magic, non-numeric fields)."""


class TruncatedData(ValueError):
    """PGM payload is shorter than width*height samples."""


class UnsupportedMaxval(ValueError):
    """PGM maxval outside the supported set {255, 65535}."""


class OutOfBounds(ValueError):
    """A rectangle exceeds the image extents."""


class ImageLoadError(ValueError):
    """An image file could not be decoded by any supported loader."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left inclusive, w/h >= 1."""

    x0: int
    y0: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"rect must have positive extent, got {self.w}x{self.h}")

    @property
    def x1(self) -> int:
        return self.x0 + self.w

    @property
    def y1(self) -> int:
        return self.y0 + self.h

    @property
    def center_x(self) -> float:
        return self.x0 + self.w / 2.0

    @property
    def center_y(self) -> float:
        return self.y0 + self.h / 2.0

    def inside(self, width: int, height: int) -> bool:
        return self.x0 >= 0 and self.y0 >= 0 and self.x1 <= width and self.y1 <= height

    def clamped(self, width: int, height: int) -> "Rect":
        """Intersect with the image bounds (must stay non-degenerate)."""
        x0 = max(0, self.x0)
        y0 = max(0, self.y0)
        x1 = min(width, self.x1)
        y1 = min(height, self.y1)
        if x1 <= x0 or y1 <= y0:
            raise OutOfBounds(f"{self} does not intersect a {width}x{height} image")
        return Rect(x0, y0, x1 - x0, y1 - y0)

    def union(self, other: "Rect") -> "Rect":
        x0 = min(self.x0, other.x0)
        y0 = min(self.y0, other.y0)
        x1 = max(self.x1, other.x1)
        y1 = max(self.y1, other.y1)
        return Rect(x0, y0, x1 - x0, y1 - y0)

    def to_json(self) -> list[int]:
        return [self.x0, self.y0, self.w, self.h]

    @classmethod
    def from_json(cls, v) -> "Rect":
        return cls(int(v[0]), int(v[1]), int(v[2]), int(v[3]))


@dataclass(frozen=True)
class ImageGray:
    """2-D grayscale raster, row-major, intensities in [0, 1]."""

    pixels: np.ndarray  # shape (height, width), float64

    def __post_init__(self):
        a = self.pixels
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise ValueError(f"expected a 2-D non-empty array, got shape {a.shape}")
        if a.dtype != np.float64:
            object.__setattr__(self, "pixels", a.astype(np.float64))
            a = self.pixels
        lo, hi = float(a.min()), float(a.max())
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo < 0.0 or hi > 1.0:
            raise ValueError(f"intensities must lie in [0,1], got [{lo}, {hi}]")

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(height, width), numpy convention."""
        return self.pixels.shape

    @classmethod
    def from_array(cls, a) -> "ImageGray":
        return cls(np.asarray(a, dtype=np.float64))


_TOKEN = re.compile(rb"\S+")


def _header_tokens(data: bytes, count: int) -> tuple[list[bytes], int]:
    """Collect `count` whitespace-separated header tokens, skipping # comments.

    Returns the tokens and the byte offset one past the single whitespace
    character terminating the last token (start of the pixel payload).
    """
    tokens: list[bytes] = []
    pos = 0
    while len(tokens) < count:
        if pos >= len(data):
            raise MalformedHeader("unexpected end of header")
        c = data[pos : pos + 1]
        if c.isspace():
            pos += 1
            continue
        if c == b"#":
            eol = data.find(b"\n", pos)
            if eol < 0:
                raise MalformedHeader("unterminated comment in header")
            pos = eol + 1
            continue
        m = _TOKEN.match(data, pos)
        tokens.append(m.group())
        pos = m.end()
    # exactly one whitespace byte separates the header from the payload
    if pos >= len(data) or not data[pos : pos + 1].isspace():
        raise MalformedHeader("missing whitespace after maxval")
    return tokens, pos + 1


def load_pgm(data: bytes) -> ImageGray:
    """Decode a binary PGM (magic P5, maxval 255 or 65535) into an ImageGray.

    16-bit samples are big-endian per the PGM convention; intensities are
    scaled by 1/maxval. Header comment lines are skipped. Trailing bytes
    after the payload are ignored.
    """
    if not data.startswith(b"P5") or not (data[2:3].isspace() or data[2:3] == b"#"):
        raise MalformedHeader("not a binary PGM (magic P5)")
    tokens, payload_start = _header_tokens(data[2:], 3)
    payload_start += 2
    try:
        width, height, maxval = (int(t) for t in tokens)
    except ValueError:
        raise MalformedHeader(f"non-numeric header fields: {tokens!r}") from None
    if width < 1 or height < 1:
        raise MalformedHeader(f"bad dimensions {width}x{height}")
    if maxval not in (255, 65535):
        raise UnsupportedMaxval(f"maxval {maxval} not in {{255, 65535}}")
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    need = width * height * dtype.itemsize
    payload = data[payload_start : payload_start + need]
    if len(payload) < need:
        raise TruncatedData(f"need {need} payload bytes, got {len(payload)}")
    raw = np.frombuffer(payload, dtype=dtype).reshape(height, width)
    return ImageGray(raw.astype(np.float64) / maxval)


def save_pgm(img: ImageGray, maxval: int = 255) -> bytes:
    """Encode as binary PGM. Round-trips 8-bit loads exactly."""
    if maxval not in (255, 65535):
        raise UnsupportedMaxval(f"maxval {maxval} not in {{255, 65535}}")
    dtype = np.dtype(">u2") if maxval == 65535 else np.dtype("u1")
    quantized = np.rint(img.pixels * maxval).astype(dtype)
    buf = io.BytesIO()
    buf.write(f"P5\n{img.width} {img.height}\n{maxval}\n".encode("ascii"))
    buf.write(quantized.tobytes())
    return buf.getvalue()


def load_image(data: bytes) -> ImageGray:
    """Decode PGM or PNG bytes; PNG goes through Pillow as 8-bit grayscale."""
    if data.startswith(b"P5"):
        return load_pgm(data)
    if data.startswith(b"\x89PNG\r\n\x1a\n"):
        from PIL import Image

        with Image.open(io.BytesIO(data)) as im:
            gray = np.asarray(im.convert("L"), dtype=np.float64)
        return ImageGray(gray / 255.0)
    raise ImageLoadError("unrecognized image format (expected PGM P5 or PNG)")


def crop(img: ImageGray, r: Rect) -> ImageGray:
    """Extract the sub-image covered by `r` (must lie inside the image)."""
    if not r.inside(img.width, img.height):
        raise OutOfBounds(f"{r} exceeds {img.width}x{img.height} image")
    return ImageGray(img.pixels[r.y0 : r.y1, r.x0 : r.x1].copy())


def resize_bilinear(img: ImageGray, w: int, h: int) -> ImageGray:
    """Bilinear resample with pixel-center mapping.

    Source coordinate for destination index d along an axis is
    (d + 0.5) * (src / dst) - 0.5, clamped to [0, src - 1]. Outputs are a
    convex combination of inputs, so intensities stay in [0, 1].
    """
    if w < 1 or h < 1:
        raise ValueError(f"target size must be positive, got {w}x{h}")
    src = img.pixels
    sh, sw = src.shape

    def axis_coords(dst: int, size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        pos = (np.arange(dst) + 0.5) * (size / dst) - 0.5
        pos = np.clip(pos, 0.0, size - 1.0)
        lo = np.floor(pos).astype(np.intp)
        hi = np.minimum(lo + 1, size - 1)
        frac = pos - lo
        return lo, hi, frac

    x_lo, x_hi, x_f = axis_coords(w, sw)
    y_lo, y_hi, y_f = axis_coords(h, sh)
    top = src[y_lo[:, None], x_lo] * (1 - x_f) + src[y_lo[:, None], x_hi] * x_f
    bot = src[y_hi[:, None], x_lo] * (1 - x_f) + src[y_hi[:, None], x_hi] * x_f
    out = top * (1 - y_f[:, None]) + bot * y_f[:, None]
    return ImageGray(np.clip(out, 0.0, 1.0))


def normalize_minmax(img: ImageGray) -> ImageGray:
    """Stretch intensities to span [0, 1]; constant images map to all zeros."""
    p = img.pixels
    lo, hi = float(p.min()), float(p.max())
    if hi == lo:
        return ImageGray(np.zeros_like(p))
    return ImageGray(np.clip((p - lo) / (hi - lo), 0.0, 1.0))
