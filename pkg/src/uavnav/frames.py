"""Schematic frame rendering for remote-planner mode.

The simulator has no rasterizer; when a remote model needs an image we send a
flat schematic: dark background, filled rectangles for every entity's image
box (targets light, obstacles dark red), and a center crosshair.  Encoding is
a dependency-free PNG writer (8-bit RGB, no filtering).
"""

from __future__ import annotations

import struct
import zlib

import numpy as np

from .planner import Observation

BACKGROUND = (24, 28, 34)
TARGET_COLOR = (90, 200, 120)
OBSTACLE_COLOR = (200, 80, 70)
CROSSHAIR = (70, 80, 95)


def encode_png(rgb: np.ndarray) -> bytes:
    """Encode an (H, W, 3) uint8 array as a PNG byte string."""
    if rgb.ndim != 3 or rgb.shape[2] != 3 or rgb.dtype != np.uint8:
        raise ValueError("expected (H, W, 3) uint8 array")
    height, width = rgb.shape[:2]

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + tag + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

    raw = b"".join(b"\x00" + rgb[row].tobytes() for row in range(height))
    return b"".join([
        b"\x89PNG\r\n\x1a\n",
        chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)),
        chunk(b"IDAT", zlib.compress(raw, 6)),
        chunk(b"IEND", b""),
    ])


def schematic_frame(obs: Observation) -> bytes:
    """Render the observation's entity boxes into an encoded schematic PNG."""
    cam = obs.camera
    img = np.empty((cam.height, cam.width, 3), dtype=np.uint8)
    img[:, :] = BACKGROUND
    img[cam.height // 2, :] = CROSSHAIR
    img[:, cam.width // 2] = CROSSHAIR
    for ev in obs.entity_views:
        if ev.box is None:
            continue
        color = TARGET_COLOR if ev.kind == "target" else OBSTACLE_COLOR
        x1 = max(0, min(cam.width - 1, int(ev.box.x1)))
        x2 = max(0, min(cam.width, int(ev.box.x2)))
        y1 = max(0, min(cam.height - 1, int(ev.box.y1)))
        y2 = max(0, min(cam.height, int(ev.box.y2)))
        if x2 > x1 and y2 > y1:
            img[y1:y2, x1:x2] = color
    return encode_png(img)
