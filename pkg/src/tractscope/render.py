"""Binary PPM (P6) rendering of a sampled field and its contours."""

from __future__ import annotations

import numpy as np

from .field import ScalarField

WHITE = (255, 255, 255)
GRAY = (64, 64, 64)
BLACK = (0, 0, 0)


def raster(fld: ScalarField, contours=()) -> np.ndarray:
    """RGB image of shape (ny, nx, 3); row 0 is y_max."""
    w = fld.window
    img = np.empty((w.nx, w.ny, 3), dtype=np.uint8)
    img[...] = GRAY
    img[fld.positive()] = WHITE
    for c in contours:
        i, j, inside = w.nearest_index(c.points)
        img[i[inside], j[inside]] = BLACK
    return np.ascontiguousarray(img.transpose(1, 0, 2)[::-1])


def encode_ppm(img: np.ndarray) -> bytes:
    h, w, _ = img.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.astype(np.uint8).tobytes()


def write_ppm(path, fld: ScalarField, contours=()) -> None:
    data = encode_ppm(raster(fld, contours))
    with open(path, "wb") as fh:
        fh.write(data)
