"""Grayscale image I/O and restoration-quality metrics.

Images are 2-D float arrays with values in [0, 255] and are vectorised by
stacking columns, matching the blur operator's index convention.  Files move
as binary PGM (P5, maxval 255) with a plain CSV fallback.
"""

from __future__ import annotations

import math

import numpy as np

__all__ = [
    "image_to_vec",
    "vec_to_image",
    "psnr",
    "ssim",
    "error_norm",
    "read_pgm",
    "write_pgm",
    "read_csv_image",
    "write_csv_image",
]

PEAK = 255.0


def image_to_vec(img) -> np.ndarray:
    """Column-stack an image into a vector."""
    return np.asarray(img, dtype=np.float64).reshape(-1, order="F")


def vec_to_image(vec, rows: int, cols: int) -> np.ndarray:
    """Inverse of :func:`image_to_vec`."""
    return np.asarray(vec, dtype=np.float64).reshape((rows, cols), order="F")


def psnr(x_ref, x_k, m: int, n: int, peak: float = PEAK) -> float:
    """Peak signal-to-noise ratio in dB over an m x n image; inf on equality."""
    x_ref = np.asarray(x_ref, dtype=np.float64).ravel()
    x_k = np.asarray(x_k, dtype=np.float64).ravel()
    sse = float(np.sum((x_ref - x_k) ** 2))
    if sse == 0.0:
        return math.inf
    return 10.0 * math.log10(m * n * peak**2 / sse)


def ssim(x_ref, x_k, peak: float = PEAK) -> float:
    """Global structural similarity (one window over the whole image)."""
    a = np.asarray(x_ref, dtype=np.float64).ravel()
    b = np.asarray(x_k, dtype=np.float64).ravel()
    if a.shape != b.shape:
        raise ValueError("images must have equal size")
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2
    mu_a, mu_b = a.mean(), b.mean()
    var_a = float(np.mean((a - mu_a) ** 2))
    var_b = float(np.mean((b - mu_b) ** 2))
    cov = float(np.mean((a - mu_a) * (b - mu_b)))
    return ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )


def error_norm(x_ref, x_k) -> float:
    """Relative error norm ||x_ref - x_k|| / ||x_ref||."""
    x_ref = np.asarray(x_ref, dtype=np.float64).ravel()
    x_k = np.asarray(x_k, dtype=np.float64).ravel()
    num = float(np.linalg.norm(x_ref - x_k))
    den = float(np.linalg.norm(x_ref))
    if den == 0.0:
        return 0.0 if num == 0.0 else math.inf
    return num / den


def write_pgm(path, img) -> None:
    """Write a binary PGM (P5, maxval 255); values are clipped and rounded."""
    a = np.asarray(img, dtype=np.float64)
    if a.ndim != 2:
        raise ValueError("expected a 2-D image")
    raster = np.clip(np.rint(a), 0, 255).astype(np.uint8)
    h, w = raster.shape
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n255\n".encode("ascii"))
        fh.write(raster.tobytes())


def read_pgm(path) -> np.ndarray:
    """Read a binary PGM (P5) with maxval 255 into a float image."""
    with open(path, "rb") as fh:
        data = fh.read()
    pos = 0

    def token():
        nonlocal pos
        while pos < len(data):
            if data[pos:pos + 1].isspace():
                pos += 1
            elif data[pos:pos + 1] == b"#":
                while pos < len(data) and data[pos] != 0x0A:
                    pos += 1
            else:
                break
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        if start == pos:
            raise ValueError(f"{path}: truncated PGM header")
        return data[start:pos]

    if token() != b"P5":
        raise ValueError(f"{path}: not a binary PGM (P5) file")
    w, h, maxval = int(token()), int(token()), int(token())
    if maxval != 255:
        raise ValueError(f"{path}: only maxval 255 is supported, got {maxval}")
    pos += 1  # single whitespace byte before the raster
    if len(data) - pos < w * h:
        raise ValueError(f"{path}: raster is shorter than {w}x{h}")
    raster = np.frombuffer(data, dtype=np.uint8, count=w * h, offset=pos)
    return raster.reshape(h, w).astype(np.float64)


def write_csv_image(path, img) -> None:
    np.savetxt(path, np.asarray(img, dtype=np.float64), delimiter=",", fmt="%.17g")


def read_csv_image(path) -> np.ndarray:
    img = np.loadtxt(path, delimiter=",", dtype=np.float64)
    if img.ndim != 2:
        raise ValueError(f"{path}: expected a 2-D CSV image")
    return img
