import math

import numpy as np
import pytest

from kaczmarz2d import (
    error_norm,
    image_to_vec,
    phantom,
    psnr,
    read_pgm,
    ssim,
    vec_to_image,
    write_pgm,
)
from kaczmarz2d.images import read_csv_image, write_csv_image


def test_vectorisation_is_column_stacked():
    img = np.arange(6.0).reshape(2, 3)
    v = image_to_vec(img)
    # entry (row, col) lands at col*rows + row
    assert v[0] == img[0, 0] and v[1] == img[1, 0] and v[2] == img[0, 1]
    np.testing.assert_array_equal(vec_to_image(v, 2, 3), img)


def test_psnr_formula_oracle():
    rng = np.random.default_rng(0)
    m = n = 16
    x = rng.random(m * n) * 255
    y = x + rng.standard_normal(m * n)
    want = 10 * math.log10(m * n * 255.0**2 / np.sum((x - y) ** 2))
    assert psnr(x, y, m, n) == pytest.approx(want, rel=1e-12)
    # uniform per-pixel offset of 255/sqrt(mn) gives SSE 255^2
    y2 = x + 255.0 / math.sqrt(m * n)
    assert psnr(x, y2, m, n) == pytest.approx(10 * math.log10(m * n), rel=1e-12)


def test_identical_images_metrics():
    x = phantom(16).ravel()
    assert psnr(x, x, 16, 16) == math.inf
    assert ssim(x, x) == pytest.approx(1.0)
    assert error_norm(x, x) == 0.0


def test_ssim_symmetric_and_bounded():
    rng = np.random.default_rng(1)
    a = rng.random(64) * 255
    b = rng.random(64) * 255
    assert ssim(a, b) == pytest.approx(ssim(b, a), rel=1e-14)
    assert ssim(a, b) < 1.0


def test_error_norm():
    a = np.array([3.0, 4.0])
    assert error_norm(a, np.zeros(2)) == pytest.approx(1.0)


def test_pgm_round_trip(tmp_path):
    img = phantom(24)
    p = tmp_path / "img.pgm"
    write_pgm(p, img)
    back = read_pgm(p)
    np.testing.assert_array_equal(back, np.clip(np.rint(img), 0, 255))


def test_pgm_rejects_other_formats(tmp_path):
    p = tmp_path / "bad.pgm"
    p.write_bytes(b"P2\n2 2\n255\n0 0 0 0\n")
    with pytest.raises(ValueError, match="P5"):
        read_pgm(p)
    p.write_bytes(b"P5\n2 2\n65535\n" + bytes(8))
    with pytest.raises(ValueError, match="maxval"):
        read_pgm(p)
    p.write_bytes(b"P5\n4 4\n255\n" + bytes(3))
    with pytest.raises(ValueError, match="shorter"):
        read_pgm(p)


def test_pgm_header_comments(tmp_path):
    p = tmp_path / "c.pgm"
    p.write_bytes(b"P5\n# a comment\n2 1\n255\n\x01\x02")
    np.testing.assert_array_equal(read_pgm(p), [[1.0, 2.0]])


def test_csv_image_round_trip(tmp_path):
    img = phantom(12)
    p = tmp_path / "img.csv"
    write_csv_image(p, img)
    np.testing.assert_allclose(read_csv_image(p), img, rtol=0, atol=0)
