import numpy as np

from tractscope.expr import parse
from tractscope.field import ScalarField, Window, extract_contours, sample_field
from tractscope.render import GRAY, WHITE, encode_ppm, raster, write_ppm


def test_constant_field_golden(tmp_path):
    fld = ScalarField.from_function(lambda z: np.ones(z.shape), Window(0, 1, 0, 1, 3, 2))
    path = tmp_path / "c.ppm"
    write_ppm(path, fld, extract_contours(fld))
    data = path.read_bytes()
    assert data == b"P6\n3 2\n255\n" + b"\xff" * 18
    assert len(data) == 11 + 3 * 3 * 2


def test_orientation_row0_is_top():
    fld = ScalarField.from_function(lambda z: z.imag, Window(0, 1, -1, 1, 4, 5))
    img = raster(fld)
    assert img.shape == (5, 4, 3)
    assert tuple(img[0, 0]) == WHITE and tuple(img[-1, 0]) == GRAY


def test_contour_pixels_black():
    fld = sample_field(parse("2*exp(z^4)"), Window(-3, 3, -3, 3, 121, 121))
    img = raster(fld, extract_contours(fld))
    colours = {tuple(c) for c in img.reshape(-1, 3)}
    assert colours == {(0, 0, 0), WHITE, GRAY}


def test_quartic_four_fold_symmetry():
    fld = sample_field(parse("2*exp(z^4)"), Window(-3, 3, -3, 3, 601, 601))
    img = raster(fld)
    white = (img == 255).all(axis=2)
    assert np.array_equal(white, np.rot90(white))
    assert white[300, 0] and white[0, 300] and not white[0, 0]


def test_header_format():
    img = np.zeros((7, 11, 3), np.uint8)
    assert encode_ppm(img).startswith(b"P6\n11 7\n255\n")
