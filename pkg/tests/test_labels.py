import numpy as np
import pytest

from rohan.core import BBox
from rohan.errors import LabelFormatError
from rohan.labels import (format_box, format_labels, format_number, parse_labels,
                          read_labels, read_video_labels, write_labels)


def test_number_format_has_six_significant_digits():
    assert format_number(0.5) == "0.500000"
    assert format_number(1.0) == "1.00000"
    assert format_number(0.123456789) == "0.123457"
    assert format_number(1e-5) == "0.0000100000"
    assert "e" not in format_number(3.2e-7)


def test_line_layout():
    assert format_box(BBox(0.5, 0.25, 0.1, 0.2)) == "0 0.500000 0.250000 0.100000 0.200000"
    assert format_box(BBox(0.5, 0.25, 0.1, 0.2, conf=0.9)).endswith(" 0.900000")
    assert format_box(BBox(0.5, 0.25, 0.1, 0.2, conf=0.9), with_conf=False).count(" ") == 4
    assert format_labels([]) == ""


def test_parse_prediction_and_gt_lines():
    boxes = parse_labels("0 0.5 0.5 0.2 0.2\n\n0 0.1 0.1 0.05 0.05 0.75\n")
    assert boxes[0].conf is None
    assert boxes[1].conf == 0.75


@pytest.mark.parametrize("line", [
    "0 0.5 0.5 0.2",
    "0 0.5 0.5 0.2 0.2 0.3 0.1",
    "x 0.5 0.5 0.2 0.2",
    "0 0.5 0.5 0 0.2",
    "0 1.5 0.5 0.2 0.2",
    "0 0.5 0.5 0.2 nanx",
])
def test_malformed_lines_name_file_and_line(line):
    with pytest.raises(LabelFormatError) as err:
        parse_labels("0 0.5 0.5 0.2 0.2\n" + line + "\n", path="f.txt")
    assert err.value.line_no == 2
    assert "f.txt:2" in str(err.value)


def test_require_conf():
    with pytest.raises(LabelFormatError):
        parse_labels("0 0.5 0.5 0.2 0.2\n", require_conf=True)


def _random_boxes(rng, with_conf):
    out = []
    for _ in range(int(rng.integers(0, 8))):
        w, h = rng.uniform(1e-4, 1, 2)
        cx, cy = rng.uniform(w / 2, 1 - w / 2), rng.uniform(h / 2, 1 - h / 2)
        out.append(BBox(cx, cy, w, h, conf=float(rng.random()) if with_conf else None))
    return out


@pytest.mark.parametrize("with_conf", [False, True])
def test_write_parse_write_is_stable(tmp_path, with_conf):
    rng = np.random.default_rng(11)
    for k in range(200):
        p = tmp_path / f"{k}.txt"
        write_labels(p, _random_boxes(rng, with_conf))
        first = p.read_bytes()
        write_labels(p, read_labels(p))
        assert p.read_bytes() == first


def test_video_labels_missing_files(tmp_path):
    write_labels(tmp_path / "a.txt", [BBox(0.5, 0.5, 0.1, 0.1, conf=0.5)])
    frames = read_video_labels(tmp_path, ["a", "b"])
    assert [len(f) for f in frames] == [1, 0]
    assert [f.frame_idx for f in frames] == [0, 1]
    with pytest.raises(Exception):
        read_video_labels(tmp_path, ["a", "b"], missing_ok=False)
