import json

import numpy as np
import pytest

from fingercount import raster, synth
from fingercount.cli import main
from fingercount.pipeline import YELLOW, paint_mask, upscale


def write_gray(path, img):
    raster.write_pnm(path, img)
    return str(path)


@pytest.fixture
def hand_pair(tmp_path):
    """Background and frame files holding an upscaled 3-finger hand."""
    mask = upscale(synth.canonical_mask(3), 3)
    h, w = mask.shape
    canvas = np.zeros((h + 20, w + 20), bool)
    canvas[20:, 10:10 + w] = mask
    bg = write_gray(tmp_path / "bg.pgm", np.full(canvas.shape, 50, np.uint8))
    frame = write_gray(tmp_path / "frame.pgm", paint_mask(canvas, 50, 220))
    return bg, frame


def last_line(capsys):
    return capsys.readouterr().out.strip().splitlines()[-1]


class TestCount:
    def test_identical(self, tmp_path, capsys):
        img = np.random.default_rng(0).integers(40, 61, (30, 40)).astype(np.uint8)
        p = write_gray(tmp_path / "a.pgm", img)
        assert main(["count", "--bg", p, "--frame", p]) == 0
        assert last_line(capsys) == "count=0 orientation_deg=0.0"

    def test_identical_high_contrast_with_frame_blur(self, tmp_path, capsys):
        # only the background is blurred by default; blurring both makes any pair exact
        img = np.random.default_rng(0).integers(0, 256, (30, 40)).astype(np.uint8)
        p = write_gray(tmp_path / "a.pgm", img)
        assert main(["count", "--bg", p, "--frame", p, "--blur-frame"]) == 0
        assert last_line(capsys) == "count=0 orientation_deg=0.0"

    def test_three_fingers(self, hand_pair, capsys):
        bg, frame = hand_pair
        assert main(["count", "--bg", bg, "--frame", frame]) == 0
        assert last_line(capsys).startswith("count=3 orientation_deg=")

    def test_json_matches_text(self, hand_pair, capsys):
        bg, frame = hand_pair
        main(["count", "--bg", bg, "--frame", frame])
        text = last_line(capsys)
        main(["count", "--bg", bg, "--frame", frame, "--json"])
        data = json.loads(last_line(capsys))
        assert f"count={data['count']} " in text + " "
        assert sum(leaf["verdict"] == "finger" for leaf in data["leaves"]) == data["count"]
        assert all(leaf["area"] > 0 for leaf in data["leaves"])

    def test_missing_file(self, tmp_path):
        assert main(["count", "--bg", str(tmp_path / "no.pgm"),
                     "--frame", str(tmp_path / "no.pgm")]) == 2

    def test_dimension_mismatch(self, tmp_path):
        a = write_gray(tmp_path / "a.pgm", np.zeros((20, 20), np.uint8))
        b = write_gray(tmp_path / "b.pgm", np.zeros((20, 21), np.uint8))
        assert main(["count", "--bg", a, "--frame", b]) == 1

    def test_needs_inputs(self):
        assert main(["count"]) == 2

    def test_mask_mode(self, tmp_path, capsys):
        out = tmp_path / "five.pbm"
        assert main(["synth", "--count", "5", "--orientation", "0", "--out", str(out)]) == 0
        assert main(["count", "--mask", str(out)]) == 0
        assert last_line(capsys).startswith("count=5 ")

    def test_bad_scan_flag(self, tmp_path):
        p = write_gray(tmp_path / "a.pgm", np.zeros((9, 9), np.uint8))
        assert main(["count", "--bg", p, "--frame", p, "--min-white-run", "0"]) == 2

    def test_unknown_flag_exits_2(self):
        with pytest.raises(SystemExit) as info:
            main(["count", "--nope"])
        assert info.value.code == 2


class TestAnnotate:
    def test_two_bars(self, tmp_path, capsys):
        img = np.zeros((14, 12), bool)
        img[:, :4] = True
        img[:, 8:] = True
        mask = tmp_path / "bars.pbm"
        raster.write_pnm(mask, img)
        out = tmp_path / "out.ppm"
        assert main(["annotate", "--mask", str(mask), "--out", str(out)]) == 0
        rgb = raster.read_pnm(out)
        assert rgb.shape == (14, 12, 3)
        assert np.all(rgb == np.array(YELLOW, np.uint8), axis=-1).any()
        assert last_line(capsys).startswith("count=2 ")

    def test_empty(self, tmp_path):
        mask = tmp_path / "empty.pbm"
        raster.write_pnm(mask, np.zeros((8, 8), bool))
        out = tmp_path / "out.ppm"
        assert main(["annotate", "--mask", str(mask), "--out", str(out)]) == 0
        assert not raster.read_pnm(out).any()

    def test_bad_out(self, tmp_path):
        mask = tmp_path / "m.pbm"
        raster.write_pnm(mask, np.ones((8, 8), bool))
        bad = tmp_path / "missing_dir" / "out.ppm"
        assert main(["annotate", "--mask", str(mask), "--out", str(bad)]) == 2


class TestSynth:
    def test_count_too_large(self, tmp_path):
        assert main(["synth", "--count", "11", "--out", str(tmp_path / "x.pbm")]) == 2

    def test_deterministic(self, tmp_path):
        args = ["synth", "--count", "7", "--orientation", "15", "--seed", "3", "--noise", "0.002"]
        main(args + ["--out", str(tmp_path / "a.pbm")])
        main(args + ["--out", str(tmp_path / "b.pbm")])
        assert (tmp_path / "a.pbm").read_bytes() == (tmp_path / "b.pbm").read_bytes()

    def test_random_geometry(self, tmp_path, capsys):
        out = tmp_path / "r.pbm"
        assert main(["synth", "--count", "4", "--random", "--seed", "8", "--out", str(out)]) == 0
        main(["count", "--mask", str(out)])
        assert last_line(capsys).startswith("count=4 ")

    def test_bad_noise(self, tmp_path):
        assert main(["synth", "--count", "2", "--noise", "0.5", "--out", str(tmp_path / "x")]) == 2


class TestCorpus:
    def test_writes_manifest(self, tmp_path):
        out = tmp_path / "c"
        assert main(["corpus", "--n", "10", "--seed", "1", "--counts", "1", "--out", str(out)]) == 0
        rows = synth.read_manifest(out / "manifest.csv")
        assert len(rows) == 10 and {r["expected_count"] for r in rows} == {1}

    @pytest.mark.parametrize("counts", ["0-3", "x", "11"])
    def test_bad_counts(self, tmp_path, counts):
        assert main(["corpus", "--n", "3", "--counts", counts, "--out", str(tmp_path)]) == 2


class TestEval:
    def _manifest(self, tmp_path, wrong):
        rows = []
        for i in range(10):
            count = i % 5 + 1
            name = f"m{i}.pbm"
            raster.write_pnm(tmp_path / name, synth.canonical_mask(count))
            label = count + 1 if i in wrong else count
            rows.append({"path": name, "expected_count": label, "orientation_deg": 0.0,
                         "noise_density": 0.0, "seed": i})
        synth.write_manifest(tmp_path / "manifest.csv", rows)
        return rows

    def test_accuracy_with_injected_failures(self, tmp_path, capsys):
        wrong = {1, 6, 7}
        rows = self._manifest(tmp_path, wrong)
        assert main(["eval", "--manifest", str(tmp_path / "manifest.csv"), "--csv"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert lines[0] == "count,files,correct,accuracy"
        table = {ln.split(",")[0]: ln.split(",")[1:] for ln in lines[1:]}
        # hand-computed from the labels
        for label in {r["expected_count"] for r in rows}:
            files = [i for i, r in enumerate(rows) if r["expected_count"] == label]
            good = [i for i in files if i not in wrong]
            acc = 100.0 * len(good) / len(files)
            assert table[str(label)] == [str(len(files)), str(len(good)), f"{acc:.2f}"]
        assert table["all"] == ["10", "7", "70.00"]

    def test_table_layout(self, tmp_path, capsys):
        self._manifest(tmp_path, set())
        assert main(["eval", "--manifest", str(tmp_path / "manifest.csv")]) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert out[0].split() == ["count", "files", "correct", "accuracy"]
        assert out[1].split() == ["1", "2", "2", "100.00"]
        assert out[-1].split() == ["all", "10", "10", "100.00"]

    def test_missing_file(self, tmp_path, capsys):
        self._manifest(tmp_path, set())
        (tmp_path / "m3.pbm").unlink()
        assert main(["eval", "--manifest", str(tmp_path / "manifest.csv")]) == 1
        assert "m3.pbm" in capsys.readouterr().err

    def test_missing_manifest(self, tmp_path):
        assert main(["eval", "--manifest", str(tmp_path / "nope.csv")]) == 1


class TestBench:
    def test_one_iteration(self, capsys):
        assert main(["bench", "--synthetic", "--iters", "1"]) == 0
        lines = capsys.readouterr().out.strip().splitlines()
        assert [ln.split()[0] for ln in lines[1:]] == ["blur", "subtract", "denoise",
                                                        "downsample", "segment"]

    def test_zero_iterations(self):
        assert main(["bench", "--synthetic", "--iters", "0"]) == 2

    def test_needs_frames(self):
        assert main(["bench", "--iters", "1"]) == 2

    def test_frames_from_files(self, hand_pair, capsys):
        bg, frame = hand_pair
        assert main(["bench", "--bg", bg, "--frame", frame, "--iters", "2"]) == 0
        assert len(capsys.readouterr().out.strip().splitlines()) == 6
