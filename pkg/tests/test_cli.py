from __future__ import annotations

import csv
import subprocess
import sys

import numpy as np
import pytest

from fdl.cli import main
from fdl.config import RunConfig
from fdl.experiments.images import natural_image, texture_image
from fdl.io import read_ftns, read_image, write_image


@pytest.fixture
def images(tmp_path):
    paths = {}
    for name, img in {
        "gray": natural_image(32, 1, 0),
        "gray2": natural_image(32, 1, 4),
        "rgb": natural_image(32, 3, 0),
        "tex": texture_image(32, 3, 1),
        "wide": np.zeros((1, 32, 64)),
    }.items():
        paths[name] = tmp_path / f"{name}.{'pgm' if img.shape[0] == 1 else 'ppm'}"
        write_image(paths[name], img)
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"not an image")
    paths["bad"] = bad
    return {k: str(v) for k, v in paths.items()}


def rows(path):
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.reader(f))


TOY = ["toy1d", "--epochs", "3", "--pairs", "8", "--length", "32"]


class TestToy1d:
    def test_outputs(self, tmp_path):
        out = tmp_path / "run"
        assert main(TOY + ["--loss", "freq", "--misalign", "8", "--seed", "1", "--out", str(out)]) == 0
        table = rows(out / "report.csv")
        assert table[0] == ["loss_kind", "aligned", "epoch", "train_loss", "final_test_mse", "seconds"]
        assert len(table) == 4
        assert table[1][:3] == ["freq", "false", "0"]
        assert float(table[1][3]) > 0 and float(table[1][4]) > 0
        assert read_ftns(out / "pred_000.ftns").shape == (1, 32)
        cfg = RunConfig.read(out / "config.txt")
        assert cfg.command == "toy1d" and cfg.seed == 1 and cfg.misalign == 8

    def test_reruns_byte_identical(self, tmp_path):
        for d in ("a", "b"):
            assert main(TOY + ["--seed", "4", "--out", str(tmp_path / d)]) == 0
        for name in ("report.csv", "pred_000.ftns", "pred_031.ftns"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
        # the configs differ only in the recorded output directory
        a, b = ((tmp_path / d / "config.txt").read_text().splitlines() for d in "ab")
        assert [x for x in a if not x.startswith("out=")] == [x for x in b if not x.startswith("out=")]

    def test_record_time(self, tmp_path):
        assert main(TOY + ["--seed", "0", "--record-time", "--out", str(tmp_path)]) == 0
        assert float(rows(tmp_path / "report.csv")[1][5]) >= 0


@pytest.mark.parametrize(
    "argv",
    [
        ["toy1d", "--loss", "bogus", "--seed", "1"],
        ["toy1d", "--loss", "mse"],
        ["shift-curve", "--seed", "0"],
        ["shift-curve", "--seed", "0", "--image", "x.pgm", "--kinds", "mse,l1"],
        ["loss", "--seed", "0", "--a", "x.pgm"],
        ["loss", "--seed", "x", "--a", "x.pgm", "--b", "y.pgm"],
        ["style", "--content", "a.ppm", "--style", "b.ppm"],
        ["mix", "--amp", "a.pgm"],
        ["mix", "--amp", "a.pgm", "--phase", "a.pgm", "--threads", "0"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_2(argv, capsys):
    assert main(argv) == 2
    assert capsys.readouterr().err


class TestRuntimeErrors:
    def test_missing_image(self, tmp_path, capsys):
        assert main(["loss", "--seed", "0", "--a", str(tmp_path / "nope.pgm"), "--b", str(tmp_path / "nope.pgm")]) == 1
        assert "nope.pgm" in capsys.readouterr().err

    def test_invalid_image(self, images, capsys):
        assert main(["mix", "--amp", images["bad"], "--phase", images["gray"], "--out", "."]) == 1
        assert "bad.pgm" in capsys.readouterr().err

    @pytest.mark.parametrize("command", ["loss", "mix"])
    def test_shape_mismatch_names_shapes(self, images, tmp_path, capsys, command):
        if command == "loss":
            argv = ["loss", "--seed", "0", "--a", images["gray"], "--b", images["wide"]]
        else:
            argv = ["mix", "--amp", images["gray"], "--phase", images["wide"], "--out", str(tmp_path)]
        assert main(argv) == 1
        err = capsys.readouterr().err
        assert "(1, 32, 32)" in err and "(1, 32, 64)" in err

    def test_style_channel_mismatch(self, images, tmp_path, capsys):
        argv = ["style", "--seed", "0", "--content", images["gray"], "--style", images["tex"], "--out", str(tmp_path)]
        assert main(argv) == 1
        assert "(1, 32, 32)" in capsys.readouterr().err

    def test_undersized_pyramid(self, images, capsys):
        assert main(["loss", "--seed", "0", "--extractor", "pyramid", "--a", images["gray"], "--b", images["gray"],
                     "--channels", "4,4,4,4,4,4,4", "--depth", "7"]) == 1
        assert capsys.readouterr().err


class TestLoss:
    @pytest.mark.parametrize("kind", ["fdl", "style", "content", "spatial", "mse"])
    def test_identical_inputs_print_zero(self, images, capsys, kind):
        assert main(["loss", "--seed", "0", "--kind", kind, "--a", images["rgb"], "--b", images["rgb"]]) == 0
        assert float(capsys.readouterr().out) <= 1e-12

    def test_fdl_prints_decimal_literal(self, images, capsys):
        assert main(["loss", "--seed", "3", "--a", images["gray"], "--b", images["gray2"]]) == 0
        text = capsys.readouterr().out.strip()
        assert float(text) > 0 and repr(float(text)) == repr(float(format(float(text), ".17g")))

    def test_threads_do_not_change_value(self, images, capsys):
        values = []
        for threads in ("1", "3"):
            main(["loss", "--seed", "2", "--extractor", "pyramid", "--depth", "2", "--threads", threads,
                  "--a", images["rgb"], "--b", images["tex"]])
            values.append(capsys.readouterr().out)
        assert values[0] == values[1]

    def test_external_features(self, tmp_path, rng, capsys):
        from fdl.io import write_ftns

        a, b = tmp_path / "a.ftns", tmp_path / "b.ftns"
        layer = rng.random((4, 8, 8))
        write_ftns(a, layer)
        write_ftns(b, layer)
        argv = ["loss", "--seed", "0", "--extractor", "external", "--a-features", str(a), "--b-features", str(b)]
        assert main(argv) == 0
        assert float(capsys.readouterr().out) == 0.0

    def test_inputs_not_mutated(self, images):
        before = open(images["rgb"], "rb").read()
        main(["loss", "--seed", "0", "--a", images["rgb"], "--b", images["tex"]])
        assert open(images["rgb"], "rb").read() == before


class TestShiftCurve:
    def test_rows_per_kind(self, images, tmp_path):
        argv = ["shift-curve", "--seed", "0", "--image", images["gray"], "--max", "8", "--projections", "16",
                "--out", str(tmp_path)]
        assert main(argv) == 0
        table = rows(tmp_path / "curve.csv")
        assert table[0] == ["loss_kind", "shift", "value", "normalized"]
        kinds = [r[0] for r in table[1:]]
        assert {k: kinds.count(k) for k in set(kinds)} == {"mse": 9, "fdl": 9, "fdl_amplitude": 9}
        assert (tmp_path / "config.txt").exists()


class TestMix:
    @pytest.mark.parametrize("name", ["gray", "rgb"])
    def test_self_mix(self, images, tmp_path, name):
        assert main(["mix", "--amp", images[name], "--phase", images[name], "--out", str(tmp_path)]) == 0
        suffix = "pgm" if name == "gray" else "ppm"
        np.testing.assert_allclose(read_image(tmp_path / f"mixed.{suffix}"), read_image(images[name]), atol=1 / 255 + 1e-12)
        assert (tmp_path / "config.txt").exists()


class TestStyle:
    def test_outputs(self, images, tmp_path):
        argv = ["style", "--seed", "0", "--content", images["rgb"], "--style", images["tex"], "--steps", "3",
                "--extractor", "pyramid", "--depth", "2", "--projections", "8", "--out", str(tmp_path)]
        assert main(argv) == 0
        assert read_image(tmp_path / "stylized.ppm").shape == (3, 32, 32)
        table = rows(tmp_path / "trace.csv")
        assert table[0] == ["step", "objective", "content", "style"] and len(table) == 4

    def test_style_is_resized(self, tmp_path):
        write_image(tmp_path / "c.pgm", natural_image(32, 1, 0))
        write_image(tmp_path / "s.pgm", natural_image(64, 1, 1))
        argv = ["style", "--seed", "0", "--content", str(tmp_path / "c.pgm"), "--style", str(tmp_path / "s.pgm"),
                "--steps", "1", "--projections", "4", "--out", str(tmp_path / "o")]
        assert main(argv) == 0
        assert read_image(tmp_path / "o" / "stylized.pgm").shape == (1, 32, 32)


def test_module_entry_point(images):
    proc = subprocess.run(
        [sys.executable, "-m", "fdl", "loss", "--seed", "0", "--a", images["gray"], "--b", images["gray"]],
        capture_output=True, text=True, check=False,
    )
    assert proc.returncode == 0 and proc.stdout.strip() == "0"


def test_help_exits_zero(capsys):
    assert main(["--help"]) == 0
    assert "toy1d" in capsys.readouterr().out
