import io
import subprocess
import sys

import numpy as np
import pytest

from lrr import cli, imageio

from conftest import DATA


@pytest.fixture
def image(tmp_path):
    img = imageio.read_image(DATA / "astronaut.pgm")[:64, :64]
    path = tmp_path / "in.pgm"
    imageio.write_image(img, path)
    return path


def run(argv):
    out = io.StringIO()
    code = cli.main(argv, out=out)
    return code, out.getvalue()


def test_verify_exits_zero():
    code, text = run(["verify"])
    assert code == 0
    assert "oracle suite: all passed" in text
    assert text.count("PASS") == 7


def test_deblur_writes_image_and_trace(image, tmp_path):
    before = image.read_bytes()
    out = tmp_path / "out.pgm"
    code, text = run(["deblur", "--kernel", "uniform9", "--sigma", "2", "--mode", "wnnm",
                      "--iters", "3", str(image), str(out)])
    assert code == 0, text
    assert out.exists() and (tmp_path / "out.csv").exists() and (tmp_path / "out.json").exists()
    assert "psnr_final=" in text
    assert image.read_bytes() == before
    report = (tmp_path / "out.txt").read_text()
    assert "solver.max_iters=3" in report and "kernel=uniform9" in report


@pytest.mark.parametrize("argv", [
    ["inpaint", "--missing", "0.3", "--iters", "2"],
    ["cs", "--ratio", "0.2", "--iters", "2", "--k", "20", "--window", "16"],
    ["deblur", "--kernel", "motion", "--iters", "2", "--mode", "nnm", "--threads", "2"],
])
def test_other_tasks(image, tmp_path, argv):
    code, text = run(argv + [str(image), str(tmp_path / "o.pgm")])
    assert code == 0, text
    assert len((tmp_path / "o.csv").read_text().splitlines()) == 3


def test_kernel_and_mask_files(image, tmp_path):
    kpath = tmp_path / "k.txt"
    imageio.write_kernel(np.ones((3, 3)) / 9, kpath)
    assert run(["deblur", "--kernel-file", str(kpath), "--iters", "1", str(image), str(tmp_path / "a.pgm")])[0] == 0
    mpath = tmp_path / "m.pgm"
    known = np.random.default_rng(0).uniform(size=(64, 64)) > 0.4
    imageio.write_image(known * 255.0, mpath)
    assert run(["inpaint", "--mask-file", str(mpath), "--iters", "1", str(image), str(tmp_path / "b.pgm")])[0] == 0


def test_truth_reference(image, tmp_path):
    code, text = run(["cs", "--iters", "1", "--truth", str(image), str(image), str(tmp_path / "c.pgm")])
    assert code == 0, text


def test_missing_input_names_path(tmp_path, capsys):
    missing = tmp_path / "absent.pgm"
    code, _ = run(["deblur", str(missing), str(tmp_path / "o.pgm")])
    assert code == 1
    assert str(missing) in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    [],
    ["deblur"],
    ["deblur", "--bogus", "a", "b"],
    ["deblur", "--kernel", "box", "a", "b"],
    ["sharpen", "a", "b"],
])
def test_usage_errors(argv):
    assert run(argv)[0] == 1


def test_validation_errors(image, tmp_path):
    o = str(tmp_path / "o.pgm")
    assert run(["deblur", "--rho", "-1", str(image), o])[0] == 1
    assert run(["cs", "--ratio", "0", str(image), o])[0] == 1
    assert run(["deblur", "--window", "4", str(image), o])[0] == 1
    assert run(["deblur", str(image), str(tmp_path / "nodir" / "o.pgm")])[0] == 1
    bad = tmp_path / "bad.pgm"
    bad.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
    assert run(["deblur", str(bad), o])[0] == 1


def test_runtime_failure_exit_code(image, tmp_path, monkeypatch):
    def explode(*a, **k):
        raise RuntimeError("solver blew up")

    monkeypatch.setattr(cli, "run_experiment", explode)
    assert run(["deblur", str(image), str(tmp_path / "o.pgm")])[0] == 2


def test_threads_env_fallback(image, tmp_path, monkeypatch):
    monkeypatch.setenv("LRR_THREADS", "2")
    assert run(["deblur", "--iters", "1", str(image), str(tmp_path / "t.pgm")])[0] == 0
    assert "solver.threads=2" in (tmp_path / "t.txt").read_text()
    monkeypatch.setenv("LRR_THREADS", "many")
    assert run(["deblur", "--iters", "1", str(image), str(tmp_path / "t.pgm")])[0] == 1


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "lrr.cli", "verify"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "all passed" in out.stdout
