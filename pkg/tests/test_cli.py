import pytest

from wpt_adaptive.cli import main, make_parser


def test_estimate_prints_mutual(capsys):
    assert main(["estimate", "--zin-mag", "9.154", "--freq", "72537"]) == 0
    out = capsys.readouterr().out
    assert "M = 9.9995" in out or "M = 1.0000e-05" in out


def test_estimate_from_amplitudes_and_phase(capsys):
    assert main(["estimate", "--v-amp", "10", "--i1-amp", "1.0924", "--freq", "72538.25",
                 "--zin-phase", "0.0"]) == 0
    assert "phase method" in capsys.readouterr().out


def test_estimate_inconsistent_is_runtime_error(capsys):
    assert main(["estimate", "--zin-mag", "1", "--freq", "72537"]) == 2
    assert "below the uncoupled value" in capsys.readouterr().err


def test_sweep_rejects_bad_k(capsys, tmp_path):
    assert main(["sweep", "--k", "1.5", "--out-dir", str(tmp_path)]) == 1
    assert "k must be in (0, 0.99]" in capsys.readouterr().err


def test_usage_errors_exit_1(capsys):
    assert main([]) == 1
    assert main(["nonsense"]) == 1
    assert main(["sweep", "--points", "abc"]) == 1
    assert main(["estimate"]) == 1


def test_sweep_with_config_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"k = 0.1, 0.4\npoints = 801\nout_dir = {tmp_path / 'from_file'}\n")
    out = tmp_path / "flag"
    assert main(["sweep", "--config", str(cfg), "--points", "1601", "--out-dir", str(out)]) == 0
    assert (out / "sweep_0.40.csv").exists()
    assert not (tmp_path / "from_file").exists()
    assert len((out / "sweep_0.10.csv").read_text().splitlines()) == 1602


def test_missing_config_file(tmp_path):
    assert main(["sweep", "--config", str(tmp_path / "nope.cfg")]) == 1


def test_near_unity_is_runtime_error(tmp_path, capsys, monkeypatch):
    from wpt_adaptive import experiments as ex
    from wpt_adaptive.errors import NearUnityCoupling

    def boom(cfg):
        raise NearUnityCoupling("singular")

    monkeypatch.setitem(ex.EXPERIMENTS, "adapt", boom)
    assert main(["adapt", "--out-dir", str(tmp_path)]) == 2


@pytest.mark.parametrize("cmd", ["sweep", "surface", "adapt", "compare", "all", "estimate"])
def test_help_lists_units(cmd, capsys):
    with pytest.raises(SystemExit) as exc:
        make_parser().parse_args([cmd, "--help"])
    assert exc.value.code == 0
    text = capsys.readouterr().out
    assert "[Hz]" in text
    if cmd != "estimate":
        for flag in ("--k", "--fmin", "--fmax", "--points", "--duration", "--learn-rate",
                     "--start-freq", "--out-dir", "--h"):
            assert flag in text


def test_repeat_runs_identical(tmp_path, capsys):
    args = ["sweep", "--k", "0.3", "--points", "501"]
    assert main(args + ["--out-dir", str(tmp_path / "a")]) == 0
    first = capsys.readouterr().out
    assert main(args + ["--out-dir", str(tmp_path / "b")]) == 0
    second = capsys.readouterr().out
    assert first.replace("/a", "") == second.replace("/b", "")
    assert (tmp_path / "a" / "sweep_0.30.csv").read_bytes() == (tmp_path / "b" / "sweep_0.30.csv").read_bytes()
