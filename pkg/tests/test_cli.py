import json
import subprocess
import sys

import pytest

from envelope_lab.experiments.cli import build_parser, eval_fraction, main

SMALL = {"n_slow": 256, "samples": 8, "T": 0.25}


def write_config(tmp_path, **kw):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({**SMALL, **kw}))
    return str(path)


def test_all_subcommands_exist():
    parser = build_parser()
    names = set(parser._subparsers._group_actions[0].choices)
    assert names == {"converge-main", "converge-linear", "remainder-decay", "highfreq-core", "kernel-bound",
                     "energy-drift", "decay-probe", "solve"}


def test_fractions():
    assert eval_fraction("1/8") == 0.125
    assert eval_fraction(" 0.25 ") == 0.25


def test_success_writes_outputs(tmp_path, capsys):
    out = tmp_path / "o"
    code = main(["converge-linear", "--config", write_config(tmp_path), "--out", str(out), "--eps", "1/4,1/8,1/16"])
    assert code == 0
    assert sorted(p.name for p in out.iterdir()) == ["converge-linear.csv", "converge-linear.json",
                                                     "converge-linear.svg", "manifest.json"]
    assert "converge-linear" in capsys.readouterr().out


def test_format_selection(tmp_path):
    out = tmp_path / "o"
    assert main(["converge-linear", "--out", str(out), "--format", "json"]) == 0
    assert sorted(p.name for p in out.iterdir()) == ["converge-linear.json", "manifest.json"]


def test_config_errors(tmp_path):
    assert main(["converge-linear", "--eps", "0.3", "--out", str(tmp_path)]) == 2
    assert main(["converge-linear", "--config", str(tmp_path / "missing.toml")]) == 2
    assert main(["kernel-bound", "--eps", "1/64", "--out", str(tmp_path)]) == 2
    with pytest.raises(SystemExit):
        main(["converge-linear", "--format", "pdf"])


def test_numerical_failure(tmp_path):
    cfg = write_config(tmp_path, profile={"family": "gaussian", "amplitude": 1e6}, dt_phys=1.0, eps_list=[0.5],
                       samples=2)
    assert main(["converge-main", "--config", cfg, "--out", str(tmp_path / "o")]) == 3


def test_check_flag(tmp_path):
    cfg = write_config(tmp_path, band=[0.0, 1.0], eps_list=[0.25], decay_times=[1.0, 10.0, 5])
    args = ["decay-probe", "--config", cfg, "--out", str(tmp_path / "o")]
    assert main(args) == 0
    assert main(args + ["--check"]) == 4


def test_solve_dumps_snapshots(tmp_path):
    for eq in ("kg", "amplitude", "nls"):
        code = main(["solve", "--equation", eq, "--config", write_config(tmp_path, T=0.05, samples=2),
                     "--eps", "0.25", "--out", str(tmp_path / eq)])
        assert code == 0
        assert (tmp_path / eq / f"{eq}.snap.json").exists()


def test_seed_changes_config_hash(tmp_path):
    outs = []
    for seed in ("1", "2"):
        out = tmp_path / seed
        main(["converge-linear", "--profile", "fourier_tail", "--config",
              write_config(tmp_path, profile={"family": "fourier_tail", "s": 1.5}), "--seed", seed, "--out", str(out)])
        outs.append(json.loads((out / "manifest.json").read_text())["config_hash"])
    assert outs[0] != outs[1]


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "envelope_lab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "kernel-bound" in res.stdout
