import csv

import pytest

from allee_plasticity import config
from allee_plasticity.cli import main

FAST = {
    "simulate": ["t_end=2"],
    "fixed-points": [],
    "hopf-scan": ["nx=80", "ny=80"],
    "sweep": ["lo=1.4", "hi=1.6", "n=5"],
    "overlap": ["t_end=5"],
    "sensitivity": ["t_end=3", "n=4"],
    "retrieve": ["n_seeds=2", "P=20", "N_u=10", "N_v=10"],
    "noise-sweep": ["n_seeds=2", "sigmas=0.0,0.3"],
}
OUTPUT = {
    "simulate": ["simulate"],
    "fixed-points": ["fixed_points"],
    "hopf-scan": ["hopf_cells", "hopf_verdict", "hopf_summary"],
    "sweep": ["sweep"],
    "overlap": ["overlap"],
    "sensitivity": ["sensitivity"],
    "retrieve": ["retrieve", "retrieve_summary"],
    "noise-sweep": ["noise_sweep"],
}


def run(cmd, out, *sets, config_path=None):
    argv = [cmd, "--out", str(out)]
    if config_path:
        argv += ["--config", str(config_path)]
    for s in sets:
        argv += ["--set", s]
    return main(argv)


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestConfig:
    def test_parse_and_resolve(self):
        raw = config.parse_text("# comment\nA = 0.5\nK = inf\n\nname=x\n")
        cfg = config.resolve({"A": (float, 1.0), "K": (float, 1.0), "name": (str, ""),
                              "n": (int, 3)}, raw)
        assert cfg == {"A": 0.5, "K": float("inf"), "name": "x", "n": 3}

    def test_unknown_key(self):
        with pytest.raises(config.ConfigError):
            config.resolve({"A": (float, 1.0)}, {"B": "2"})

    def test_bad_value(self):
        with pytest.raises(config.ConfigError):
            config.resolve({"A": (float, 1.0)}, {"A": "abc"})

    @pytest.mark.parametrize("typ, val", [
        (float, 0.1), (float, float("inf")), (bool, True), ("floats", [0.0, 0.05]),
        ("strs", ["a", "b"]), ("pairs", [(0.1, 0.2), (2.0, 0.1)]), (int, 7)])
    def test_round_trip(self, typ, val):
        text = config.format_value(val)
        assert config.resolve({"k": (typ, None)}, {"k": text})["k"] == val


class TestCommands:
    @pytest.mark.parametrize("cmd", list(FAST))
    def test_runs_and_reproduces(self, cmd, tmp_path):
        assert run(cmd, tmp_path / "a", *FAST[cmd]) == 0
        for name in OUTPUT[cmd]:
            csv_a = tmp_path / "a" / f"{name}.csv"
            meta = tmp_path / "a" / f"{name}.meta"
            assert csv_a.exists() and meta.exists()
            assert b"\r" not in csv_a.read_bytes()
            assert run(cmd, tmp_path / "b", config_path=meta) == 0
            assert (tmp_path / "b" / f"{name}.csv").read_bytes() == csv_a.read_bytes()

    def test_meta_header(self, tmp_path):
        run("retrieve", tmp_path, *FAST["retrieve"])
        lines = (tmp_path / "retrieve.meta").read_text().splitlines()
        assert lines[0] == "# command = retrieve"
        assert lines[2] == "# seed = 0"
        assert "n_seeds = 2" in lines

    def test_simulate_rows(self, tmp_path):
        run("simulate", tmp_path, "t_end=0")
        rows = read(tmp_path / "simulate.csv")
        assert len(rows) == 1 and list(rows[0]) == ["t", "x", "y", "extinct"]

    def test_simulate_fig5_endpoint(self, tmp_path):
        run("simulate", tmp_path, "x0=0.6", "y0=0.8", "t_end=40")
        last = read(tmp_path / "simulate.csv")[-1]
        assert float(last["x"]) == pytest.approx(0.93166, abs=1e-3)
        assert float(last["y"]) == pytest.approx(4.6083, abs=0.05)

    def test_fixed_points_rows(self, tmp_path):
        run("fixed-points", tmp_path)
        rows = {r["branch"]: r for r in read(tmp_path / "fixed_points.csv")}
        assert rows["allee"]["stability"] == "stable_node"
        run("fixed-points", tmp_path, "A=0", "m=2", "u=2", "K=0.7")
        rows = read(tmp_path / "fixed_points.csv")
        assert len(rows) == 1 and rows[0]["theorem1_case"] == "undefined"
        run("fixed-points", tmp_path, "m=4")
        assert read(tmp_path / "fixed_points.csv")[0]["theorem1_case"] == "boundary"

    def test_hopf_scan_summary(self, tmp_path):
        run("hopf-scan", tmp_path)
        s = read(tmp_path / "hopf_summary.csv")[0]
        assert int(s["hopf_cells"]) > 0
        run("hopf-scan", tmp_path, "A=0")
        s = read(tmp_path / "hopf_summary.csv")[0]
        assert int(s["hopf_cells"]) == 0 and s["any_verdict"] == "0"

    def test_noise_sweep_default_rules(self, tmp_path):
        run("noise-sweep", tmp_path, *FAST["noise-sweep"])
        rows = read(tmp_path / "noise_sweep.csv")
        assert [r["rule"] for r in rows] == ["hebbian", "oja", "allee", "stdp_pair",
                                             "stdp_weight", "stdp_addmul", "stdp_power",
                                             "stdp_continuous"]

    def test_plots(self, tmp_path):
        pytest.importorskip("matplotlib")
        assert main(["overlap", "--out", str(tmp_path), "--set", "t_end=2", "--plots"]) == 0
        assert (tmp_path / "overlap.svg").exists()


class TestErrors:
    @pytest.mark.parametrize("cmd, sets", [
        ("simulate", ["y0=0"]),
        ("simulate", ["K=-1"]),
        ("hopf-scan", ["y_min=0"]),
        ("noise-sweep", ["sigmas="]),
        ("retrieve", ["sigma=2"]),
        ("sweep", ["vary=tau_v"]),
        ("simulate", ["bogus=1"]),
        ("simulate", ["x0=abc"]),
    ])
    def test_validation_exit_2(self, cmd, sets, tmp_path, capsys):
        assert run(cmd, tmp_path, *sets) == 2
        assert "error" in capsys.readouterr().err
        assert not list(tmp_path.glob("*.csv"))

    def test_missing_config(self, tmp_path):
        assert run("simulate", tmp_path, config_path=tmp_path / "nope.cfg") == 2
