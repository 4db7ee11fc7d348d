import json
from pathlib import Path

import pytest

from invgame.cli import main

ROOT = Path(__file__).resolve().parents[1]
GAME = ROOT / "data" / "quadratic_game.json"
SHARE_GAME = ROOT / "data" / "share_game.json"
BUNDLE = ROOT / "data" / "quadratic_dataset.json"
GOLDEN = ROOT / "tests" / "golden" / "estimate_quadratic.json"


def run(tmp_path, *args):
    return main(["--out-dir", str(tmp_path), *map(str, args)])


def test_estimate_matches_golden(tmp_path):
    assert run(tmp_path, "estimate", BUNDLE, "--game", GAME) == 0
    assert (tmp_path / "estimate.json").read_text() == GOLDEN.read_text()
    out = json.loads(GOLDEN.read_text())
    assert all(p["epsilon_hat"] == 0.0 and p["polyhedron"]["vertices"] for p in out["players"])


def test_estimate_l2_zero_on_rationalizable(tmp_path):
    assert run(tmp_path, "estimate", BUNDLE, "--game", GAME, "--loss", "l2") == 0
    out = json.loads((tmp_path / "estimate.json").read_text())
    assert all(p["l2_loss"] == 0.0 for p in out["players"])


def test_malformed_json_exit_2(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text('{"kind": "contextual_dataset",\n  "batches": [1,, 2]}')
    assert run(tmp_path, "estimate", bad, "--game", GAME) == 2
    err = capsys.readouterr().err
    assert "line 2" in err and "column" in err


def test_missing_file_exit_2(tmp_path):
    assert run(tmp_path, "estimate", tmp_path / "nope.json", "--game", GAME) == 2


@pytest.mark.parametrize("game,dyn", [(GAME, "better-response"), (SHARE_GAME, "market-share")])
def test_simulate_estimate_certify_roundtrip(tmp_path, game, dyn):
    assert run(tmp_path, "simulate", "--game", game, "--dynamics", dyn, "--steps", 15) == 0
    traj = tmp_path / "trajectory.csv"
    first = traj.read_bytes()
    assert run(tmp_path, "simulate", "--game", game, "--dynamics", dyn, "--steps", 15) == 0
    assert traj.read_bytes() == first
    assert run(tmp_path, "estimate", traj, "--game", game) == 0
    est = json.loads((tmp_path / "estimate.json").read_text())
    assert all(p["epsilon_hat"] == 0.0 for p in est["players"])
    sim = json.loads(Path(game).read_text())["simulation"]
    truths = sim.get("thetas") or sim["beliefs"]
    theta = tmp_path / "truth.json"
    theta.write_text(json.dumps({"players": [{"player": i, "theta": t} for i, t in enumerate(truths)]}))
    assert run(tmp_path, "certify", traj, "--game", game, "--theta", theta) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert all(p["epsilon_bar"] == 0.0 for p in cert["players"])


def test_simulate_seed_determinism(tmp_path):
    raw = json.loads(GAME.read_text())
    del raw["simulation"]["initial"]
    g = tmp_path / "g.json"
    g.write_text(json.dumps(raw))
    outs = []
    for k in range(2):
        d = tmp_path / f"s{k}"
        assert main(["--seed", "7", "--out-dir", str(d), "simulate", "--game", str(g), "--steps", "9"]) == 0
        outs.append((d / "trajectory.csv").read_bytes())
    assert outs[0] == outs[1]


def test_simulate_zero_steps(tmp_path):
    assert run(tmp_path, "simulate", "--game", GAME, "--steps", 0) == 2


def test_certify_from_estimate_output(tmp_path):
    assert run(tmp_path, "estimate", BUNDLE, "--game", GAME) == 0
    est = json.loads((tmp_path / "estimate.json").read_text())
    assert run(tmp_path, "certify", BUNDLE, "--game", GAME, "--theta", tmp_path / "estimate.json") == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    for e, c in zip(est["players"], cert["players"]):
        assert abs(c["epsilon_bar"] - e["epsilon_hat"]) <= 1e-9


def test_certify_zero_theta(tmp_path):
    th = tmp_path / "zero.json"
    th.write_text(json.dumps({"theta": [0.0, 0.0, 0.0]}))
    assert run(tmp_path, "certify", BUNDLE, "--game", GAME, "--theta", th) == 0
    cert = json.loads((tmp_path / "certificate.json").read_text())
    assert all(c["epsilon_bar"] == 0.0 for c in cert["players"])


def test_certify_hand_built_row(tmp_path, capsys):
    rows = tmp_path / "rows.json"
    rows.write_text(json.dumps({"kind": "constraint_rows", "rows": [[0.3]]}))
    th = tmp_path / "th.json"
    th.write_text("[1]")
    assert run(tmp_path, "certify", rows, "--theta", th) == 0
    assert json.loads((tmp_path / "certificate.json").read_text())["players"][0]["epsilon_bar"] == 0.3
    assert "0.3" in capsys.readouterr().out
    th.write_text("[1, 2]")
    assert run(tmp_path, "certify", rows, "--theta", th) == 2


def test_experiment_bertrand(tmp_path):
    assert run(tmp_path, "experiment", "--scenario", "bertrand") == 0
    rep = json.loads((tmp_path / "bertrand_report.json").read_text())
    assert [f["epsilon_hat"] for f in rep["firms"]] == [0.0, 0.0]


def test_experiment_advertising(tmp_path):
    assert run(tmp_path, "experiment", "--scenario", "advertising") == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["advertising_irrationality_firm1.csv", "advertising_irrationality_firm2.csv",
                     "advertising_report.json", "advertising_shares_firm1.csv", "advertising_shares_firm2.csv"]


def test_experiment_config_file(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"num_contexts": 5, "rng_seed": 3}))
    out = tmp_path / "out"
    assert main(["--out-dir", str(out), "experiment", "--scenario", "bertrand", "--config", str(cfg)]) == 0
    assert len(json.loads((out / "bertrand_report.json").read_text())["contexts"]) == 5
    cfg.write_text(json.dumps({"nonsense": 1}))
    assert main(["--out-dir", str(out), "experiment", "--scenario", "bertrand", "--config", str(cfg)]) == 2


def test_unknown_scenario(tmp_path, capsys):
    assert run(tmp_path, "experiment", "--scenario", "cournot") == 2
    assert "advertising, bertrand" in capsys.readouterr().err


def test_writes_only_into_out_dir(tmp_path, monkeypatch):
    work = tmp_path / "cwd"
    work.mkdir()
    monkeypatch.chdir(work)
    out = tmp_path / "out"
    assert main(["--out-dir", str(out), "estimate", str(BUNDLE), "--game", str(GAME)]) == 0
    assert list(work.iterdir()) == []


def test_lp_failure_exit_3(tmp_path, monkeypatch):
    from invgame import cli
    from invgame.errors import LPFailure

    def boom(*a, **k):
        raise LPFailure("forced")
    monkeypatch.setattr(cli, "estimate_linf", boom)
    assert run(tmp_path, "estimate", BUNDLE, "--game", GAME) == 3


def test_usage_error_exit_2():
    assert main(["estimate"]) == 2
