"""End-to-end runs of the command line tool, all in process."""

import importlib.resources
import json
import os

import pytest

from rig.cli import main, write_demo_files


def data_path(name):
    return str(importlib.resources.files("rig") / "data" / name)


PENNIES = ["--game", data_path("matching-pennies-game.json"),
           "--morphism", data_path("matching-pennies-morphism.json")]
ENV_LOSS = ["--game", data_path("env-loss-game.json"),
            "--morphism", data_path("env-loss-morphism.json")]
FIG3 = ["--game", data_path("fig3-game.json"),
        "--morphism", data_path("fig3-morphism.json")]


@pytest.fixture
def run(capsys):
    """Invoke the CLI and return (exit code, parsed stdout JSON, stderr)."""

    def invoke(*argv):
        code = main(list(argv))
        captured = capsys.readouterr()
        payload = json.loads(captured.out) if captured.out.strip() else None
        return code, payload, captured.err

    return invoke


# --------------------------------------------------------------------------
# verdict exit codes
# --------------------------------------------------------------------------

def test_validate_passes_on_bundled_pair(run):
    code, out, err = run("validate", *PENNIES, "--depth", "4")
    assert code == 0
    assert out["passed"] is True
    assert out["refinement"]["passed"] is True
    assert out["rectangularity"]["passed"] is True
    assert "validate: pass" in err


def test_solve_winning_is_exit_zero(run):
    code, out, _ = run("solve", *PENNIES)
    assert code == 0
    assert out["winning"] is True
    assert out["manifest"]["command"] == "solve"
    assert out["manifest"]["options"]["objective"] == "reach"


def test_solve_losing_is_exit_one(run):
    code, out, _ = run("solve", *ENV_LOSS)
    assert code == 1
    assert out["winning"] is False


def test_solve_buchi(run):
    code, out, _ = run("solve", *PENNIES, "--objective", "buchi")
    assert code == 0
    assert out["winning"] is True


def test_solve_refuses_safety(run):
    code, out, _ = run("solve", *PENNIES, "--objective", "safe")
    assert code == 2
    assert "error" in out


def test_strategy_on_losing_game_is_exit_one(run):
    code, out, _ = run("strategy", *ENV_LOSS)
    assert code == 1
    assert out["winning"] is False


def test_counterexample_psi(run):
    code, out, _ = run("counterexample", "--check", "psi", "--grid", "3")
    assert code == 0
    assert out["verdict"] is True
    assert out["check"] == "psi"


def test_schema_error_is_exit_two(run, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"format": "rig-game/9"}))
    code, out, err = run("solve", "--game", str(bad),
                         "--morphism", data_path(
                             "matching-pennies-morphism.json"))
    assert code == 2
    assert "error" in out
    assert "input error" in err


def test_missing_file_is_exit_two(run, tmp_path):
    code, out, _ = run("validate", "--game", str(tmp_path / "nope.json"))
    assert code == 2


def test_universe_cap_is_exit_three(run):
    code, out, _ = run("solve", *PENNIES, "--max-universe", "3")
    assert code == 3
    assert out["cap"] is True


# --------------------------------------------------------------------------
# file round trips
# --------------------------------------------------------------------------

def test_strategy_verify_refute_round_trip(run, tmp_path):
    sigma = tmp_path / "sigma.json"
    code, out, _ = run("strategy", *PENNIES, "--out", str(sigma))
    assert code == 0
    assert sigma.exists()
    assert out["format"] == "rig-strategy/1"

    code, out, _ = run("verify", *PENNIES, "--strategy", str(sigma))
    assert code == 0
    assert out["almost_sure"] is True

    # a winning strategy has no spoiler: clean false verdict
    code, out, _ = run("refute", *PENNIES, "--strategy", str(sigma))
    assert code == 1
    assert out["spoiler"] is None
    assert out["almost_sure"] is True


def test_refute_finds_spoiler_on_losing_game(run, tmp_path):
    sigma = tmp_path / "sigma.json"
    # hand the env-loss game a uniform strategy to refute
    from rig.instances import env_loss
    from rig.jsonio import RunManifest
    from rig.solver import build_arena
    from rig.strategy import save_strategy, uniform_support_strategy
    game, morphism = env_loss()
    arena = build_arena(game, morphism)
    alpha = uniform_support_strategy(morphism, {}, arena.actions)
    save_strategy(sigma, alpha, manifest=RunManifest(command="test"))

    out_path = tmp_path / "spoiler.json"
    code, out, _ = run("refute", *ENV_LOSS, "--strategy", str(sigma),
                       "--out", str(out_path))
    assert code == 0
    assert out["almost_sure"] is False
    assert out["spoil_prob"] == "0"
    assert out_path.exists()

    # the written spoiler drives the exact probability to its spoil_prob
    code, out, _ = run("prob", "--game", ENV_LOSS[1],
                       "--strategy", str(sigma),
                       "--env-strategy", str(out_path))
    assert code == 0
    assert out["exact"] == "0"


def test_simulate_and_prob_agree(run, tmp_path):
    sigma = tmp_path / "sigma.json"
    run("strategy", *PENNIES, "--out", str(sigma))

    code, out, _ = run("prob", "--game", PENNIES[1],
                       "--strategy", str(sigma), "--horizon", "8")
    assert code == 0
    assert out["exact"] == "15/16"

    code, out2, _ = run("prob", "--game", PENNIES[1],
                        "--strategy", str(sigma), "--exact")
    assert out2["exact"] == "1"
    assert out2["horizon"] is None

    code, sim, err = run("simulate", "--game", PENNIES[1],
                         "--strategy", str(sigma), "--rounds", "60",
                         "--samples", "500", "--seed", "7",
                         "--transcripts", "2")
    assert code == 0
    assert sim["samples"] == 500
    assert sim["hits"] == 500
    assert len(sim["transcripts"]) == 2
    assert "500/500" in err


def test_simulate_rejects_player_file_as_env(run, tmp_path):
    sigma = tmp_path / "sigma.json"
    run("strategy", *PENNIES, "--out", str(sigma))
    code, out, _ = run("simulate", "--game", PENNIES[1],
                       "--strategy", str(sigma),
                       "--env-strategy", str(sigma))
    assert code == 2
    assert "environment" in out["error"]


def test_reif_compile_round_trip(run, tmp_path):
    from rig.instances import pennies_reif
    from rig.jsonio import RunManifest
    from rig.reif import save_reif
    reif_path = tmp_path / "reif.json"
    save_reif(reif_path, pennies_reif(), manifest=RunManifest(command="t"))

    out_game = tmp_path / "game.json"
    out_morphism = tmp_path / "morphism.json"
    code, out, _ = run("reif", "compile", "--in", str(reif_path),
                       "--out-game", str(out_game),
                       "--out-morphism", str(out_morphism))
    assert code == 0
    assert out["latch"] is True

    code, solved, _ = run("solve", "--game", str(out_game),
                          "--morphism", str(out_morphism))
    assert code == 0
    assert solved["winning"] is True


def test_counterexample_writes_certificate(run, tmp_path):
    cert_path = tmp_path / "cert.json"
    code, _, _ = run("counterexample", "--check", "psi-prime",
                     "--grid", "2", "--certificate", str(cert_path))
    assert code == 0
    from rig.refinement import load_certificate, replay_certificate
    assert replay_certificate(load_certificate(cert_path))


# --------------------------------------------------------------------------
# determinism and presentation
# --------------------------------------------------------------------------

def test_demo_reruns_are_byte_identical(run, tmp_path):
    first = tmp_path / "one"
    second = tmp_path / "two"
    for out_dir in (first, second):
        code, out, _ = run("demo", "matching-pennies",
                           "--out-dir", str(out_dir), "--samples", "200")
        assert code == 0
        assert out["ok"] is True
        assert out["exact_reach_prob"] == "1073741823/1073741824"
    names = sorted(os.listdir(first))
    assert names == sorted(os.listdir(second))
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), \
            name


def test_bundled_files_match_regeneration(tmp_path):
    """The committed data files are exactly what the demo writer produces."""
    regenerated = {}
    for name in ("matching-pennies", "env-loss", "fig3"):
        regenerated.update(write_demo_files(name, str(tmp_path / name)))
    assert len(regenerated) == 8
    for fname, path in regenerated.items():
        with open(path, "rb") as fh:
            fresh = fh.read()
        with open(data_path(fname), "rb") as fh:
            committed = fh.read()
        assert fresh == committed, fname


def test_rig_color_never_strips_ansi(run, monkeypatch):
    monkeypatch.setenv("RIG_COLOR", "never")
    _, _, err = run("solve", *PENNIES)
    assert "\x1b[" not in err
    # force color on a non-tty via always is not supported; auto on a pipe
    # stays plain too
    monkeypatch.setenv("RIG_COLOR", "auto")
    _, _, err = run("solve", *PENNIES)
    assert "\x1b[" not in err


def test_fig3_demo_full_pipeline(run, tmp_path):
    code, out, _ = run("demo", "fig3", "--out-dir", str(tmp_path),
                       "--grid", "2")
    assert code == 0
    assert out["psi"] is True
    assert out["psi_prime"] is True
    assert out["h_matches_abstract_g"] is True
    assert sorted(out["files"]) == [
        "fig3-G.json", "fig3-H.json", "fig3-game.json", "fig3-morphism.json",
        "fig3-psi-certificate.json", "fig3-psi-prime-certificate.json"]


def test_env_loss_demo(run, tmp_path):
    code, out, _ = run("demo", "env-loss", "--out-dir", str(tmp_path))
    assert code == 0
    assert out["winning"] is False
    assert out["spoiler_found"] is True
    assert out["spoil_prob"] == "0"
