import json

import pytest
from hypothesis import given, settings, strategies as st

from mixcoin.cli import EXIT_ABORT, EXIT_CONFIG, EXIT_IMPOSSIBLE, EXIT_MISMATCH, EXIT_OK, main
from mixcoin.commit_protocol import acceptance_probability
from mixcoin.scenarios import PROTOCOLS, ConfigError, RunConfig, load_transcripts, replay, run_many, summarize
from mixcoin.stats import within_sds

SMALL = ["--sigma", "1", "--ell", "8"]


def _json(capsys, argv):
    assert main(argv + ["--json"]) == EXIT_OK
    return json.loads(capsys.readouterr().out)


def test_run_summary_is_deterministic(capsys):
    argv = ["run", "--protocol", "coin-force", "--n", "40", "--seed", "3"] + SMALL
    first, second = _json(capsys, argv), _json(capsys, argv)
    assert first == second
    assert first["sessions"] == 40 and first["aborts"] == 0
    assert _json(capsys, argv[:-4] + ["--seed", "4"] + SMALL) != first


def test_workers_do_not_change_results(capsys):
    argv = ["run", "--protocol", "coin-random", "--n", "12", "--seed", "1"] + SMALL
    assert _json(capsys, argv) == _json(capsys, argv + ["--workers", "2"])


@pytest.mark.parametrize("argv", [
    ["run", "--sigma", "8", "--Sigma", "30"],
    ["run", "--protocol", "nope"],
    ["attack", "--strategy", "nope"],
    ["attack", "--strategy", "enforce-alice", "--ell", "8", "--target", "1ff"],
    ["attack", "--protocol", "commit", "--strategy", "enforce-alice"],
    ["run", "--field-bits", "4"],
    ["ot", "run", "--m0", "00"],
])
def test_configuration_errors(argv, capsys):
    assert main(argv) == EXIT_CONFIG
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("protocol", ["coin-random", "coin-force", "coin-blum"])
def test_enforce_alice_hits_target(protocol, capsys):
    out = _json(capsys, ["attack", "--protocol", protocol, "--strategy", "enforce-alice", "--target", "5a", "--n", "10"]
                + SMALL)
    assert out["hit_rate"] == 1.0 and out["histogram"] == {"90": 10}


def test_enforce_bob_hits_target(capsys):
    out = _json(capsys, ["attack", "--protocol", "coin-force", "--strategy", "enforce-bob", "--n", "10"] + SMALL)
    assert out["hit_rate"] == 1.0


def test_impossible_attacks(capsys):
    assert main(["attack", "--protocol", "coin-blum", "--strategy", "enforce-bob"] + SMALL) == EXIT_IMPOSSIBLE
    assert main(["attack", "--strategy", "rewind-blum", "--mode", "quantum-realistic"] + SMALL) == EXIT_IMPOSSIBLE


def test_cheat_open_rarely_accepted(capsys):
    out = _json(capsys, ["attack", "--protocol", "commit", "--strategy", "cheat-open", "--sigma", "2", "--n", "200"])
    assert within_sds(out["hit_rate"], acceptance_probability(8, 2, 2), 200)


def test_replay_match_and_mismatch(tmp_path, capsys):
    path = tmp_path / "runs.jsonl"
    assert main(["run", "--protocol", "coin-force", "--n", "3", "--out", str(path)] + SMALL) == EXIT_OK
    capsys.readouterr()
    assert main(["replay", str(path)]) == EXIT_OK
    assert capsys.readouterr().out.count("MATCH") == 3

    lines = path.read_text().splitlines()
    i = next(k for k, line in enumerate(lines) if json.loads(line).get("seq") == 1)
    rec = json.loads(lines[i])
    rec["payload"] = rec["payload"][:-2] + ("00" if rec["payload"][-2:] != "00" else "01")
    lines[i] = json.dumps(rec, sort_keys=True)
    path.write_text("\n".join(lines) + "\n")
    assert main(["replay", str(path)]) == EXIT_MISMATCH
    assert "MISMATCH at" in capsys.readouterr().out


def test_replay_rejects_unknown_version_and_garbage(tmp_path, capsys):
    path = tmp_path / "runs.jsonl"
    main(["run", "--protocol", "coin-ideal", "--out", str(path)] + SMALL)
    lines = path.read_text().splitlines()
    hdr = json.loads(lines[0])
    hdr["version"] = 99
    path.write_text("\n".join([json.dumps(hdr)] + lines[1:]) + "\n")
    assert main(["replay", str(path)]) == EXIT_CONFIG
    path.write_text("not json\n")
    assert main(["replay", str(path)]) == EXIT_CONFIG
    assert main(["replay", str(tmp_path / "missing")]) == EXIT_CONFIG


def test_zkpk_round_trip(tmp_path, capsys):
    inst, proofs, sims = tmp_path / "g.txt", tmp_path / "p.jsonl", tmp_path / "s.jsonl"
    assert main(["zkpk", "sample", "--vertices", "5", "--out", str(inst)]) == EXIT_OK
    out = _json(capsys, ["zkpk", "prove", "--instance", str(inst), "--sigma", "4", "--n", "5", "--out", str(proofs)])
    assert out["histogram"] == {"'success'": 5}
    assert main(["zkpk", "verify", str(proofs)]) == EXIT_OK
    assert capsys.readouterr().out.count("verifier success") == 5
    out = _json(capsys, ["zkpk", "simulate", "--instance", str(inst), "--sigma", "4", "--n", "5", "--out", str(sims)])
    assert out["hit_rate"] == 1.0
    assert main(["zkpk", "verify", str(sims)]) == EXIT_OK


def test_ot_and_sfe_commands(capsys):
    out = _json(capsys, ["ot", "run", "--m0", "00ff", "--m1", "ff00", "--choice", "1"])
    assert out["histogram"] == {"ff00": 1}
    out = _json(capsys, ["sfe", "run", "--f", "and", "--x1", "1", "--x2", "1"])
    assert out["histogram"] == {"1": 1}
    assert main(["sfe", "run", "--f", "xor", "--x1", "1", "--x2", "0", "--deviation", "flip-message", "--strict"]) \
        == EXIT_ABORT


@pytest.mark.parametrize("protocol", PROTOCOLS)
def test_every_protocol_replays(protocol):
    cfg = RunConfig(protocol=protocol, sigma=1, ell=8)
    ts = list(run_many(cfg, 2, 11))
    text = "".join(t.to_jsonl() for t in ts)
    for t, back in zip(ts, load_transcripts(text)):
        assert back.to_jsonl() == t.to_jsonl() == replay(back).to_jsonl()
    assert summarize(ts)["sessions"] == 2


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(PROTOCOLS), st.integers(1, 6), st.integers(1, 24), st.sampled_from(["hybrid", "composed"]))
def test_config_dict_round_trip(protocol, sigma, ell, mode):
    cfg = RunConfig(protocol=protocol, sigma=sigma, ell=ell, mode=mode)
    assert RunConfig.from_dict(json.loads(json.dumps(cfg.to_dict()))) == cfg


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(sigma=3, Sigma=11)
    assert RunConfig(sigma=3, Sigma=12).params().Sigma == 12
