import json
import math

import pytest

from fraclab import cli
from fraclab.cli import (ConfigError, KeyLemmaConfig, RecoveryConfig, ScalingConfig, load_config, main,
                         run_keylemma_audit, run_recovery_experiment, run_scaling_sweep, s_of_rule)


def write(tmp_path, name, doc):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def body(path):
    return "".join(line for line in path.read_text().splitlines(True) if not line.startswith("#"))


def test_unknown_key_is_config_error(tmp_path, capsys):
    cfgp = write(tmp_path, "c.json", {"s": [0.5], "epsilon": [1e-3]})
    assert main(["scaling", "--config", cfgp, "--out", str(tmp_path)]) == 2
    assert "epsilon" in capsys.readouterr().err


@pytest.mark.parametrize("doc", [{"s": []}, {"eps": "1e-3"}, [1, 2], {"thresholds": [1]}])
def test_bad_configs(tmp_path, doc):
    assert main(["scaling", "--config", write(tmp_path, "c.json", doc), "--out", str(tmp_path)]) == 2


def test_missing_config_file(tmp_path):
    assert main(["scaling", "--config", str(tmp_path / "none.json"), "--out", str(tmp_path)]) == 2


def test_scaling_sweep_outputs(tmp_path):
    assert main(["scaling", "--out", str(tmp_path), "--seed", "7"]) == 0
    text = (tmp_path / "scaling.csv").read_text().splitlines()
    assert text[0].startswith("# tool=fraclab version=0.1.0 command=scaling config_sha256=")
    assert text[0].endswith("seed=7")
    assert text[1] == "s,eps,lambda,lambda_log_eps,regimeValue,regimeClass"
    summary = json.loads((tmp_path / "scaling_summary.json").read_text())
    assert summary["meta"]["seed"] == 7 and summary["violations"] == []


def test_scaling_single_row():
    t = run_scaling_sweep(ScalingConfig(s=[0.5], eps=[math.exp(-10)]))
    assert t.rows[0][2] == pytest.approx(0.1, rel=1e-14)


def test_scaling_constant_along_fixed_x():
    x = 1.7
    rows = []
    for eps in (1e-2, 1e-4, 1e-8):
        L = -math.log(eps)
        rows += run_scaling_sweep(ScalingConfig(s=[0.5 + x / (2 * L)], eps=[eps])).rows
    vals = [r[3] for r in rows]
    assert max(vals) - min(vals) < 1e-10


def test_scaling_continuity_violation_reported():
    t = run_scaling_sweep(ScalingConfig(s=[0.3, 0.7], eps=[1e-2], continuity_bound=1e-3))
    assert t.violations


def test_json_format(tmp_path):
    assert main(["scaling", "--out", str(tmp_path), "--format", "json"]) == 0
    doc = json.loads((tmp_path / "scaling.json").read_text())
    assert doc["columns"][0] == "s" and doc["meta"]["command"] == "scaling"


def test_determinism_byte_identical(tmp_path):
    cfgp = write(tmp_path, "k.json", {"cases": 12})
    for d in ("a", "b"):
        assert main(["keylemma", "--config", cfgp, "--out", str(tmp_path / d), "--seed", "5"]) == 0
    assert body(tmp_path / "a" / "keylemma.csv") == body(tmp_path / "b" / "keylemma.csv")
    assert main(["keylemma", "--config", cfgp, "--out", str(tmp_path / "c"), "--seed", "5", "--threads", "3"]) == 0
    assert body(tmp_path / "a" / "keylemma.csv") == body(tmp_path / "c" / "keylemma.csv")
    assert main(["keylemma", "--config", cfgp, "--out", str(tmp_path / "d"), "--seed", "6"]) == 0
    assert body(tmp_path / "a" / "keylemma.csv") != body(tmp_path / "d" / "keylemma.csv")


def test_keylemma_theta_sweep_and_eta_edge():
    small = run_keylemma_audit(KeyLemmaConfig(cases=8, theta=[0.01], eps=[1e-3]))
    base = run_keylemma_audit(KeyLemmaConfig(cases=8, theta=[0.25], eps=[1e-3]))
    assert not small.violations and not base.violations
    assert max(r[8] for r in small.rows) < min(r[8] for r in base.rows)
    edge = run_keylemma_audit(KeyLemmaConfig(cases=20, eta=[0.24]))
    assert not edge.violations and edge.summary["cases"] == 20


def test_keylemma_violation_exit_code(tmp_path, monkeypatch):
    real = cli.verify_key_lemma

    def broken(*args, **kw):
        chk = real(*args, **kw)
        return type(chk)(chk.lhs, chk.lhs + 1.0, False)

    monkeypatch.setattr(cli, "verify_key_lemma", broken)
    assert main(["keylemma", "--config", write(tmp_path, "k.json", {"cases": 3}), "--out", str(tmp_path)]) == 3


def test_recovery_small_run():
    t = run_recovery_experiment(RecoveryConfig(jumps=[[0.5]], eps=[1e-2, 1e-3], rules=["half"]))
    assert len(t.rows) == 2 and not t.failures
    fit = t.summary["fits"]["0.5"]["half"]
    assert abs(fit["intercept"] - 8) < 1.0


def test_recovery_row_failure_does_not_abort(tmp_path):
    cfgp = write(tmp_path, "r.json", {"jumps": [[0.5], [0.5, 0.51]], "eps": [1e-2, 1e-3], "rules": ["half"]})
    assert main(["recovery", "--config", cfgp, "--out", str(tmp_path)]) == 4
    summary = json.loads((tmp_path / "recovery_summary.json").read_text())
    assert summary["failures"] and "0.5" in summary["fits"]


def test_s_rules():
    L = math.log(1e4)
    assert s_of_rule("plus", 1e-4) == pytest.approx(0.5 + L**-2)
    assert s_of_rule("minus", 1e-4) == pytest.approx(0.5 - L**-2)


def test_energy_command_and_ledger(tmp_path):
    ledger = tmp_path / "ledger.csv"
    cfgp = write(tmp_path, "e.json", {"s": [0.5, 0.6], "eps": [1e-2], "ledger": str(ledger)})
    assert main(["energy", "--config", cfgp, "--out", str(tmp_path), "--format", "json"]) == 0
    assert main(["energy", "--config", cfgp, "--out", str(tmp_path)]) == 0
    lines = ledger.read_text().splitlines()
    assert lines[0] == "s,eps,N,potentialTerm,seminormTerm,total" and len(lines) == 5
    summary = json.loads((tmp_path / "energy_summary.json").read_text())
    b = summary["breakdowns"][0]
    assert b["total"] == pytest.approx(b["potentialCoeff"] * b["potentialTerm"] + b["seminormCoeff"] * b["seminormTerm"])


def test_profile_small_run(tmp_path):
    cfgp = write(tmp_path, "p.json", {"s": [0.7, 0.75, 0.8], "Ts": [4.0, 8.0, 16.0, 32.0], "half_Ts": [4.0, 8.0, 16.0, 32.0],
                                      "max_cell_width": 0.05})
    code = main(["profile", "--config", cfgp, "--out", str(tmp_path)])
    summary = json.loads((tmp_path / "profile_summary.json").read_text())
    assert code == 0, summary["failures"] + summary["violations"]
    assert all(v.get("bracket", "OK") == "OK" for v in summary["per_s"].values())
    assert summary["limit_fit"]["degree"] == 2 and "linear_intercept" in summary["limit_fit"]
    assert len(summary["series"]["points"]) == 3


def test_profile_config_rejects_half():
    with pytest.raises(ConfigError):
        load_config("profile", None).__class__(s=[0.5]).validate()
