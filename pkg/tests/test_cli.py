import csv
import json

import pytest

from attncap.cli import main
from attncap.energy import default_params_text
from attncap.trace import read_trace


def run(argv, capsys):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def simulate(tmp_path, name, seed=0, duration=None, capsys=None):
    path = tmp_path / f"{name}_{seed}_{duration}.jsonl"
    argv = ["simulate", name, "--seed", seed, "--trace", path, "--quiet"]
    if duration is not None:
        argv += ["--duration", duration]
    assert main([str(a) for a in argv]) == 0
    return path


def rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_simulate_prints_truth(tmp_path, capsys):
    code, out, _ = run(["simulate", "pursuit_basic", "--seed", 1, "--out", tmp_path], capsys)
    assert code == 0
    assert "truth intervals: 1" in out and "object 1" in out
    assert (tmp_path / "pursuit_basic_1.jsonl").is_file()


def test_simulate_blank_stare_empty_truth(tmp_path, capsys):
    p = simulate(tmp_path, "blank_stare", 2)
    assert len(read_trace(p).truth or ()) == 0


def test_simulate_same_seed_identical(tmp_path):
    a = simulate(tmp_path / "a", "jittery_pursuit", 4)
    b = simulate(tmp_path / "b", "jittery_pursuit", 4)
    assert a.read_bytes() == b.read_bytes()


def test_simulate_600s_has_18000_records(tmp_path):
    p = simulate(tmp_path, "multi_object_shift", 0, 600)
    tr = read_trace(p)
    assert len(tr.gaze) == 18000 and len(tr.frames) == 18000


def test_simulate_needs_seed(tmp_path, capsys):
    code, _, err = run(["simulate", "pursuit_basic", "--out", tmp_path], capsys)
    assert code == 2 and json.loads(err)["error"] == "usage"


def test_simulate_unknown_scenario(tmp_path, capsys):
    code, _, err = run(["simulate", "nope", "--seed", 1, "--out", tmp_path], capsys)
    msg = json.loads(err)
    assert code == 2 and "pursuit_basic" in msg["message"]


def test_simulate_invalid_spec_lists_field_paths(tmp_path, capsys):
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps({"duration": 2.0, "objects": [], "gaze_script": [
        {"kind": "follow_object", "duration": 2.0, "object": 3}]}))
    code, _, err = run(["simulate", spec, "--out", tmp_path], capsys)
    assert code == 2 and "gaze_script[0].object" in json.loads(err)["message"]


def test_run_eye_only_writes_all_reports(tmp_path, capsys):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    out = tmp_path / "rep"
    code, stdout, _ = run(["run", tr, "--method", "eye-only", "--out", out], capsys)
    assert code == 0
    summary = json.loads(stdout)
    assert set(summary) >= {"snippets", "TP", "FP", "FN", "alpha", "savings"}
    for name in ("snippets.csv", "decisions.csv", "metrics.csv", "energy.csv"):
        text = (out / name).read_text()
        assert text.startswith("# config_hash: ")
    hashes = {(out / n).read_text().splitlines()[0] for n in ("snippets.csv", "metrics.csv", "energy.csv")}
    assert len(hashes) == 1


def test_run_deterministic(tmp_path, capsys):
    tr = simulate(tmp_path, "jittery_pursuit", 1)
    for d in ("a", "b"):
        assert main(["run", str(tr), "--method", "eye-only", "--out", str(tmp_path / d), "--quiet"]) == 0
    for name in ("snippets.csv", "decisions.csv", "metrics.csv", "energy.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_config_hash_changes_with_config(tmp_path, capsys):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gate": {"T": 2.0}, "method": "eye-only"}))
    main(["run", str(tr), "--method", "eye-only", "--out", str(tmp_path / "a"), "--quiet"])
    main(["run", str(tr), "--config", str(cfg), "--out", str(tmp_path / "b"), "--quiet"])
    main(["run", str(tr), "--config", str(cfg), "--T", "1", "--out", str(tmp_path / "c"), "--quiet"])
    h = [(tmp_path / d / "energy.csv").read_text().splitlines()[0] for d in "abc"]
    assert h[0] != h[1] and h[0] == h[2]  # flags win over the config file


def test_run_missing_model_exit_2_names_path(tmp_path, capsys):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    missing = tmp_path / "no_model.json"
    code, _, err = run(["run", tr, "--method", "tva", "--model", missing, "--out", tmp_path], capsys)
    msg = json.loads(err)
    assert code == 2 and msg["path"] == str(missing) and str(missing) in msg["message"]


def test_run_corrupt_model_exit_2(tmp_path, capsys):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    bad = tmp_path / "m.json"
    bad.write_text("{}")
    code, _, err = run(["run", tr, "--model", bad, "--out", tmp_path], capsys)
    assert code == 2 and json.loads(err)["path"] == str(bad)


def test_bad_config_key_exit_2(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gate": {"TT": 1}}))
    code, _, err = run(["energy", "--pilot", "--config", cfg, "--out", tmp_path], capsys)
    assert code == 2 and "TT" in json.loads(err)["message"]


def test_unknown_flag_exit_2(capsys):
    code, _, err = run(["run", "--bogus"], capsys)
    assert code == 2 and json.loads(err)["exit_code"] == 2


def test_run_tva_pursuit_recall_one(tmp_path, capsys, model_path):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    code, out, _ = run(["run", tr, "--model", model_path, "--out", tmp_path / "r"], capsys)
    s = json.loads(out)
    assert code == 0 and s["snippets"] >= 1 and s["recall"] == 1.0


def test_run_tva_blank_stare_no_snippets(tmp_path, capsys, model_path):
    tr = simulate(tmp_path, "blank_stare", 0)
    code, out, _ = run(["run", tr, "--model", model_path, "--out", tmp_path / "r"], capsys)
    assert code == 0 and json.loads(out)["snippets"] == 0
    assert rows(tmp_path / "r" / "snippets.csv") == []


def test_sweep_two_traces_three_T(tmp_path, capsys):
    trs = [simulate(tmp_path, "pursuit_basic", s) for s in (0, 1)]
    out = tmp_path / "sw"
    code, _, _ = run(["sweep", *trs, "--method", "eye-only", "--T-values", "0.5,1,2", "--out", out], capsys)
    assert code == 0
    agg = rows(out / "sweep.csv")
    assert [float(r["T_seconds"]) for r in agg] == [0.5, 1.0, 2.0]
    per = rows(out / "sweep_per_trace.csv")
    assert len(per) == 6
    for name in {r["trace"] for r in per}:
        mine = [r for r in per if r["trace"] == name]
        a = [float(r["alpha"]) for r in mine]
        s = [float(r["savings"]) for r in mine]
        assert a == sorted(a, reverse=True) and s == sorted(s)


def test_sweep_single_T_rejected(tmp_path, capsys):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    code, _, _ = run(["sweep", tr, "--method", "eye-only", "--T-values", "1", "--out", tmp_path], capsys)
    assert code == 2


def test_train_same_seed_same_model(tmp_path, capsys):
    for d in ("a", "b"):
        argv = ["train", "--seed", 3, "--count", 4, "--epochs", 2, "--out", tmp_path / d, "--quiet"]
        assert main([str(a) for a in argv]) == 0
    assert (tmp_path / "a" / "model.json").read_bytes() == (tmp_path / "b" / "model.json").read_bytes()
    log = (tmp_path / "a" / "train_log.csv").read_text()
    assert "# split train/test/validation:" in log
    assert len([ln for ln in log.splitlines() if ln and not ln.startswith("#")]) == 3


def test_train_needs_seed(tmp_path, capsys):
    code, _, _ = run(["train", "--count", 2, "--out", tmp_path], capsys)
    assert code == 2


def test_train_degenerate_corpus_fails(tmp_path, capsys):
    corpus = tmp_path / "c.json"
    corpus.write_text(json.dumps({"count": 2, "seed": 0, "names": ["blank_stare"]}))
    code, _, err = run(["train", "--seed", 0, "--corpus", corpus, "--epochs", 1, "--out", tmp_path], capsys)
    assert code == 1 and "both classes" in json.loads(err)["message"]


def test_energy_pilot_eight_hours(tmp_path, capsys):
    code, out, _ = run(["energy", "--pilot", "--out", tmp_path], capsys)
    assert code == 0 and json.loads(out)["battery_hours"] == pytest.approx(8.0, rel=0.05)


def test_energy_worked_example_75_percent(tmp_path, capsys):
    params = tmp_path / "p.txt"
    text = default_params_text()
    for key, val in [("P_eye_camera", 0.05), ("P_world_camera", 0.5), ("P_eye_tracking", 0.05), ("P_fusion", 0.3),
                     ("P_encoding_storing", 0.4)]:
        text = "\n".join(f"{key} = {val}" if ln.startswith(key + " ") else ln for ln in text.splitlines())
    params.write_text(text + "\n")
    code, out, _ = run(["energy", "--params", params, "--always-on", 3600, "--fusion", 360, "--captured", 180,
                        "--out", tmp_path], capsys)
    s = json.loads(out)
    assert code == 0 and s["E_MemX"] == pytest.approx(810.0) and s["savings"] == pytest.approx(0.75)
    (r,) = rows(tmp_path / "energy.csv")
    assert float(r["savings"]) == pytest.approx(0.75)


def test_energy_zero_duty_battery(tmp_path, capsys):
    code, out, _ = run(["energy", "--always-on", 100, "--out", tmp_path], capsys)
    from attncap.energy import default_params

    p = default_params()
    assert json.loads(out)["battery_hours"] == pytest.approx(p.battery_capacity_Wh / p.powers.eye)


def test_energy_from_decision_log(tmp_path, capsys):
    tr = simulate(tmp_path, "pursuit_basic", 0)
    main(["run", str(tr), "--method", "eye-only", "--out", str(tmp_path / "r"), "--quiet"])
    code, out, _ = run(["energy", "--log", tmp_path / "r" / "decisions.csv", "--no-fusion-time", "--out",
                        tmp_path / "e"], capsys)
    assert code == 0
    a = float(rows(tmp_path / "r" / "energy.csv")[0]["savings"])
    assert json.loads(out)["savings"] == pytest.approx(a, rel=1e-12)


def test_energy_bad_params_exit_2(tmp_path, capsys):
    params = tmp_path / "p.txt"
    params.write_text(default_params_text() + "bogus = 1\n")
    code, _, err = run(["energy", "--pilot", "--params", params, "--out", tmp_path], capsys)
    msg = json.loads(err)
    assert code == 2 and "bogus" in msg["message"] and msg["path"] == str(params)


def test_validate(tmp_path, capsys):
    good = simulate(tmp_path, "pursuit_basic", 0)
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"kind":"meta","gaze_rate":30,"frame_rate":30}\n{"kind":"gaze","t":0,"x":2,"y":0,"valid":true}\n')
    code, out, _ = run(["validate", good], capsys)
    assert code == 0 and json.loads(out)["valid"] is True
    code, out, _ = run(["validate", good, bad], capsys)
    lines = [json.loads(ln) for ln in out.splitlines()]
    assert code == 1 and lines[-1]["valid"] is False and lines[-1]["violations"]
    code, _, err = run(["validate", tmp_path / "none.jsonl"], capsys)
    assert code == 2
