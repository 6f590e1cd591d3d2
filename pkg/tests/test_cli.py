import json

from margolab.cli import dispatch

from conftest import DEMO, GOLDEN


def run(capsys, *argv):
    code = dispatch([str(a) for a in argv])
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_validate_rule_identity(capsys):
    code, out, _ = run(capsys, "validate-rule", DEMO / "identity.rule")
    assert code == 0
    assert out.strip() == "valid, 16 fixed points"


def test_validate_rule_invalid_exits_1(tmp_path, capsys):
    bad = tmp_path / "bad.rule"
    bad.write_text("alphabet: 0 1\nquiescent: 0\ndim: 2\neven: 0 0 0 1 -> 0 0 0 0\n")
    code, out, _ = run(capsys, "validate-rule", bad)
    assert code == 1
    assert "invalid" in out


def test_unknown_subcommand_exits_2(capsys):
    code, _, _ = run(capsys, "frobnicate")
    assert code == 2


def test_missing_file_exits_2(capsys):
    code, _, err = run(capsys, "validate-rule", "no_such_file.rule")
    assert code == 2
    assert "error" in err


def test_search_not_found_exit_1(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, _ = run(
        capsys,
        "search",
        "--rule", DEMO / "identity.rule",
        "--torus", "8 x 8",
        "--target", "(0,0)",
        "--beta", "NOT",
        "--halo", "(1,0) (0,1) (1,1)",
        "--tmax", "4",
        "--out", out_path,
    )
    assert code == 1
    doc = json.loads(out_path.read_text())
    assert doc["outcome"] == "not-found"
    assert doc["note"].startswith("not-found reflects")


def test_search_found_exit_0(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, _ = run(
        capsys,
        "search",
        "--rule", DEMO / "collide.rule",
        "--torus", "8 x 8",
        "--target", "(2,0)",
        "--beta", "CONST1",
        "--halo", "(0,0) (1,0)",
        "--tmax", "2",
        "--out", out_path,
    )
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["outcome"] == "found"
    assert doc["program"] == {"time": 2, "non_quiescent_cells": {"(0,0)": "1"}, "torus_only": False}
    assert doc["candidates_tested"] == 9
    assert "wall_time_s" in doc


def test_search_cap_exceeded_exit_2(tmp_path, capsys):
    out_path = tmp_path / "report.json"
    code, _, _ = run(
        capsys,
        "search",
        "--rule", DEMO / "identity.rule",
        "--torus", "8 x 8",
        "--target", "(0,0)",
        "--beta", "ID",
        "--halo", "(1,0) (0,1)",
        "--tmax", "1",
        "--max-candidates", "3",
        "--out", out_path,
    )
    assert code == 2
    assert json.loads(out_path.read_text())["outcome"] == "cap-exceeded"


def test_search_threads_flag_changes_nothing(tmp_path, capsys):
    args = [
        "search",
        "--rule", DEMO / "collide.rule",
        "--torus", "8 x 8",
        "--target", "(2,0)",
        "--beta", "CONST1",
        "--halo", "(0,0) (1,0) (3,0)",
        "--tmax", "2",
    ]
    a, b = tmp_path / "seq.json", tmp_path / "par.json"
    code1, _, _ = run(capsys, *args, "--threads", "1", "--out", a)
    code2, _, _ = run(capsys, *args, "--threads", "2", "--out", b)
    assert code1 == code2 == 0
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("wall_time_s"), db.pop("wall_time_s")
    assert da == db


def test_search_reports_deterministic_modulo_timing(tmp_path, capsys):
    args = [
        "search",
        "--rule", DEMO / "collide.rule",
        "--torus", "8 x 8",
        "--target", "(2,0)",
        "--beta", "CONST1",
        "--halo", "(0,0) (1,0)",
        "--tmax", "2",
    ]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, *args, "--out", a)
    run(capsys, *args, "--out", b)
    da, db = json.loads(a.read_text()), json.loads(b.read_text())
    da.pop("wall_time_s"), db.pop("wall_time_s")
    assert da == db


def test_survey_collide(tmp_path, capsys):
    out_path = tmp_path / "survey.json"
    code, _, _ = run(
        capsys,
        "survey",
        "--rule", DEMO / "collide.rule",
        "--torus", "8 x 8",
        "--target", "(2,0)",
        "--halo", "(0,0) (1,0)",
        "--tmax", "2",
        "--out", out_path,
    )
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["coverage"]["ID"]["outcome"] == "found"
    assert doc["coverage"]["CONST1"]["outcome"] == "found"
    assert doc["coverage"]["NOT"]["outcome"] == "not-found"


def test_induced_map_command(tmp_path, capsys):
    config = tmp_path / "c.config"
    config.write_text("torus: 8 x 8\nalphabet: 0 1\nquiescent: 0\ncell (1,0) = 1\n")
    out_path = tmp_path / "map.json"
    code, _, _ = run(
        capsys,
        "induced-map",
        "--rule", DEMO / "nogo.rule",
        "--config", config,
        "--target", "(0,0) (2,0)",
        "--time", "1",
        "--out", out_path,
    )
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert doc["table"] == {"0 0": "1 0", "0 1": "1 1", "1 0": "0 0", "1 1": "0 1"}
    assert doc["torus_only"] is False


def test_macro_check_satisfied_and_violated(tmp_path, capsys):
    good = tmp_path / "good.config"
    good.write_text("torus: 8 x 8\nalphabet: 0 1\nquiescent: 0\ncell (1,0) = 1\n")
    code, out, _ = run(
        capsys,
        "macro-check",
        "--config", good,
        "--partition", DEMO / "nogo.partition",
        "--constraints", DEMO / "nogo.constraints",
    )
    assert code == 0
    assert json.loads(out)["satisfied"] is True

    bad = tmp_path / "bad.config"
    lines = ["torus: 8 x 8", "alphabet: 0 1", "quiescent: 0", "cell (1,0) = 1"]
    lines += [f"cell ({x},3) = 1" for x in range(8)]  # a full marked row inside R3
    bad.write_text("\n".join(lines) + "\n")
    code, out, _ = run(
        capsys,
        "macro-check",
        "--config", bad,
        "--partition", DEMO / "nogo.partition",
        "--constraints", DEMO / "nogo.constraints",
        "--slack", "1/8",
    )
    assert code == 1
    doc = json.loads(out)
    assert doc["satisfied"] is False
    assert doc["violation"]["region"] == "R3"


def test_nogo_demo_matches_golden_byte_for_byte(tmp_path, capsys):
    out_path = tmp_path / "witness.json"
    code, _, _ = run(
        capsys,
        "nogo-demo",
        "--rule", DEMO / "nogo.rule",
        "--partition", DEMO / "nogo.partition",
        "--epsilon", "1/2",
        "--out", out_path,
    )
    assert code == 0
    assert out_path.read_bytes() == (GOLDEN / "nogo_witness.json").read_bytes()


def test_nogo_demo_with_constraint_file_matches_derived(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(
        capsys,
        "nogo-demo",
        "--rule", DEMO / "nogo.rule",
        "--partition", DEMO / "nogo.partition",
        "--epsilon", "1/2",
        "--out", a,
    )
    code, _, _ = run(
        capsys,
        "nogo-demo",
        "--rule", DEMO / "nogo.rule",
        "--partition", DEMO / "nogo.partition",
        "--epsilon", "1/2",
        "--constraints", DEMO / "nogo.constraints",
        "--out", b,
    )
    assert code == 0
    assert a.read_bytes() == b.read_bytes()


def test_nogo_demo_not_found_exit_1(tmp_path, capsys):
    out_path = tmp_path / "witness.json"
    code, _, _ = run(
        capsys,
        "nogo-demo",
        "--rule", DEMO / "identity.rule",
        "--partition", DEMO / "nogo.partition",
        "--epsilon", "1/2",
        "--out", out_path,
    )
    assert code == 1
    doc = json.loads(out_path.read_text())
    assert doc["outcome"] == "not-found"


def test_render_one_axis_trajectory(tmp_path, capsys):
    rule = tmp_path / "swap.rule"
    rule.write_text(
        "alphabet: 0 1\nquiescent: 0\ndim: 1\neven: 0 1 -> 1 0\neven: 1 0 -> 0 1\nodd: same\n"
    )
    config = tmp_path / "line.config"
    config.write_text("torus: 6\nalphabet: 0 1\nquiescent: 0\ncell (1) = 1\n")
    traj = tmp_path / "traj.txt"
    code, _, _ = run(capsys, "simulate", "--rule", rule, "--config", config, "--steps", "2", "--out", traj)
    assert code == 0
    code, out, _ = run(capsys, "render", "--trajectory", traj)
    assert code == 0
    assert "0 1 0 0 0 0" in out  # initial line
    assert "1 0 0 0 0 0" in out  # after the even swap


def test_simulate_then_render_roundtrip(tmp_path, capsys):
    traj = tmp_path / "traj.txt"
    code, _, _ = run(
        capsys,
        "simulate",
        "--rule", DEMO / "collide.rule",
        "--config", DEMO / "marker.config",
        "--steps", "3",
        "--out", traj,
    )
    assert code == 0
    code, out, _ = run(capsys, "render", "--trajectory", traj, "--pgm", tmp_path / "frame")
    assert code == 0
    assert "--- step 0 (initial) ---" in out
    assert "--- step 3 (even) ---" in out
    pgm = (tmp_path / "frame_000.pgm").read_text().splitlines()
    assert pgm[0] == "P2" and pgm[1] == "8 8"


def test_quantum_demo(tmp_path, capsys):
    out_path = tmp_path / "qdemo.json"
    code, _, _ = run(capsys, "quantum-demo", "--cells", "6", "--trials", "5", "--out", out_path)
    assert code == 0
    doc = json.loads(out_path.read_text())
    assert all(doc["checks"].values())
    assert doc["robustness"]["failures"] == 0


def test_quantum_demo_seeded_runs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "quantum-demo", "--cells", "6", "--trials", "5", "--seed", "9", "--out", a)
    run(capsys, "quantum-demo", "--cells", "6", "--trials", "5", "--seed", "9", "--out", b)
    assert a.read_bytes() == b.read_bytes()


def test_reports_embed_rule_hash_and_version(tmp_path, capsys):
    from margolab import __version__

    out_path = tmp_path / "witness.json"
    run(
        capsys,
        "nogo-demo",
        "--rule", DEMO / "nogo.rule",
        "--partition", DEMO / "nogo.partition",
        "--epsilon", "1/2",
        "--out", out_path,
    )
    doc = json.loads(out_path.read_text())
    assert doc["tool_version"] == __version__
    assert len(doc["rule_hash"]) == 64
