import json
from pathlib import Path

import pytest

from conftest import REPO, SCENARIOS
from martlab.cli import main
from martlab.martingale import random_fair_table, table_to_text

STAGE0 = str(SCENARIOS / "stage0_minimal.json")
TINY = str(SCENARIOS / "tiny_fairness.json")
S3 = str(SCENARIOS / "acceptance_s3.json")
UNFAIR = str(REPO / "tests" / "fixtures" / "unfair_scenario.json")


def test_validate_ok(capsys):
    assert main(["validate", STAGE0]) == 0
    out = capsys.readouterr().out
    assert "config:" in out and "PASS" in out


def test_validate_unfair_scenario_exits_1(capsys):
    assert main(["validate", UNFAIR]) == 1
    assert "crooked" in capsys.readouterr().out


def test_validate_missing_file_exits_2(capsys):
    with pytest.raises(SystemExit) as err:
        main(["validate", "does_not_exist.json"])
    assert err.value.code == 2


def test_search_lists_safe_extensions(tmp_path, capsys):
    table = tmp_path / "f.mart"
    table.write_text(table_to_text(random_fair_table(4, seed=3)))
    assert main(["search", "--table", str(table), "--stem", "", "--level", "1"]) == 0
    out = capsys.readouterr().out
    assert "safe extension" in out


def test_search_rejects_zero_capital_stem(tmp_path, capsys):
    from martlab.martingale import doubling_on_zero

    table = tmp_path / "f.mart"
    table.write_text(table_to_text(doubling_on_zero(3)))
    assert main(["search", "--table", str(table), "--stem", "1", "--level", "0"]) == 1


def test_search_missing_table_exits_2(capsys):
    assert main(["search", "--table", "nope.mart"]) == 2


def test_construct_writes_outputs(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["construct", STAGE0, "--out", str(out)]) == 0
    assert (out / "beta.txt").read_text().strip() == "0101"
    assert (out / "trace.csv").exists()
    assert (out / "mixture.txt").exists()
    result = json.loads((out / "result.json").read_text())
    assert result["beta"] == "0101"
    assert result["t_values"] == [1]


def test_construct_alpha_too_short_exits_1(tmp_path, capsys):
    doc = {
        "version": 1,
        "alpha": {"kind": "explicit", "bits": ""},
        "candidates": [{"name": "flat", "program": "(const 1)", "total": True}],
        "stages": 0,
        "eval_set": "prefix",
        "step_budget": 1000,
    }
    scenario = tmp_path / "short.json"
    scenario.write_text(json.dumps(doc))
    out = tmp_path / "run"
    assert main(["construct", str(scenario), "--out", str(out)]) == 1
    assert "lengthen" in capsys.readouterr().err


def test_s3_beta_length(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["construct", S3, "--out", str(out)]) == 0
    assert len((out / "beta.txt").read_text().strip()) == 28


def test_decode_round(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["construct", STAGE0, "--out", str(out)]) == 0
    assert main(["decode", STAGE0, "--run", str(out)]) == 0
    printed = capsys.readouterr().out
    assert "decoded totality flags: 1" in printed
    capital = (out / "capital.csv").read_text()
    assert capital.endswith("1,2/1\n")
    assert (out / "replay.csv").exists()


def test_construct_decode_golden_determinism(tmp_path):
    files = ["beta.txt", "trace.csv", "mixture.txt", "result.json", "replay.csv", "capital.csv"]
    outputs = []
    for name in ("one", "two"):
        out = tmp_path / name
        assert main(["construct", S3, "--out", str(out)]) == 0
        assert main(["decode", S3, "--run", str(out)]) == 0
        outputs.append({f: (out / f).read_bytes() for f in files})
    assert outputs[0] == outputs[1]


def test_decode_without_result_json_needs_alpha_len(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["construct", STAGE0, "--out", str(out)]) == 0
    (out / "result.json").unlink()
    assert main(["decode", STAGE0, "--run", str(out)]) == 2
    assert main(["decode", STAGE0, "--run", str(out), "--alpha-len", "1"]) == 0


def test_roundtrip_seeded(capsys):
    assert main(["roundtrip", "--seed", "5", "--depth", "6", "--rect", "4"]) == 0
    out = capsys.readouterr().out
    assert out.count("PASS") == 2


def test_roundtrip_table_file(tmp_path, capsys):
    table = tmp_path / "f.mart"
    table.write_text(table_to_text(random_fair_table(4, seed=8)))
    assert main(["roundtrip", "--table", str(table), "--rect", "3"]) == 0


def test_check_passes_on_shipped_scenario(capsys):
    assert main(["check", TINY]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert out.count("PASS") >= 8


def test_check_fails_on_unfair_scenario(capsys):
    assert main(["check", UNFAIR]) == 1
    assert "FAIL" in capsys.readouterr().out


def test_check_output_is_identical_across_runs(capsys):
    assert main(["check", TINY]) == 0
    first = capsys.readouterr().out
    assert main(["check", TINY]) == 0
    assert capsys.readouterr().out == first


def test_report_renders_figures(tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["construct", STAGE0, "--out", str(out)]) == 0
    assert main(["decode", STAGE0, "--run", str(out)]) == 0
    assert main(["report", "--run", str(out)]) == 0
    assert (out / "stages.png").stat().st_size > 0
    assert (out / "capital.png").stat().st_size > 0


def test_report_separate_out_dir(tmp_path):
    run = tmp_path / "run"
    figs = tmp_path / "figs"
    assert main(["construct", STAGE0, "--out", str(run)]) == 0
    assert main(["report", "--run", str(run), "--out", str(figs)]) == 0
    assert (figs / "stages.png").exists()


def test_report_on_empty_dir_exits_2(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    assert main(["report", "--run", str(empty)]) == 2


def test_unknown_subcommand_exits_2():
    with pytest.raises(SystemExit) as err:
        main(["frobnicate"])
    assert err.value.code == 2
