"""Command-line interface, exercised in process through main().

Exit code contract: 0 success, 1 usage, 2 data/configuration trouble,
3 undefined numerical results.
"""

import json

import pytest

from metric_thresholds.cli import main
from metric_thresholds.dataset import ClassRecord, Corpus, MetricId, SystemDataset, corpus_to_obj
from metric_thresholds.fixtures import data_path
from metric_thresholds.pipeline import read_corpus, write_json

TOY = str(data_path("toy_corpus.csv"))


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- usage ---------------------------------------------------------------------

def test_no_subcommand_prints_help_and_exits_one(capsys):
    code, _out, err = run(capsys, )
    assert code == 1
    assert "usage:" in err


def test_unknown_flag_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["load", "--corpus", TOY, "--frobnicate"])
    assert exc.value.code == 1
    assert "error:" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["transmogrify"])
    assert exc.value.code == 1


# --- load ----------------------------------------------------------------------

def test_load_normalizes_the_toy_corpus(tmp_path, capsys):
    target = tmp_path / "corpus.json"
    code, out, _err = run(
        capsys, "load", "--corpus", TOY, "--output", str(target)
    )
    assert code == 0
    assert f"wrote {target}" in out
    assert "36 datasets, 13 systems" in out
    assert read_corpus(target) == read_corpus(TOY)


def test_load_with_keyvalue_schema(tmp_path, capsys):
    csv_path = tmp_path / "odd.csv"
    csv_path.write_text(
        "proj,rel,cls,defects,cbo\n"
        + "".join(f"p,1.0,C{i},{i % 2},{i}\n" for i in range(12)),
        encoding="utf-8",
    )
    schema_path = tmp_path / "schema.txt"
    schema_path.write_text(
        "system=proj\nversion=rel\nclass=cls\nbugs=defects\nmetrics=cbo:CBO\n",
        encoding="utf-8",
    )
    code, out, _err = run(
        capsys,
        "load", "--corpus", str(csv_path), "--schema", str(schema_path),
        "--output", str(tmp_path / "out.json"),
    )
    assert code == 0
    assert "1 datasets, 1 systems, 12 classes" in out
    assert "CBO" in out


def test_missing_corpus_file_is_a_data_error(tmp_path, capsys):
    code, _out, err = run(
        capsys, "load", "--corpus", str(tmp_path / "gone.csv")
    )
    assert code == 2
    assert err.startswith("error:")


# --- numerical failures -----------------------------------------------------------

def test_all_clean_corpus_fails_with_exit_three(tmp_path, capsys):
    cbo = MetricId("CBO")
    datasets = tuple(
        SystemDataset(
            f"sys{k}",
            "1.0",
            0,
            tuple(
                ClassRecord(f"C{i}", {cbo: i + 1}, 0) for i in range(12)
            ),
        )
        for k in range(4)
    )
    path = tmp_path / "clean.json"
    write_json(corpus_to_obj(Corpus(datasets, (cbo,))), path)
    # the default correction needs a population defect ratio, which an
    # entirely clean corpus cannot provide
    code, _out, err = run(
        capsys, "fit", "--corpus", str(path),
        "--output-dir", str(tmp_path / "out"),
    )
    assert code == 3
    assert err.startswith("error:")


# --- correlate / estimate ----------------------------------------------------------

def test_correlate_rejects_malformed_increases(tmp_path, capsys):
    code, _out, err = run(
        capsys, "correlate", "--corpus", TOY,
        "--increases", "0.05,banana",
        "--output-dir", str(tmp_path),
    )
    assert code == 2
    assert "increases" in err


def test_estimate_without_size_linked_metrics_is_a_data_error(
    tmp_path, capsys, imbalance_corpus
):
    path = tmp_path / "imbalance.json"
    write_json(corpus_to_obj(imbalance_corpus), path)
    code, _out, err = run(
        capsys, "estimate", "--corpus", str(path),
        "--output-dir", str(tmp_path / "out"),
    )
    assert code == 2
    assert "screen" in err


# --- synth ----------------------------------------------------------------------

def test_synth_accepts_bundled_spec_names(tmp_path, capsys):
    target = tmp_path / "generated.csv"
    code, out, _err = run(
        capsys, "synth", "--spec", "planted_line", "--output", str(target)
    )
    assert code == 0
    assert target.is_file()
    assert "36 datasets" in out
    corpus = read_corpus(target)
    assert len(corpus) == 36


def test_synth_json_output_round_trips(tmp_path, capsys):
    csv_target = tmp_path / "a.csv"
    json_target = tmp_path / "b.json"
    assert run(capsys, "synth", "--spec", "single_system",
               "--output", str(csv_target))[0] == 0
    assert run(capsys, "synth", "--spec", "single_system",
               "--output", str(json_target))[0] == 0
    assert read_corpus(csv_target) == read_corpus(json_target)


def test_synth_unknown_spec_name(tmp_path, capsys):
    code, _out, err = run(
        capsys, "synth", "--spec", "no_such_spec",
        "--output", str(tmp_path / "x.csv"),
    )
    assert code == 2
    assert err.startswith("error:")


# --- fixture-estimate ----------------------------------------------------------------

def test_fixture_estimate_prints_json(capsys):
    code, out, _err = run(
        capsys, "fixture-estimate", "--metric", "CBO", "--size", "994"
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["threshold"] == 13
    assert payload["metric"] == "CBO"
    assert payload["raw"] == pytest.approx(13.21281, abs=1e-9)
    assert payload["clamped"] is False


def test_fixture_estimate_unknown_metric_names_the_alternatives(capsys):
    code, _out, err = run(
        capsys, "fixture-estimate", "--metric", "WMC", "--size", "500"
    )
    assert code == 2
    assert "CBO" in err  # the error lists what the fixture does cover


# --- pipeline -----------------------------------------------------------------------

def test_pipeline_command_writes_the_bundle(tmp_path, capsys):
    out_dir = tmp_path / "bundle"
    code, out, _err = run(
        capsys, "pipeline", "--corpus", TOY, "--output-dir", str(out_dir)
    )
    assert code == 0
    assert (out_dir / "run_meta.json").is_file()
    assert out.count("wrote ") == 13


def test_config_file_wins_over_flags(tmp_path, capsys):
    pinned = tmp_path / "pinned.json"
    pinned.write_text(json.dumps({"risk_increase": 0.05}), encoding="utf-8")
    out_dir = tmp_path / "bundle"
    code, _out, _err = run(
        capsys, "pipeline", "--corpus", TOY,
        "--output-dir", str(out_dir),
        "--risk-increase", "0.15",
        "--config", str(pinned),
    )
    assert code == 0
    meta = json.loads((out_dir / "run_meta.json").read_text())
    assert meta["config"]["risk_increase"] == 0.05


def test_no_correction_flag_changes_the_fit_output(tmp_path, capsys):
    a = tmp_path / "with"
    b = tmp_path / "without"
    assert run(capsys, "fit", "--corpus", TOY,
               "--output-dir", str(a))[0] == 0
    assert run(capsys, "fit", "--corpus", TOY,
               "--output-dir", str(b), "--no-correction")[0] == 0
    assert (a / "size_thresholds.csv").read_bytes() != (
        b / "size_thresholds.csv"
    ).read_bytes()
