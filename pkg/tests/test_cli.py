"""End-to-end tests of the command-line interface and its run manifests."""

import json
from pathlib import Path

import pytest

from chemlinker.cli import main

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# --- exit codes and simple wrappers -----------------------------------------------


def test_canon(capsys):
    code, out, _ = run(capsys, "canon", "OCC")
    assert code == 0
    assert out.strip() == "CCO"


def test_domain_error_exits_1(capsys):
    code, _, err = run(capsys, "canon", "C(")
    assert code == 1
    assert "error:" in err


def test_unknown_flag_exits_2(capsys):
    assert run(capsys, "canon", "--bogus", "CC")[0] == 2


def test_unknown_subcommand_exits_2(capsys):
    assert run(capsys, "frobnicate")[0] == 2


def test_selfies_round_trip(capsys):
    code, tokens, _ = run(capsys, "selfies-encode", "Cc1ccc(O)cc1")
    assert code == 0
    code, out, _ = run(capsys, "selfies-decode", tokens.strip())
    assert code == 0
    assert out.strip() == "Cc1ccc(O)cc1"


def test_fp_schemes(capsys):
    code, out, _ = run(capsys, "fp", "CCO")
    assert code == 0
    assert out.startswith("circ2/2048:")
    code, out, _ = run(capsys, "fp", "CCO", "--scheme", "keys")
    assert code == 0
    assert out.startswith("keys-default-v1/64:")


# --- eval -------------------------------------------------------------------------


def test_eval_identical_files_all_ones(capsys, tmp_path):
    pred = tmp_path / "a.tsv"
    ref = tmp_path / "b.tsv"
    pred.write_text("CCO\nCCN\nc1ccccc1\n")
    ref.write_text("CCO\nCCN\nc1ccccc1\n")
    code, out, _ = run(capsys, "eval", "--pred", str(pred),
                       "--ref", str(ref))
    assert code == 0
    report = json.loads(out)
    for key in ("validity", "exact", "maccs_fts", "rdk_fts", "morgan_fts"):
        assert report[key] == 1.0


def test_eval_writes_report_and_manifest(capsys, tmp_path):
    pred = tmp_path / "a.tsv"
    pred.write_text("CCO\tCCO\nbad\tCCN\n")
    out_path = tmp_path / "report.json"
    code, _, _ = run(capsys, "eval", "--pred", str(pred),
                     "--out", str(out_path))
    assert code == 0
    report = json.loads(out_path.read_text())
    assert report["validity"] == 0.5
    manifest = json.loads((tmp_path / "report.json.manifest.json")
                          .read_text())
    assert manifest["subcommand"] == "eval"
    assert str(pred) in manifest["input_hashes"]
    assert manifest["version"]


# --- dataset ----------------------------------------------------------------------


def test_dataset_pipeline(capsys, tmp_path):
    out_tsv = tmp_path / "out.tsv"
    report = tmp_path / "report.json"
    code, out, _ = run(capsys, "dataset",
                       "--input", str(FIXTURES / "pubchem_20.tsv"),
                       "--output", str(out_tsv),
                       "--report", str(report))
    assert code == 0
    payload = json.loads(report.read_text())
    assert payload["pubchem"]["short_description"] == 2
    assert payload["pubchem"]["drop_phrase"] == 2
    assert payload["pubchem"]["one_to_many"] == 2
    lines = out_tsv.read_text().strip().splitlines()
    assert lines[0] == "CID\tSMILES\tdescription"
    # Descriptions with a leading "<name> is" clause are rewritten; the one
    # fixture record without such a clause is left as-is.
    rewritten = [ln.split("\t")[2].startswith("This molecule")
                 for ln in lines[1:]]
    assert sum(rewritten) == len(rewritten) - 1
    assert (tmp_path / "out.tsv.manifest.json").exists()


def test_dataset_sample_too_large_exits_1(capsys, tmp_path):
    code, _, err = run(capsys, "dataset",
                       "--input", str(FIXTURES / "pubchem_20.tsv"),
                       "--output", str(tmp_path / "out.tsv"),
                       "--sample", "999")
    assert code == 1
    assert "error:" in err


# --- train / generate -------------------------------------------------------------


@pytest.fixture(scope="module")
def tiny_checkpoint(tmp_path_factory):
    tmp_path = tmp_path_factory.mktemp("ckpt")
    data = tmp_path / "pairs.tsv"
    rows = ["CID\tSMILES\tdescription"]
    for i, smi in enumerate(["CCO", "CCN", "CCS", "CCCO", "CCCN"] * 4):
        rows.append(f"{i}\t{smi}\tmolecule written as "
                    + " ".join(smi))
    data.write_text("\n".join(rows) + "\n")
    return data, tmp_path / "model.ckpt"


def test_train_then_generate(capsys, tiny_checkpoint):
    data, ckpt = tiny_checkpoint
    code, out, _ = run(capsys, "train", "--data", str(data),
                       "--out", str(ckpt), "--steps", "5")
    assert code == 0
    assert "final loss" in out
    assert ckpt.exists()
    assert Path(str(ckpt) + ".vocab.json").exists()
    assert Path(str(ckpt) + ".manifest.json").exists()

    code, out, err = run(capsys, "generate", "--ckpt", str(ckpt),
                         "--text", "molecule written as C C O",
                         "--n", "2", "--seed", "7")
    assert code == 0
    molecules = out.strip().splitlines()
    assert len(molecules) == 2
    stats = json.loads(err.strip().splitlines()[-1])
    assert stats["success"] == 2

    # Same seed, same molecules: byte-identical reruns.
    code, out2, _ = run(capsys, "generate", "--ckpt", str(ckpt),
                        "--text", "molecule written as C C O",
                        "--n", "2", "--seed", "7")
    assert code == 0
    assert out2 == out


# --- consensus --------------------------------------------------------------------


def test_consensus_cli(capsys, tmp_path):
    scores = tmp_path / "s.csv"
    dirs = tmp_path / "d.json"
    out = tmp_path / "ecr.csv"
    scores.write_text("molecule_id,program,score\n"
                      "A,p1,-9.0\nB,p1,-8.0\nC,p1,-7.0\n"
                      "A,p2,-8.5\nB,p2,-9.5\nC,p2,-6.0\n")
    dirs.write_text('{"p1": "lower", "p2": "lower"}')
    code, out_text, _ = run(capsys, "consensus", "--scores", str(scores),
                            "--dirs", str(dirs), "--sigma", "1.0",
                            "--out", str(out),
                            "--background", str(FIXTURES / "impdh_ecr.json"))
    assert code == 0
    lines = out.read_text().strip().splitlines()
    assert lines[0] == "molecule_id,ecr"
    assert len(lines) == 4
    report = json.loads(out_text.strip().splitlines()[0])
    assert report["candidate_median"] == 0.00594
    assert (tmp_path / "ecr.csv.manifest.json").exists()


def test_consensus_empty_table_exits_1(capsys, tmp_path):
    scores = tmp_path / "s.csv"
    dirs = tmp_path / "d.json"
    scores.write_text("molecule_id,program,score\n")
    dirs.write_text('{"p1": "lower"}')
    code, _, err = run(capsys, "consensus", "--scores", str(scores),
                       "--dirs", str(dirs), "--out",
                       str(tmp_path / "o.csv"))
    assert code == 1
    assert "error:" in err
