import json

import pytest

from framecrf.cli import run_cli


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    assert run_cli(["synth", "--sentences", "200", "--seed", "3", "--out", str(out)]) == 0
    return out


def test_validate(synth_dir, capsys):
    code = run_cli(["validate", "--corpus", str(synth_dir / "corpus.jsonl"),
                    "--lexicon", str(synth_dir / "lexicon.json")])
    assert code == 0
    assert "200 sentences" in capsys.readouterr().out


def test_validate_failure(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"doc_id": "d", "source": "X", "sentences": [{"sent_id": "s", "tokens": []}]}\n')
    assert run_cli(["validate", "--corpus", str(bad)]) == 1
    assert "error" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [[], ["frobnicate"], ["train", "--corpus", "x"],
                                  ["validate"], ["train", "--corpus", "c", "--lexicon", "l", "--bogus"],
                                  ["train", "--corpus", "c", "--lexicon", "l", "--features", "lemma,syntax"]])
def test_usage_errors(argv, capsys, monkeypatch):
    monkeypatch.delenv("FRAMECRF_MODELS", raising=False)
    assert run_cli(argv) == 2
    captured = capsys.readouterr()
    assert captured.err and not captured.out


def test_missing_out_dir_is_usage_error(synth_dir, monkeypatch):
    monkeypatch.delenv("FRAMECRF_MODELS", raising=False)
    assert run_cli(["train", "--corpus", str(synth_dir / "corpus.jsonl"),
                    "--lexicon", str(synth_dir / "lexicon.json")]) == 2


def test_train_predict_evaluate(synth_dir, tmp_path, capsys):
    corpus, lexicon = str(synth_dir / "corpus.jsonl"), str(synth_dir / "lexicon.json")
    models = tmp_path / "models"
    assert run_cli(["train", "--corpus", corpus, "--lexicon", lexicon, "--out-dir", str(models),
                    "--max-iter", "40"]) == 0
    assert (models / "registry.json").is_file()
    cfg = json.loads((models / "run_config.json").read_text())
    assert cfg["flags"]["max_iter"] == 40 and corpus in cfg["inputs"]
    pred = tmp_path / "pred.jsonl"
    assert run_cli(["predict", "--models", str(models), "--corpus", corpus, "--out", str(pred)]) == 0
    diag = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
    assert diag["predicted"] > 0
    report = tmp_path / "report.json"
    assert run_cli(["evaluate", "--gold", corpus, "--pred", str(pred), "--lexicon", lexicon,
                    "--questions", str(synth_dir / "questions.tsv"), "--report", "json",
                    "--out", str(report)]) == 0
    obj = json.loads(report.read_text())
    assert set(obj["levels"]) == {"DC", "SC", "DR", "SR"}
    assert obj["levels"]["SR"]["fmeasure"] > 0.8


def test_self_evaluation_text(synth_dir, capsys):
    corpus = str(synth_dir / "corpus.jsonl")
    assert run_cli(["evaluate", "--gold", corpus, "--pred", corpus]) == 0
    out = capsys.readouterr().out
    rows = {line.split()[0]: line.split()[1:] for line in out.splitlines()[1:5]}
    assert set(rows) == {"DC", "SC", "DR", "SR"}
    assert all(vals == ["100.0"] * 3 for vals in rows.values())


def test_folds(synth_dir, tmp_path):
    corpus = str(synth_dir / "corpus.jsonl")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run_cli(["folds", "--corpus", corpus, "--k", "3", "--seed", "1", "--out", str(a)]) == 0
    assert run_cli(["folds", "--corpus", corpus, "--k", "3", "--seed", "1", "--out", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert set(json.loads(a.read_text())["assignment"].values()) == {0, 1, 2}


def test_ablate_and_compose(synth_dir, tmp_path):
    corpus, lexicon = str(synth_dir / "corpus.jsonl"), str(synth_dir / "lexicon.json")
    out = tmp_path / "abl"
    assert run_cli(["ablate", "--corpus", corpus, "--lexicon", lexicon, "--k", "2", "--max-iter", "15",
                    "--rows", "all features", "all but pos", "--out-dir", str(out)]) == 0
    res = json.loads((out / "results.json").read_text())
    assert [r["name"] for r in res["rows"]] == ["all features", "all but pos"]
    assert (out / "results.txt").read_text().startswith("Features")
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps({"test_source": "CLIO", "k": 2, "seed": 0,
                                "specs": [{"parts": [["WIKI", 0.5]]},
                                          {"parts": [["WIKI", 0.5], ["CLIO", 0.2]]}]}))
    out = tmp_path / "comp"
    assert run_cli(["compose", "--corpus", corpus, "--lexicon", lexicon, "--spec", str(spec),
                    "--max-iter", "15", "--out-dir", str(out)]) == 0
    res = json.loads((out / "results.json").read_text())
    assert len(res["rows"]) == 2 and all("train_size" in r for r in res["rows"])
