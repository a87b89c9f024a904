import json

import pytest

from framecrf.corpus import OTHER, iter_lu_occurrences, iter_sentences, parse_corpus
from framecrf.crf import TrainHyper
from framecrf.evaluation import evaluate_levels
from framecrf.pipeline import (ModelRegistry, model_filename, predict_corpus, predict_sentence,
                               train_all)


@pytest.fixture(scope="module")
def trained(synthetic_small):
    corpus, lexicon, _ = synthetic_small
    return train_all(corpus, lexicon, hyper=TrainHyper(max_iter=60))


def test_one_model_per_lu(trained, synthetic_small):
    corpus, lexicon, _ = synthetic_small
    seen = {f.lu for s in iter_sentences(corpus) for f in s.frames}
    assert set(trained.models) == seen
    for lu, m in trained.models.items():
        assert m.label_set.lu == lu and m.config == trained.config


def test_lu_without_instances_is_skipped(synthetic_small, caplog):
    from framecrf.corpus import FrameLexicon
    corpus, lexicon, _ = synthetic_small
    extra = FrameLexicon({**lexicon.lu_to_frames, "inexistant": {"Attack"}}, lexicon.frame_to_fes)
    docs = corpus[:3]
    reg = train_all(docs, extra, hyper=TrainHyper(max_iter=5))
    assert "inexistant" not in reg
    assert "inexistant" in caplog.text


def test_predictions_are_licensed(trained, synthetic_small):
    corpus, lexicon, _ = synthetic_small
    pred, diag = predict_corpus(corpus, trained)
    n_pred = 0
    for s in iter_sentences(pred):
        for inst in s.frames:
            n_pred += 1
            inventory = lexicon.fes_for(inst.frame)
            assert all(r.fe in inventory for r in inst.roles)
            if inst.frame == OTHER:
                assert inst.roles == ()
    assert n_pred == diag["predicted"] == diag["occurrences"] - diag["skipped_lu"]


def test_every_occurrence_gets_an_instance(trained, synthetic_small):
    corpus, lexicon, _ = synthetic_small
    pred, _ = predict_corpus(corpus, trained)
    for gs, ps in zip(iter_sentences(corpus), iter_sentences(pred)):
        assert ps.tokens == gs.tokens
        occ = [(lu, tuple(t)) for lu, t in iter_lu_occurrences(gs, lexicon)]
        assert [(i.lu, i.target) for i in ps.frames] == occ


def test_two_lus_in_one_sentence(trained, synthetic_small):
    corpus, lexicon, _ = synthetic_small
    multi = next(s for s in iter_sentences(corpus)
                 if len({lu for lu, _ in iter_lu_occurrences(s, lexicon)}) >= 2)
    out = predict_sentence(multi, trained)
    assert len(out) == len(iter_lu_occurrences(multi, lexicon))
    assert len({i.lu for i in out}) >= 2


def test_training_fit(trained, synthetic_small):
    corpus, lexicon, _ = synthetic_small
    pred, _ = predict_corpus(corpus, trained)
    report = evaluate_levels(corpus, pred, lexicon)
    assert report.levels["SC"].fmeasure > 0.95
    assert report.levels["SR"].fmeasure > 0.9


def test_registry_round_trip(tmp_path, trained, synthetic_small):
    corpus = synthetic_small[0]
    trained.save(tmp_path / "m")
    meta = json.loads((tmp_path / "m" / "registry.json").read_text())
    assert set(meta) == {"lexicon_sha256", "lexicon", "feature_config", "lus"}
    for lu, name in meta["lus"].items():
        assert name == model_filename(lu) and (tmp_path / "m" / name).is_file()
    again = ModelRegistry.load(tmp_path / "m")
    a, _ = predict_corpus(corpus, trained)
    b, _ = predict_corpus(corpus, again)
    assert a == b
    again.save(tmp_path / "m2")
    for name in meta["lus"].values():
        assert (tmp_path / "m" / name).read_bytes() == (tmp_path / "m2" / name).read_bytes()


def test_registry_rejects_tampered_lexicon(tmp_path, trained):
    trained.save(tmp_path / "m")
    path = tmp_path / "m" / "registry.json"
    meta = json.loads(path.read_text())
    meta["lexicon"]["lus"]["nouveau"] = ["Attack"]
    path.write_text(json.dumps(meta))
    with pytest.raises(ValueError, match="hash"):
        ModelRegistry.load(tmp_path / "m")


def test_predict_writes_corpus_and_is_job_independent(tmp_path, trained, synthetic_small):
    corpus = synthetic_small[0]
    p1, d1 = predict_corpus(corpus, trained, out_path=tmp_path / "a.jsonl", jobs=1)
    p2, d2 = predict_corpus(corpus, trained, out_path=tmp_path / "b.jsonl", jobs=2)
    assert p1 == p2 and d1 == d2
    assert (tmp_path / "a.jsonl").read_bytes() == (tmp_path / "b.jsonl").read_bytes()
    assert parse_corpus(tmp_path / "a.jsonl") == p1


def test_model_filename_sanitised():
    assert model_filename("prendre part") == "prendre_part.model.json"
    assert model_filename("a/b") == "a_b.model.json"
