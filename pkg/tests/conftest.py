import json

import pytest

from framecrf.corpus import (ROOT, Document, FrameInstance, FrameLexicon, RoleSpan, Sentence, Token)
from framecrf.synth import generate_synthetic_corpus

DECIDING_FES = ["Cognizer", "Decision", "Possibilities", "Explanation", "Time", "Place"]


def make_sentence(rows, frames=(), doc_id="d1", sent_id="s1"):
    """rows: (lemma, pos, head, deprel); form = lemma."""
    toks = tuple(Token(i, lem, lem, pos, head, rel) for i, (lem, pos, head, rel) in enumerate(rows))
    return Sentence(doc_id, sent_id, toks, tuple(frames))


@pytest.fixture
def small_lexicon():
    return FrameLexicon(
        {"découvrir": {"Becoming_aware"}, "décider": {"Deciding"},
         "attaque": {"Attack"}, "combattre": {"Hostile_encounter"}},
        {"Becoming_aware": {"Cognizer", "Phenomenon", "Time", "Place"},
         "Deciding": set(DECIDING_FES),
         "Attack": {"Assailant", "Victim", "Time"},
         "Hostile_encounter": {"Side_1", "Side_2", "Time"}},
    )


@pytest.fixture
def five_token_tree():
    # 0 <-suj- 2(root) -mod-> 3 -obj-> 4 ; 1 -det-> 0
    return make_sentence([
        ("armée", "NOUN", 2, "suj"),
        ("le", "DET", 0, "det"),
        ("attaquer", "VERB", ROOT, "root"),
        ("pendant", "ADP", 2, "mod"),
        ("nuit", "NOUN", 3, "obj"),
    ])


@pytest.fixture
def houchin():
    """Le premier Européen à avoir découvert Mammoth Cave était John Houchin, en 1797."""
    rows = [
        ("le", "DET", 2, "det"),            # 0
        ("premier", "ADJ", 2, "mod"),       # 1
        ("européen", "NOUN", 7, "suj"),     # 2
        ("à", "ADP", 2, "dep"),             # 3
        ("avoir", "AUX", 5, "aux"),         # 4
        ("découvrir", "VERB", 3, "obj"),    # 5
        ("Mammoth_Cave", "PROPN", 5, "obj"),  # 6
        ("être", "VERB", ROOT, "root"),     # 7
        ("John_Houchin", "PROPN", 7, "ats"),  # 8
        (",", "PUNCT", 7, "ponct"),         # 9
        ("en", "ADP", 7, "mod"),            # 10
        ("1797", "NUM", 10, "obj"),         # 11
        (".", "PUNCT", 7, "ponct"),         # 12
    ]
    frame = FrameInstance("découvrir", "Becoming_aware", (5,), (
        RoleSpan(0, 2, "Cognizer"), RoleSpan(6, 6, "Phenomenon"), RoleSpan(8, 8, "Cognizer"),
        RoleSpan(10, 11, "Time")))
    return make_sentence(rows, [frame])


@pytest.fixture
def lexicon_file(tmp_path, small_lexicon):
    path = tmp_path / "lexicon.json"
    path.write_text(json.dumps(small_lexicon.to_json(), ensure_ascii=False), encoding="utf-8")
    return path


@pytest.fixture(scope="session")
def synthetic_small():
    return generate_synthetic_corpus(300, seed=5)


@pytest.fixture(scope="session")
def golden_eval():
    """Hand-counted gold/prediction pair.

    Gold: two framed instances with 3 roles each and one OTHER instance.
    Prediction: every frame right; roles
      A  Cognizer exact, Phenomenon [5,5] inside gold [5,6], Place over gold Time [8,9]
      B  Cognizer exact, Decision [3,3] inside gold [3,4], Time [6,6] missed
    SR: tp 4, fp 1, fn 2     DR: tp 5, fp 0, fn 1     DC, SC: tp 2, fp 0, fn 0
    """
    rows = [("w", "NOUN", 2, "dep")] * 2 + [("v", "VERB", ROOT, "root")] + [("w", "NOUN", 2, "dep")] * 7
    gold_a = FrameInstance("découvrir", "Becoming_aware", (2,), (
        RoleSpan(0, 1, "Cognizer"), RoleSpan(5, 6, "Phenomenon"), RoleSpan(8, 9, "Time")))
    pred_a = gold_a.replace(roles=(
        RoleSpan(0, 1, "Cognizer"), RoleSpan(5, 5, "Phenomenon"), RoleSpan(8, 9, "Place")))
    gold_b = FrameInstance("décider", "Deciding", (2,), (
        RoleSpan(0, 0, "Cognizer"), RoleSpan(3, 4, "Decision"), RoleSpan(6, 6, "Time")))
    pred_b = gold_b.replace(roles=(RoleSpan(0, 0, "Cognizer"), RoleSpan(3, 3, "Decision")))
    other = FrameInstance("combattre", "OTHER", (2,))
    s1 = make_sentence(rows, [gold_a], sent_id="s1")
    s2 = make_sentence(rows, [gold_b], sent_id="s2")
    s3 = make_sentence(rows, [other], sent_id="s3")
    gold = [Document("d1", "X", (s1, s2, s3))]
    pred = [Document("d1", "X", (s1.with_frames([pred_a]), s2.with_frames([pred_b]),
                                 s3.with_frames([other])))]
    return gold, pred


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance
    if test_acceptance.RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(test_acceptance.RESULTS):
            terminalreporter.write_line(test_acceptance.RESULTS[n])
