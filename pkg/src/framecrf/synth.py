"""Deterministic template generator for small frame-annotated corpora.

The generated corpus is built so that every annotation can be recovered from
the five observation feature families:

* five LUs (verbs ``découvrir``, ``décider``, ``prendre``; nouns ``découverte``,
  ``attaque``), five frames plus OTHER;
* ``prendre`` is ambiguous, its frame is given by the next lemma
  (``d'assaut`` → Conquering, ``part`` → Participation, anything else → OTHER);
  ``se découvrir`` is OTHER;
* subject and object fillers come from one shared pool and a fraction of
  clauses use object-verb-subject order, so those two roles are only told
  apart by the dependency relation;
* targets occur as sentence roots and inside complement clauses;
* two sources (``WIKI`` and ``CLIO``) use disjoint nouns and different
  prepositions for time and place adjuncts.
"""

from __future__ import annotations

import random
from pathlib import Path

from .corpus import (OTHER, ROOT, Document, FrameInstance, FrameLexicon, RoleSpan, Sentence, Token,
                     write_corpus, write_lexicon)
from .evaluation import write_question_map

SOURCES = ("WIKI", "CLIO")

FRAMES = {
    "Becoming_aware": ("Cognizer", "Phenomenon", "Time", "Place"),
    "Deciding": ("Cognizer", "Decision", "Possibilities", "Explanation", "Time", "Place"),
    "Attack": ("Assailant", "Victim", "Time", "Place"),
    "Conquering": ("Conqueror", "Theme", "Time", "Place"),
    "Participation": ("Participant", "Event", "Time", "Place"),
}
LUS = {
    "découvrir": ("Becoming_aware",),
    "découverte": ("Becoming_aware",),
    "décider": ("Deciding",),
    "attaque": ("Attack",),
    "prendre": ("Conquering", "Participation"),
}
QUESTIONS = {
    "Cognizer": "who-agent", "Conqueror": "who-agent", "Assailant": "who-agent",
    "Participant": "who-agent", "Phenomenon": "what", "Decision": "what", "Theme": "what",
    "Victim": "what", "Event": "what", "Possibilities": "among-what", "Explanation": "why",
    "Time": "when", "Place": "where",
}

VOCAB = {
    "WIKI": {
        "nouns": ["armée", "peuple", "roi", "général", "empereur", "soldat", "archéologue",
                  "explorateur", "grotte", "tombe", "village", "forteresse", "ville", "trésor"],
        "time": ("en", None, ["1916", "1797", "1453", "1870", "1214", "1099"], "NUM"),
        "place": ("à", None, ["Verdun", "Paris", "Rome", "Athènes", "Carthage", "Reims"], "PROPN"),
    },
    "CLIO": {
        "nouns": ["député", "ministre", "ouvrier", "paysan", "préfet", "délégué", "usine",
                  "tranchée", "mairie", "caserne", "frontière", "archive", "syndicat", "journal"],
        "time": ("pendant", "le", ["guerre", "hiver", "printemps", "trêve", "grève", "nuit"], "NOUN"),
        "place": ("dans", "le", ["région", "capitale", "vallée", "province", "colonie", "plaine"], "NOUN"),
    },
}
EVENTS = ["bataille", "offensive", "conférence", "révolte", "campagne", "négociation"]
INFINITIVES = ["attaquer", "quitter", "défendre", "reconstruire", "fortifier", "abandonner"]
REASONS = ["sécurité", "famine", "honneur", "paix", "victoire", "vengeance"]
INTRANSITIVES = ["arriver", "partir", "rester", "reculer", "mourir", "résister"]
ADVERBS = ["ensuite", "alors", "finalement", "aussitôt"]


def synthetic_lexicon() -> FrameLexicon:
    return FrameLexicon({lu: frozenset(f) for lu, f in LUS.items()},
                        {f: frozenset(fes) for f, fes in FRAMES.items()})


def synthetic_question_map() -> dict[tuple[str, str], str]:
    return {(f, fe): QUESTIONS[fe] for f, fes in FRAMES.items() for fe in fes}


class _Builder:
    """Accumulates tokens with dependency links and frame annotations."""

    def __init__(self):
        self.tokens = []  # [lemma, pos, head, deprel]
        self.frames = []

    def add(self, lemma, pos, head=None, deprel="dep"):
        self.tokens.append([lemma, pos, head, deprel])
        return len(self.tokens) - 1

    def attach(self, i, head, deprel):
        self.tokens[i][2] = head
        self.tokens[i][3] = deprel

    def np(self, noun, head=None, deprel="dep", det="le", pos="NOUN"):
        """Determiner + noun; returns (noun index, start, end)."""
        start = len(self.tokens)
        if det is not None:
            self.add(det, "DET")
        n = self.add(noun, pos, head, deprel)
        if det is not None:
            self.attach(start, n, "det")
        return n, start, n

    def pp(self, prep, det, noun, noun_pos, head=None, deprel="mod"):
        p = self.add(prep, "ADP", head, deprel)
        _, _, end = self.np(noun, p, "obj", det=det, pos=noun_pos)
        return p, end

    def sentence(self, doc_id, sent_id):
        toks = tuple(Token(i, lem, lem, pos, ROOT if head is None else head, rel)
                     for i, (lem, pos, head, rel) in enumerate(self.tokens))
        assert sum(t.head == ROOT for t in toks) == 1, self.tokens
        return Sentence(doc_id, sent_id, toks, tuple(self.frames))


class SyntheticGenerator:
    """Templates over a seeded ``random.Random``.

    ``inversion_rate`` is the probability that a transitive clause is
    written object-verb-subject.
    """

    def __init__(self, seed: int = 0, inversion_rate: float = 0.3):
        self.rng = random.Random(seed)
        self.inversion_rate = inversion_rate

    # -- pieces -------------------------------------------------------------

    def noun(self, src):
        return self.rng.choice(VOCAB[src]["nouns"])

    def adjuncts(self, b, src, head, roles, allowed=("Time", "Place")):
        """Optional time / place PPs attached to ``head``."""
        for fe in allowed:
            if self.rng.random() < 0.5:
                prep, det, fillers, pos = VOCAB[src][fe.lower()]
                start = len(b.tokens)
                _, end = b.pp(prep, det, self.rng.choice(fillers), pos, head)
                roles.append(RoleSpan(start, end, fe))

    def clause_subject_object(self, b, src, verb_lemma, head, deprel, subj_fe, obj_fe, roles,
                              cue=None, allow_inversion=True):
        """NP V [cue] NP, possibly inverted; returns the verb index."""
        inverted = allow_inversion and self.rng.random() < self.inversion_rate
        first_n, fs, fe_ = b.np(self.noun(src))
        v = b.add(verb_lemma, "VERB", head, deprel)
        target = [v]
        if cue is not None:
            c = b.add(cue[0], cue[1], v, cue[2])
        second_n, ss, se = b.np(self.noun(src))
        first_rel, second_rel = ("obj", "suj") if inverted else ("suj", "obj")
        b.attach(first_n, v, first_rel)
        b.attach(second_n, v, second_rel)
        if subj_fe is not None:
            first_fe, second_fe = (obj_fe, subj_fe) if inverted else (subj_fe, obj_fe)
            roles.append(RoleSpan(fs, fe_, first_fe))
            roles.append(RoleSpan(ss, se, second_fe))
        return v, target

    # -- clause templates -------------------------------------------------------

    def verb_clause(self, b, src, head=None, deprel="root"):
        """A clause whose verb is an LU; appends its frame annotation."""
        roles = []
        kind = self.rng.choice(["découvrir", "découvrir", "décider", "prendre", "prendre"])
        if kind == "découvrir":
            if self.rng.random() < 0.15:
                n, _, _ = b.np(self.noun(src))
                se = b.add("se", "PRON")
                v = b.add("découvrir", "VERB", head, deprel)
                b.attach(n, v, "suj")
                b.attach(se, v, "obj")
                b.np(self.noun(src), v, "obj")
                b.frames.append(FrameInstance("découvrir", OTHER, (v,)))
                return v
            v, target = self.clause_subject_object(b, src, "découvrir", head, deprel,
                                                   "Cognizer", "Phenomenon", roles)
            self.adjuncts(b, src, v, roles)
            b.frames.append(FrameInstance("découvrir", "Becoming_aware", tuple(target), roles))
            return v
        if kind == "décider":
            n, s0, e0 = b.np(self.noun(src))
            v = b.add("décider", "VERB", head, deprel)
            b.attach(n, v, "suj")
            roles.append(RoleSpan(s0, e0, "Cognizer"))
            start = len(b.tokens)
            de = b.add("de", "ADP", v, "de_obj")
            inf = b.add(self.rng.choice(INFINITIVES), "VERB", de, "obj")
            _, _, end = b.np(self.noun(src), inf, "obj")
            roles.append(RoleSpan(start, end, "Decision"))
            if self.rng.random() < 0.4:
                start = len(b.tokens)
                _, end = b.pp("pour", "le", self.rng.choice(REASONS), "NOUN", v)
                roles.append(RoleSpan(start, end, "Explanation"))
            self.adjuncts(b, src, v, roles)
            b.frames.append(FrameInstance("décider", "Deciding", (v,), roles))
            return v
        # prendre: the following lemma selects the frame
        sense = self.rng.choice(["Conquering", "Conquering", "Participation", OTHER])
        if sense == "Conquering":
            v, target = self.clause_subject_object(b, src, "prendre", head, deprel, "Conqueror",
                                                   "Theme", roles, cue=("d'assaut", "ADV", "mod"))
            self.adjuncts(b, src, v, roles)
        elif sense == "Participation":
            n, s0, e0 = b.np(self.noun(src))
            v = b.add("prendre", "VERB", head, deprel)
            b.attach(n, v, "suj")
            target = [v]
            roles.append(RoleSpan(s0, e0, "Participant"))
            b.add("part", "NOUN", v, "obj")
            start = len(b.tokens)
            _, end = b.pp("à", "le", self.rng.choice(EVENTS), "NOUN", v, "a_obj")
            roles.append(RoleSpan(start, end, "Event"))
            self.adjuncts(b, src, v, roles, allowed=("Time",))
        else:
            v, target = self.clause_subject_object(b, src, "prendre", head, deprel, None, None, roles,
                                                   allow_inversion=False)
        b.frames.append(FrameInstance("prendre", sense, tuple(target), roles))
        return v

    def noun_root(self, b, src):
        roles = []
        lu = self.rng.choice(["attaque", "découverte"])
        t = b.add(lu, "NOUN", None, "root")
        start = len(b.tokens)
        _, end = b.pp("de", "le", self.noun(src), "NOUN", t, "dep")
        if lu == "attaque":
            roles.append(RoleSpan(start, end, "Assailant"))
            start = len(b.tokens)
            _, end = b.pp("contre", "le", self.noun(src), "NOUN", t, "mod")
            roles.append(RoleSpan(start, end, "Victim"))
            frame = "Attack"
        else:
            roles.append(RoleSpan(start, end, "Phenomenon"))
            if self.rng.random() < 0.7:
                start = len(b.tokens)
                _, end = b.pp("par", "le", self.noun(src), "NOUN", t, "p_obj")
                roles.append(RoleSpan(start, end, "Cognizer"))
            frame = "Becoming_aware"
        self.adjuncts(b, src, t, roles, allowed=("Time",))
        b.frames.append(FrameInstance(lu, frame, (t,), roles))
        return t

    def noun_non_root(self, b, src):
        roles = []
        n, s0, e0 = b.np(self.noun(src))
        if self.rng.random() < 0.5:
            v = b.add("lancer", "VERB", None, "root")
            b.attach(n, v, "suj")
            roles.append(RoleSpan(s0, e0, "Assailant"))
            _, _, t = b.np("attaque", v, "obj")
            start = len(b.tokens)
            _, end = b.pp("contre", "le", self.noun(src), "NOUN", t, "mod")
            roles.append(RoleSpan(start, end, "Victim"))
            self.adjuncts(b, src, v, roles, allowed=("Time",))
            b.frames.append(FrameInstance("attaque", "Attack", (t,), roles))
        else:
            v = b.add("annoncer", "VERB", None, "root")
            b.attach(n, v, "suj")
            _, _, t = b.np("découverte", v, "obj")
            start = len(b.tokens)
            _, end = b.pp("de", "le", self.noun(src), "NOUN", t, "dep")
            roles.append(RoleSpan(start, end, "Phenomenon"))
            b.frames.append(FrameInstance("découverte", "Becoming_aware", (t,), roles))
        return v

    def coordinated(self, b, src, root):
        """``et NP V`` attached to the root; the verb is sometimes ``décider``."""
        et = b.add("et", "CCONJ", root, "coord")
        if self.rng.random() < 0.25:
            self.verb_clause_decider(b, src, et)
            return
        n, _, _ = b.np(self.noun(src))
        v = b.add(self.rng.choice(INTRANSITIVES), "VERB", et, "dep_coord")
        b.attach(n, v, "suj")

    def verb_clause_decider(self, b, src, head):
        n, s0, e0 = b.np(self.noun(src))
        v = b.add("décider", "VERB", head, "dep_coord")
        b.attach(n, v, "suj")
        roles = [RoleSpan(s0, e0, "Cognizer")]
        start = len(b.tokens)
        de = b.add("de", "ADP", v, "de_obj")
        b.add(self.rng.choice(INTRANSITIVES), "VERB", de, "obj")
        roles.append(RoleSpan(start, start + 1, "Decision"))
        b.frames.append(FrameInstance("décider", "Deciding", (v,), roles))

    def sentence(self, src, doc_id, sent_id) -> Sentence:
        b = _Builder()
        lead = None
        if self.rng.random() < 0.2:
            lead = b.add(self.rng.choice(ADVERBS), "ADV")
        shape = self.rng.random()
        if shape < 0.5:
            root = self.verb_clause(b, src)
        elif shape < 0.7:
            n, _, _ = b.np(self.noun(src))
            root = b.add("affirmer", "VERB", None, "root")
            b.attach(n, root, "suj")
            que = b.add("que", "SCONJ", root, "obj")
            self.verb_clause(b, src, que, "obj.cpl")
        elif shape < 0.85:
            root = self.noun_non_root(b, src)
        else:
            root = self.noun_root(b, src)
        for _ in range(self.rng.choice([0, 0, 1, 1, 2, 3])):
            self.coordinated(b, src, root)
        if lead is not None:
            b.attach(lead, root, "mod")
        b.add(".", "PUNCT", root, "ponct")
        return b.sentence(doc_id, sent_id)

    def corpus(self, n_sentences: int, sources=SOURCES, weights=(0.6, 0.4)) -> list[Document]:
        if n_sentences < 10:
            raise ValueError("n_sentences must be >= 10")
        docs = []
        counters = {s: 0 for s in sources}
        produced = 0
        while produced < n_sentences:
            src = self.rng.choices(sources, weights=weights)[0]
            counters[src] += 1
            doc_id = f"{src}-{counters[src]:04d}"
            size = min(self.rng.randint(8, 24), n_sentences - produced)
            sents = tuple(self.sentence(src, doc_id, f"s{i:03d}") for i in range(size))
            docs.append(Document(doc_id, src, sents))
            produced += size
        return docs


def generate_synthetic_corpus(n_sentences: int, seed: int = 0, inversion_rate: float = 0.3):
    """Return ``(corpus, lexicon, question map)``."""
    corpus = SyntheticGenerator(seed, inversion_rate).corpus(n_sentences)
    return corpus, synthetic_lexicon(), synthetic_question_map()


def write_synthetic(out_dir, n_sentences: int, seed: int = 0, inversion_rate: float = 0.3) -> dict:
    """Write ``corpus.jsonl``, ``lexicon.json`` and ``questions.tsv`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    corpus, lexicon, qmap = generate_synthetic_corpus(n_sentences, seed, inversion_rate)
    paths = {"corpus": out / "corpus.jsonl", "lexicon": out / "lexicon.json",
             "questions": out / "questions.tsv"}
    write_corpus(corpus, paths["corpus"])
    write_lexicon(lexicon, paths["lexicon"])
    write_question_map(qmap, paths["questions"])
    return paths
