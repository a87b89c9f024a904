"""Data model and JSON-lines readers for frame-annotated, dependency-parsed text.

A corpus file holds one document per line::

    {"doc_id": ..., "source": ..., "sentences": [
        {"sent_id": ..., "tokens": [{"form", "lemma", "pos", "head", "deprel"}, ...],
         "frames": [{"lu", "frame", "target": [idx, ...],
                     "roles": [{"fe", "start", "end"}, ...]}, ...]}]}

``head`` is the 0-based index of the governor, ``-1`` for the root.  A lexicon
file is a single object ``{"lus": {lu: [frame, ...]}, "frames": {frame: [fe, ...]}}``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

ROOT = -1
OTHER = "OTHER"


class CorpusError(ValueError):
    """Raised when a corpus or lexicon record violates the data model."""


@dataclass(frozen=True)
class Token:
    index: int
    form: str
    lemma: str
    pos: str
    head: int
    deprel: str


@dataclass(frozen=True, order=True)
class RoleSpan:
    start: int
    end: int
    fe: str

    def __len__(self):
        return self.end - self.start + 1

    def tokens(self) -> range:
        return range(self.start, self.end + 1)


@dataclass(frozen=True)
class FrameInstance:
    """A target occurrence with its frame and role spans.

    Roles are kept sorted by position so that two instances describing the
    same analysis compare equal.
    """

    lu: str
    frame: str
    target: tuple[int, ...]
    roles: tuple[RoleSpan, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "target", tuple(self.target))
        object.__setattr__(self, "roles", tuple(sorted(self.roles)))

    @property
    def key(self) -> tuple[str, tuple[int, ...]]:
        return (self.lu, self.target)

    def replace(self, **changes) -> "FrameInstance":
        values = dict(lu=self.lu, frame=self.frame, target=self.target, roles=self.roles)
        values.update(changes)
        return FrameInstance(**values)


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    sent_id: str
    tokens: tuple[Token, ...]
    frames: tuple[FrameInstance, ...] = ()

    def __len__(self):
        return len(self.tokens)

    @property
    def lemmas(self) -> list[str]:
        return [t.lemma for t in self.tokens]

    def root(self) -> int:
        for tok in self.tokens:
            if tok.head == ROOT:
                return tok.index
        raise CorpusError(f"{self.doc_id}/{self.sent_id}: no root token")

    def with_frames(self, frames: Iterable[FrameInstance]) -> "Sentence":
        return Sentence(self.doc_id, self.sent_id, self.tokens, tuple(frames))


@dataclass(frozen=True)
class Document:
    doc_id: str
    source: str
    sentences: tuple[Sentence, ...]

    def n_instances(self) -> int:
        return sum(len(s.frames) for s in self.sentences)


Corpus = list  # list[Document]


@dataclass
class FrameLexicon:
    lu_to_frames: dict[str, frozenset[str]] = field(default_factory=dict)
    frame_to_fes: dict[str, frozenset[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.frame_to_fes.setdefault(OTHER, frozenset())
        self.lu_to_frames = {lu: frozenset(fr) for lu, fr in self.lu_to_frames.items()}
        self.frame_to_fes = {f: frozenset(fes) for f, fes in self.frame_to_fes.items()}
        for lu, frames in self.lu_to_frames.items():
            missing = sorted(f for f in frames if f not in self.frame_to_fes)
            if missing:
                raise CorpusError(f"LU {lu!r} references undeclared frame(s) {missing}")
        if self.frame_to_fes[OTHER]:
            raise CorpusError("frame OTHER must have an empty FE inventory")

    def frames_for(self, lu: str) -> frozenset[str]:
        return self.lu_to_frames[lu]

    def fes_for(self, frame: str) -> frozenset[str]:
        try:
            return self.frame_to_fes[frame]
        except KeyError:
            raise CorpusError(f"unknown frame {frame!r}") from None

    def restrict(self, lus: Iterable[str]) -> "FrameLexicon":
        keep = set(lus)
        return FrameLexicon(
            {lu: fr for lu, fr in self.lu_to_frames.items() if lu in keep},
            dict(self.frame_to_fes),
        )

    def to_json(self) -> dict:
        return {
            "lus": {lu: sorted(self.lu_to_frames[lu]) for lu in sorted(self.lu_to_frames)},
            "frames": {
                f: sorted(self.frame_to_fes[f]) for f in sorted(self.frame_to_fes) if f != OTHER
            },
        }


# ---------------------------------------------------------------------------
# lexicon


def _reject_duplicates(pairs):
    out = {}
    for key, value in pairs:
        if key in out:
            raise CorpusError(f"duplicate entry {key!r}")
        out[key] = value
    return out


def lexicon_from_json(obj: dict) -> FrameLexicon:
    if not isinstance(obj, dict):
        raise CorpusError("lexicon must be a JSON object")
    lus = obj.get("lus", {})
    frames = obj.get("frames", {})
    if not isinstance(lus, dict) or not isinstance(frames, dict):
        raise CorpusError("lexicon 'lus' and 'frames' must be objects")
    return FrameLexicon(
        {lu: frozenset(fr) for lu, fr in lus.items()},
        {f: frozenset(fes) for f, fes in frames.items()},
    )


def parse_lexicon(path) -> FrameLexicon:
    """Read a lexicon file; OTHER is always present with no frame elements."""
    text = Path(path).read_text(encoding="utf-8")
    if not text.strip():
        return FrameLexicon()
    try:
        obj = json.loads(text, object_pairs_hook=_reject_duplicates)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"{path}: malformed lexicon JSON: {exc}") from None
    return lexicon_from_json(obj)


def write_lexicon(lexicon: FrameLexicon, path) -> None:
    Path(path).write_text(
        json.dumps(lexicon.to_json(), ensure_ascii=False, indent=1) + "\n", encoding="utf-8"
    )


# ---------------------------------------------------------------------------
# corpus


def check_tree(tokens: tuple[Token, ...], where: str) -> None:
    n = len(tokens)
    roots = [t.index for t in tokens if t.head == ROOT]
    if len(roots) != 1:
        raise CorpusError(f"{where}: expected exactly one root, found {len(roots)}")
    for t in tokens:
        if t.head != ROOT and not 0 <= t.head < n:
            raise CorpusError(f"{where}: token {t.index} head {t.head} out of range")
        if t.head == t.index:
            raise CorpusError(f"{where}: token {t.index} is its own head")
    for t in tokens:
        seen = set()
        i = t.index
        while i != ROOT:
            if i in seen:
                raise CorpusError(f"{where}: dependency cycle through token {t.index}")
            seen.add(i)
            i = tokens[i].head


def check_instance(inst: FrameInstance, n_tokens: int, where: str,
                   lexicon: FrameLexicon | None = None) -> None:
    if not inst.target:
        raise CorpusError(f"{where}: empty target for LU {inst.lu!r}")
    for i in inst.target:
        if not 0 <= i < n_tokens:
            raise CorpusError(f"{where}: target index {i} out of range")
    if len(set(inst.target)) != len(inst.target) or list(inst.target) != sorted(inst.target):
        raise CorpusError(f"{where}: target indices must be strictly increasing")
    covered = set(inst.target)
    for r in inst.roles:
        if r.start > r.end:
            raise CorpusError(f"{where}: role {r.fe} has start {r.start} > end {r.end}")
        if r.start < 0 or r.end >= n_tokens:
            raise CorpusError(f"{where}: role {r.fe} span [{r.start},{r.end}] out of range")
        span = set(r.tokens())
        if span & covered:
            raise CorpusError(f"{where}: role {r.fe} [{r.start},{r.end}] overlaps the target or another role")
        covered |= span
    if lexicon is not None:
        if inst.lu not in lexicon.lu_to_frames:
            raise CorpusError(f"{where}: LU {inst.lu!r} not in lexicon")
        if inst.frame != OTHER:
            if inst.frame not in lexicon.lu_to_frames[inst.lu]:
                raise CorpusError(f"{where}: frame {inst.frame!r} not evoked by LU {inst.lu!r}")
            inventory = lexicon.frame_to_fes[inst.frame]
            for r in inst.roles:
                if r.fe not in inventory:
                    raise CorpusError(f"{where}: FE {r.fe!r} not in inventory of {inst.frame!r}")


def _require(obj: dict, key: str, kind, where: str):
    if key not in obj:
        raise CorpusError(f"{where}: missing field {key!r}")
    value = obj[key]
    if kind is int and isinstance(value, bool) or not isinstance(value, kind):
        raise CorpusError(f"{where}: field {key!r} has wrong type")
    return value


def sentence_from_json(obj: dict, doc_id: str, lexicon: FrameLexicon | None = None) -> Sentence:
    sent_id = _require(obj, "sent_id", str, f"{doc_id}")
    where = f"{doc_id}/{sent_id}"
    raw_tokens = _require(obj, "tokens", list, where)
    if not raw_tokens:
        raise CorpusError(f"{where}: sentence has no tokens")
    tokens = []
    for i, t in enumerate(raw_tokens):
        tw = f"{where} token {i}"
        if not isinstance(t, dict):
            raise CorpusError(f"{tw}: token must be an object")
        tokens.append(Token(
            i,
            _require(t, "form", str, tw),
            _require(t, "lemma", str, tw),
            _require(t, "pos", str, tw),
            _require(t, "head", int, tw),
            _require(t, "deprel", str, tw),
        ))
    tokens = tuple(tokens)
    check_tree(tokens, where)
    frames = []
    for k, f in enumerate(obj.get("frames", [])):
        fw = f"{where} frame {k}"
        if not isinstance(f, dict):
            raise CorpusError(f"{fw}: frame must be an object")
        target = _require(f, "target", list, fw)
        if any(not isinstance(i, int) or isinstance(i, bool) for i in target):
            raise CorpusError(f"{fw}: target must be a list of integers")
        roles = []
        for r in _require(f, "roles", list, fw) if "roles" in f else []:
            if not isinstance(r, dict):
                raise CorpusError(f"{fw}: role must be an object")
            roles.append(RoleSpan(_require(r, "start", int, fw), _require(r, "end", int, fw),
                                  _require(r, "fe", str, fw)))
        inst = FrameInstance(_require(f, "lu", str, fw), _require(f, "frame", str, fw),
                             tuple(target), tuple(roles))
        check_instance(inst, len(tokens), fw, lexicon)
        frames.append(inst)
    return Sentence(doc_id, sent_id, tokens, tuple(frames))


def document_from_json(obj: dict, lexicon: FrameLexicon | None = None) -> Document:
    if not isinstance(obj, dict):
        raise CorpusError("document record must be a JSON object")
    doc_id = _require(obj, "doc_id", str, "document")
    source = _require(obj, "source", str, doc_id)
    sentences = tuple(sentence_from_json(s, doc_id, lexicon)
                      for s in _require(obj, "sentences", list, doc_id))
    ids = [s.sent_id for s in sentences]
    if len(set(ids)) != len(ids):
        raise CorpusError(f"{doc_id}: duplicate sent_id")
    return Document(doc_id, source, sentences)


def parse_corpus(path, lexicon: FrameLexicon | None = None) -> list[Document]:
    """Read and validate a JSON-lines corpus.

    When ``lexicon`` is given, LU, frame and frame-element membership are
    checked as well.
    """
    docs = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{lineno}: malformed JSON: {exc}") from None
            doc = document_from_json(obj, lexicon)
            if doc.doc_id in seen:
                raise CorpusError(f"{doc.doc_id}: duplicate doc_id")
            seen.add(doc.doc_id)
            docs.append(doc)
    return docs


def validate_corpus(corpus: list[Document], lexicon: FrameLexicon) -> None:
    """Re-check an in-memory corpus against a lexicon."""
    for doc in corpus:
        for s in doc.sentences:
            for k, inst in enumerate(s.frames):
                check_instance(inst, len(s), f"{doc.doc_id}/{s.sent_id} frame {k}", lexicon)


def instance_to_json(inst: FrameInstance) -> dict:
    return {
        "lu": inst.lu,
        "frame": inst.frame,
        "target": list(inst.target),
        "roles": [{"fe": r.fe, "start": r.start, "end": r.end} for r in inst.roles],
    }


def document_to_json(doc: Document) -> dict:
    return {
        "doc_id": doc.doc_id,
        "source": doc.source,
        "sentences": [
            {
                "sent_id": s.sent_id,
                "tokens": [
                    {"form": t.form, "lemma": t.lemma, "pos": t.pos, "head": t.head,
                     "deprel": t.deprel}
                    for t in s.tokens
                ],
                "frames": [instance_to_json(f) for f in s.frames],
            }
            for s in doc.sentences
        ],
    }


def dumps_corpus(corpus: list[Document]) -> str:
    return "".join(json.dumps(document_to_json(d), ensure_ascii=False) + "\n" for d in corpus)


def write_corpus(corpus: list[Document], path) -> None:
    Path(path).write_text(dumps_corpus(corpus), encoding="utf-8")


def iter_sentences(corpus: Iterable[Document]):
    for doc in corpus:
        yield from doc.sentences


def count_instances(corpus: Iterable[Document]) -> int:
    return sum(doc.n_instances() for doc in corpus)


# ---------------------------------------------------------------------------
# LU matching


def lu_pattern(lu: str) -> tuple[str, ...]:
    # multiword LUs are written with single spaces between lemmas
    return tuple(lu.split())


def iter_lu_occurrences(sentence: Sentence, lexicon: FrameLexicon) -> list[tuple[str, list[int]]]:
    """Every match of a lexicon LU against the sentence lemmas.

    Returns ``(lu, target_tokens)`` pairs ordered by start index, then LU name.
    Overlapping matches of different LUs are all kept.
    """
    lemmas = sentence.lemmas
    hits = []
    for lu in lexicon.lu_to_frames:
        pat = lu_pattern(lu)
        if not pat:
            continue
        n = len(pat)
        for i in range(len(lemmas) - n + 1):
            if tuple(lemmas[i:i + n]) == pat:
                hits.append((i, lu, list(range(i, i + n))))
    hits.sort(key=lambda h: (h[0], h[1]))
    return [(lu, target) for _, lu, target in hits]
