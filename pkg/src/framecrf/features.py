"""Per-token observation features relative to a target.

Five families are available: the token lemma, the lemma of its syntactic
parent, its part of speech, its signed linear distance to the target and a
truncated dependency path to the target.  Each enabled family is emitted for
every offset of a small window around the current position, as strings of
the form ``family[offset]=value``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .corpus import ROOT, Sentence

FAMILIES = ("lemma", "parent_lemma", "pos", "lin_dist", "dep_path")
UP = "↑"
DOWN = "↓"
ELLIPSIS = "…"
ROOT_LEMMA = "ROOT"
UNK = "__UNK__"
PAD_BEFORE = "__BOS__"
PAD_AFTER = "__EOS__"


class FeatureConfigError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureConfig:
    families: tuple[str, ...] = FAMILIES
    window: tuple[int, ...] = (-1, 0, 1)
    clip_distance: int | None = 10
    max_path_len: int = 2

    def __post_init__(self):
        object.__setattr__(self, "families", tuple(self.families))
        object.__setattr__(self, "window", tuple(self.window))
        unknown = [f for f in self.families if f not in FAMILIES]
        if unknown:
            raise FeatureConfigError(f"unknown feature families {unknown}; expected a subset of {FAMILIES}")
        if len(set(self.families)) != len(self.families):
            raise FeatureConfigError("duplicate feature family")
        if not self.window:
            raise FeatureConfigError("window must contain at least one offset")
        if self.max_path_len < 1:
            raise FeatureConfigError("max_path_len must be >= 1")
        if self.clip_distance is not None and self.clip_distance < 0:
            raise FeatureConfigError("clip_distance must be >= 0")

    def without(self, *families: str) -> "FeatureConfig":
        return FeatureConfig(tuple(f for f in self.families if f not in families),
                             self.window, self.clip_distance, self.max_path_len)

    def to_json(self) -> dict:
        d = asdict(self)
        d["families"] = list(self.families)
        d["window"] = list(self.window)
        return d

    @classmethod
    def from_json(cls, obj: dict) -> "FeatureConfig":
        return cls(
            families=tuple(obj.get("families", FAMILIES)),
            window=tuple(obj.get("window", (-1, 0, 1))),
            clip_distance=obj.get("clip_distance", 10),
            max_path_len=obj.get("max_path_len", 2),
        )

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


class FeatureDictionary:
    """Interning table from feature strings to integer ids.

    Id 0 is reserved for unknown features.  Once frozen the table no longer
    grows and unseen strings map to the unknown id.
    """

    def __init__(self, strings=()):
        self._ids = {UNK: 0}
        self._strings = [UNK]
        self.frozen = False
        for s in strings:
            self.intern(s)

    def __len__(self):
        return len(self._strings)

    def __contains__(self, s):
        return s in self._ids

    def intern(self, s: str) -> int:
        i = self._ids.get(s)
        if i is not None:
            return i
        if self.frozen:
            return 0
        i = len(self._strings)
        self._ids[s] = i
        self._strings.append(s)
        return i

    def freeze(self) -> "FeatureDictionary":
        self.frozen = True
        return self

    def string(self, i: int) -> str:
        return self._strings[i]

    @property
    def strings(self) -> list[str]:
        return list(self._strings)

    @classmethod
    def from_strings(cls, strings) -> "FeatureDictionary":
        strings = list(strings)
        if not strings or strings[0] != UNK:
            raise ValueError("feature list must start with the unknown marker")
        d = cls(strings[1:])
        return d.freeze()


@dataclass
class FeatureVector:
    """Feature ids active at each position of a sequence."""

    positions: list[np.ndarray] = field(default_factory=list)

    def __len__(self):
        return len(self.positions)

    def __iter__(self):
        return iter(self.positions)

    def __getitem__(self, t):
        return self.positions[t]


def linear_distance(token_idx: int, target_tokens) -> int:
    """Signed offset from the nearest target token; negative before the target."""
    target = list(target_tokens)
    if token_idx in target:
        return 0
    if token_idx < target[0]:
        return token_idx - target[0]
    if token_idx > target[-1]:
        return token_idx - target[-1]
    # inside the hull of a discontiguous target
    return min((token_idx - t for t in target), key=abs)


def bucket_distance(d: int, clip: int | None) -> str:
    if clip is None or -clip <= d <= clip:
        return str(d)
    return f"<-{clip}" if d < 0 else f">+{clip}"


def _ancestors(sentence: Sentence, idx: int) -> list[int]:
    chain = [idx]
    while sentence.tokens[chain[-1]].head != ROOT:
        chain.append(sentence.tokens[chain[-1]].head)
    return chain


def raw_dependency_path(sentence: Sentence, token_idx: int, target_idx: int) -> list[str]:
    """Edges from ``token_idx`` up to the common ancestor, then down to the target."""
    up_chain = _ancestors(sentence, token_idx)
    down_chain = _ancestors(sentence, target_idx)
    on_target_side = set(down_chain)
    lca = next(i for i in up_chain if i in on_target_side)
    path = []
    for i in up_chain:
        if i == lca:
            break
        path.append(UP + sentence.tokens[i].deprel)
    descent = []
    for i in down_chain:
        if i == lca:
            break
        descent.append(DOWN + sentence.tokens[i].deprel)
    path.extend(reversed(descent))
    return path


def simplify_path(path: list[str], max_len: int = 2) -> str:
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    if len(path) <= max_len:
        return "|".join(path)
    return "|".join([ELLIPSIS] + list(path[-max_len:]))


def target_head(sentence: Sentence, target_tokens) -> int:
    """The target token governed from outside the span, else the first one."""
    span = set(target_tokens)
    for i in target_tokens:
        if sentence.tokens[i].head not in span:
            return i
    return target_tokens[0]


def token_features(sentence: Sentence, target_tokens, config: FeatureConfig) -> list[dict[str, str]]:
    """Family values for each token of the sentence."""
    target = list(target_tokens)
    head = target_head(sentence, target)
    in_target = set(target)
    rows = []
    for tok in sentence.tokens:
        row = {}
        for fam in config.families:
            if fam == "lemma":
                row[fam] = tok.lemma
            elif fam == "parent_lemma":
                row[fam] = ROOT_LEMMA if tok.head == ROOT else sentence.tokens[tok.head].lemma
            elif fam == "pos":
                row[fam] = tok.pos
            elif fam == "lin_dist":
                row[fam] = bucket_distance(linear_distance(tok.index, target), config.clip_distance)
            elif fam == "dep_path":
                if tok.index in in_target:
                    row[fam] = ""
                else:
                    row[fam] = simplify_path(raw_dependency_path(sentence, tok.index, head),
                                             config.max_path_len)
        rows.append(row)
    return rows


def sequence_feature_strings(sentence: Sentence, target_tokens, config: FeatureConfig) -> list[list[str]]:
    rows = token_features(sentence, target_tokens, config)
    n = len(rows)
    out = []
    for t in range(n):
        feats = []
        for off in config.window:
            j = t + off
            for fam in config.families:
                if j < 0:
                    value = PAD_BEFORE
                elif j >= n:
                    value = PAD_AFTER
                else:
                    value = rows[j][fam]
                feats.append(f"{fam}[{off}]={value}")
        out.append(feats)
    return out


def extract_sequence_features(sentence: Sentence, target_tokens, config: FeatureConfig,
                              dictionary: FeatureDictionary) -> FeatureVector:
    positions = []
    for feats in sequence_feature_strings(sentence, target_tokens, config):
        ids = sorted({dictionary.intern(f) for f in feats})
        positions.append(np.asarray(ids, dtype=np.int64))
    return FeatureVector(positions)
