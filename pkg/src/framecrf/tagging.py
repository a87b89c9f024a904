"""Joint label scheme: frame on the target tokens, BIO for roles.

For one lexical unit the output labels are ``O``, ``T:<frame>`` on the first
target token, ``TI:<frame>`` on the following target tokens, and
``B-<fe>`` / ``I-<fe>`` over role spans.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .corpus import OTHER, FrameInstance, FrameLexicon, RoleSpan

OUTSIDE = "O"


class EncodingError(ValueError):
    pass


@dataclass(frozen=True)
class LabelSet:
    lu: str
    labels: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "_index", {lab: i for i, lab in enumerate(self.labels)})

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self._index[label]
        except KeyError:
            raise EncodingError(f"label {label!r} not in label set of {self.lu!r}") from None

    def __contains__(self, label):
        return label in self._index


def build_label_set(lu: str, lexicon: FrameLexicon) -> LabelSet:
    frames = set(lexicon.frames_for(lu)) | {OTHER}
    fes = set()
    for f in frames:
        fes |= lexicon.fes_for(f)
    labels = set()
    for f in frames:
        labels.update((f"T:{f}", f"TI:{f}"))
    for e in fes:
        labels.update((f"B-{e}", f"I-{e}"))
    return LabelSet(lu, (OUTSIDE,) + tuple(sorted(labels)))


def encode_labels(sentence, instance: FrameInstance, label_set: LabelSet) -> list[int]:
    n_tokens = len(sentence)
    if instance.lu != label_set.lu:
        raise EncodingError(f"instance LU {instance.lu!r} does not match label set {label_set.lu!r}")
    tags = [OUTSIDE] * n_tokens
    for k, i in enumerate(instance.target):
        tags[i] = ("T:" if k == 0 else "TI:") + instance.frame
    for r in instance.roles:
        for i in r.tokens():
            if tags[i] != OUTSIDE:
                raise EncodingError(f"role {r.fe} [{r.start},{r.end}] overlaps another span")
            tags[i] = ("B-" if i == r.start else "I-") + r.fe
    return [label_set.index(t) for t in tags]


def decode_labels(seq, target_tokens, label_set: LabelSet,
                  diagnostics: Counter | None = None) -> FrameInstance:
    """Read a frame instance back from a label sequence.

    An ``I-x`` that does not continue an ``x`` span opens a new span; each
    such repair is counted under ``"repaired_orphan_i"`` in ``diagnostics``.
    """
    labels = [label_set.labels[i] for i in seq]
    target = tuple(target_tokens)
    first = labels[target[0]]
    if first.startswith("T:") or first.startswith("TI:"):
        frame = first.split(":", 1)[1]
    else:
        return FrameInstance(label_set.lu, OTHER, target, ())

    in_target = set(target)
    roles = []
    cur_fe, cur_start = None, None
    for i, lab in enumerate(labels):
        if i in in_target or lab == OUTSIDE or lab.startswith("T"):
            if cur_fe is not None:
                roles.append(RoleSpan(cur_start, i - 1, cur_fe))
            cur_fe = None
            continue
        prefix, fe = lab[0], lab[2:]
        if prefix == "I" and cur_fe == fe:
            continue
        if prefix == "I" and diagnostics is not None:
            diagnostics["repaired_orphan_i"] += 1
        if cur_fe is not None:
            roles.append(RoleSpan(cur_start, i - 1, cur_fe))
        cur_fe, cur_start = fe, i
    if cur_fe is not None:
        roles.append(RoleSpan(cur_start, len(labels) - 1, cur_fe))
    return FrameInstance(label_set.lu, frame, target, tuple(roles))


def filter_incompatible_roles(instance: FrameInstance, lexicon: FrameLexicon):
    """Drop roles whose FE is not in the inventory of the predicted frame.

    Returns the filtered instance and the list of dropped spans.
    """
    inventory = lexicon.fes_for(instance.frame)
    kept = tuple(r for r in instance.roles if r.fe in inventory)
    dropped = [r for r in instance.roles if r.fe not in inventory]
    if not dropped:
        return instance, []
    return instance.replace(roles=kept), dropped


def is_well_formed(labels: list[str]) -> bool:
    """BIO and target continuation constraints on a string label sequence."""
    prev = OUTSIDE
    for lab in labels:
        if lab.startswith("I-") and prev not in (f"B-{lab[2:]}", lab):
            return False
        if lab.startswith("TI:"):
            frame = lab[3:]
            if prev not in (f"T:{frame}", lab):
                return False
        prev = lab
    return True
