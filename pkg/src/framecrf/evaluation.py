"""Four-level evaluation of frame analyses.

DC  target detection: an LU occurrence is positive when its frame is not OTHER.
SC  frame selection: a positive prediction with the gold frame.
DR  role detection: role spans, partial overlap, labels ignored.
SR  role selection: role spans, partial overlap, labels required.

Role levels are cascaded by default: roles only score for instances whose
frame was correctly selected.  ``cascade="lenient"`` scores roles of every
aligned instance predicted positive.
"""

from __future__ import annotations

import csv
import logging
import statistics
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .corpus import OTHER, ROOT, FrameLexicon, RoleSpan, Sentence, iter_sentences
from .features import target_head

log = logging.getLogger(__name__)

LEVELS = ("DC", "SC", "DR", "SR")
METRICS = ("precision", "recall", "fmeasure")
TARGET_TYPES = ("VerbRoot", "VerbNonRoot", "NounRoot", "NounNonRoot", "other")
VERB_TAGS = {"VERB", "V"}
NOUN_TAGS = {"NOUN", "N", "NC"}
FALLBACK_QUESTION = "other"


@dataclass(frozen=True)
class PRF:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    @property
    def precision(self) -> float:
        d = self.tp + self.fp
        return self.tp / d if d else 1.0

    @property
    def recall(self) -> float:
        d = self.tp + self.fn
        return self.tp / d if d else 1.0

    @property
    def fmeasure(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    def __add__(self, other: "PRF") -> "PRF":
        return PRF(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)

    def to_json(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "precision": self.precision,
                "recall": self.recall, "fmeasure": self.fmeasure}


def total(prfs) -> PRF:
    out = PRF()
    for p in prfs:
        out = out + p
    return out


# ---------------------------------------------------------------------------
# span matching


@dataclass
class Matching:
    pairs: list[tuple[RoleSpan, RoleSpan]]
    unmatched_gold: list[RoleSpan]
    unmatched_pred: list[RoleSpan]


def _overlap(a: RoleSpan, b: RoleSpan) -> int:
    return max(0, min(a.end, b.end) - max(a.start, b.start) + 1)


def match_spans_partial(gold, pred, require_label: bool) -> Matching:
    """Greedy one-to-one matching of overlapping spans.

    Candidate pairs share at least one token (and the FE name when
    ``require_label``); larger overlaps are taken first, then earlier gold
    spans.  Without ``require_label`` pairs with equal FE names still go
    first, so the label-blind matching contains the labelled one.
    """
    gold = sorted(gold)
    pred = sorted(pred)
    cands = []
    for gi, g in enumerate(gold):
        for pi, p in enumerate(pred):
            ov = _overlap(g, p)
            same = g.fe == p.fe
            if ov and (not require_label or same):
                cands.append((not same, -ov, g.start, gi, pi))
    cands.sort()
    used_g, used_p, pairs = set(), set(), []
    for *_, gi, pi in cands:
        if gi in used_g or pi in used_p:
            continue
        used_g.add(gi)
        used_p.add(pi)
        pairs.append((gold[gi], pred[pi]))
    return Matching(pairs,
                    [g for i, g in enumerate(gold) if i not in used_g],
                    [p for i, p in enumerate(pred) if i not in used_p])


# ---------------------------------------------------------------------------
# instance-level scoring


@dataclass
class InstanceOutcome:
    """Counts contributed by one aligned (gold, predicted) pair."""

    doc_id: str
    sent_id: str
    lu: str
    target: tuple[int, ...]
    gold_frame: str | None
    pred_frame: str | None
    counts: dict[str, PRF]
    # (outcome, frame, fe) for every role decision at the SR level
    role_events: list[tuple[str, str, str]] = field(default_factory=list)


def _role_counts(gold_roles, pred_roles, require_label):
    m = match_spans_partial(gold_roles, pred_roles, require_label)
    return m, PRF(len(m.pairs), len(m.unmatched_pred), len(m.unmatched_gold))


def score_pair(gold, pred, cascade: str = "strict"):
    """Counts at the four levels for one candidate target.

    Either side may be ``None`` when only one of gold and prediction exists.
    """
    gpos = gold is not None and gold.frame != OTHER
    ppos = pred is not None and pred.frame != OTHER
    counts = {"DC": PRF(int(gpos and ppos), int(ppos and not gpos), int(gpos and not ppos))}
    sc_ok = gpos and ppos and gold.frame == pred.frame
    counts["SC"] = PRF(int(sc_ok), int(ppos and not sc_ok), int(gpos and not sc_ok))

    gold_roles = list(gold.roles) if gold is not None else []
    pred_roles = list(pred.roles) if pred is not None else []
    score_roles = sc_ok if cascade == "strict" else (gold is not None and ppos)
    events = []
    if score_roles:
        _, counts["DR"] = _role_counts(gold_roles, pred_roles, False)
        m, counts["SR"] = _role_counts(gold_roles, pred_roles, True)
        events += [("tp", gold.frame, g.fe) for g, _ in m.pairs]
        events += [("fp", pred.frame, p.fe) for p in m.unmatched_pred]
        events += [("fn", gold.frame, g.fe) for g in m.unmatched_gold]
    else:
        counts["DR"] = counts["SR"] = PRF(0, len(pred_roles), len(gold_roles))
        if pred is not None:
            events += [("fp", pred.frame, p.fe) for p in pred_roles]
        if gold is not None:
            events += [("fn", gold.frame, g.fe) for g in gold_roles]
    return counts, events


def score_instances(gold_corpus, pred_corpus, cascade: str = "strict"):
    """Align predictions to gold by (document, sentence, LU, target) and score them.

    Returns ``(outcomes, sentences, unaligned)`` where ``sentences`` maps
    ``(doc_id, sent_id)`` to the gold sentence and ``unaligned`` counts
    positive predictions with no gold candidate.
    """
    if cascade not in ("strict", "lenient"):
        raise ValueError(f"unknown cascade mode {cascade!r}")
    gold_sents = {(s.doc_id, s.sent_id): s for s in iter_sentences(gold_corpus)}
    pred_sents = {(s.doc_id, s.sent_id): s for s in iter_sentences(pred_corpus)}
    unknown = set(pred_sents) - set(gold_sents)
    if unknown:
        raise ValueError(f"{len(unknown)} predicted sentence(s) absent from gold, e.g. {sorted(unknown)[0]}")
    outcomes = []
    unaligned = 0
    for key, gs in gold_sents.items():
        ps = pred_sents.get(key)
        gold_by = {}
        for inst in gs.frames:
            gold_by.setdefault(inst.key, inst)
        pred_by = {}
        for inst in (ps.frames if ps is not None else ()):
            pred_by.setdefault(inst.key, inst)
        for ik in sorted(set(gold_by) | set(pred_by)):
            g, p = gold_by.get(ik), pred_by.get(ik)
            if g is None and p is not None and p.frame != OTHER:
                unaligned += 1
            counts, events = score_pair(g, p, cascade)
            outcomes.append(InstanceOutcome(key[0], key[1], ik[0], ik[1],
                                            g.frame if g else None, p.frame if p else None,
                                            counts, events))
    if unaligned:
        log.warning("%d positive prediction(s) have no gold candidate; counted as DC false positives",
                    unaligned)
    return outcomes, gold_sents, unaligned


# ---------------------------------------------------------------------------
# reports


@dataclass
class EvalReport:
    levels: dict[str, PRF]
    breakdowns: dict[str, dict[str, PRF]] = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "levels": {k: v.to_json() for k, v in self.levels.items()},
            "breakdowns": {name: {b: v.to_json() for b, v in table.items()}
                           for name, table in self.breakdowns.items()},
            **self.extra,
        }

    def to_text(self) -> str:
        lines = [format_prf_table("Level", [(lv, self.levels[lv]) for lv in LEVELS])]
        for name, table in self.breakdowns.items():
            lines.append("")
            lines.append(format_prf_table(name, list(table.items()), counts=True))
        return "\n".join(lines)


def evaluate_levels(gold_corpus, pred_corpus, lexicon: FrameLexicon | None = None,
                    cascade: str = "strict") -> EvalReport:
    outcomes, _, unaligned = score_instances(gold_corpus, pred_corpus, cascade)
    if lexicon is not None:
        for o in outcomes:
            if o.pred_frame is not None:
                lexicon.fes_for(o.pred_frame)
    levels = {lv: total(o.counts[lv] for o in outcomes) for lv in LEVELS}
    return EvalReport(levels, extra={"cascade": cascade, "unaligned_predictions": unaligned})


def target_type(sentence: Sentence, target) -> str:
    head = sentence.tokens[target_head(sentence, list(target))]
    pos = head.pos.upper()
    if pos in VERB_TAGS:
        kind = "Verb"
    elif pos in NOUN_TAGS:
        kind = "Noun"
    else:
        return "other"
    return kind + ("Root" if head.head == ROOT else "NonRoot")


def breakdown_by_target_type(gold_corpus, pred_corpus, cascade: str = "strict") -> dict[str, PRF]:
    """SR counts split by the POS and tree position of the target."""
    outcomes, sents, _ = score_instances(gold_corpus, pred_corpus, cascade)
    out = {b: PRF() for b in TARGET_TYPES}
    for o in outcomes:
        b = target_type(sents[(o.doc_id, o.sent_id)], o.target)
        out[b] = out[b] + o.counts["SR"]
    return out


@dataclass
class LengthBin:
    index: int
    n_sentences: int
    mean_length: float
    prf: PRF


def breakdown_by_sentence_length(gold_corpus, pred_corpus, n_bins: int = 10,
                                 cascade: str = "strict") -> list[LengthBin]:
    """SR counts per sentence-length quantile bin (deciles by default)."""
    outcomes, sents, _ = score_instances(gold_corpus, pred_corpus, cascade)
    if len(sents) < n_bins:
        raise ValueError(f"{len(sents)} sentences cannot fill {n_bins} bins")
    ranked = sorted(sents, key=lambda k: (len(sents[k]), k))
    n = len(ranked)
    bin_of = {k: r * n_bins // n for r, k in enumerate(ranked)}
    lengths = [[] for _ in range(n_bins)]
    for k in ranked:
        lengths[bin_of[k]].append(len(sents[k]))
    prfs = [PRF() for _ in range(n_bins)]
    for o in outcomes:
        b = bin_of[(o.doc_id, o.sent_id)]
        prfs[b] = prfs[b] + o.counts["SR"]
    return [LengthBin(i, len(lengths[i]), statistics.fmean(lengths[i]), prfs[i])
            for i in range(n_bins)]


# ---------------------------------------------------------------------------
# generic questions


def load_question_map(path=None) -> dict[tuple[str, str], str]:
    """Read ``frame<TAB>fe<TAB>question`` lines; the bundled map when ``path`` is None."""
    if path is None:
        text = resources.files("framecrf").joinpath("data/questions.tsv").read_text(encoding="utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    qmap = {}
    for lineno, row in enumerate(csv.reader(text.splitlines(), delimiter="\t"), 1):
        if not row or row[0].startswith("#"):
            continue
        if len(row) != 3:
            raise ValueError(f"question map line {lineno}: expected 3 tab-separated fields")
        qmap[(row[0], row[1])] = row[2]
    return qmap


def write_question_map(qmap, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for (frame, fe), q in sorted(qmap.items()):
            fh.write(f"{frame}\t{fe}\t{q}\n")


def group_by_question(gold_corpus, pred_corpus, qmap, cascade: str = "strict") -> dict[str, PRF]:
    """SR counts re-bucketed by the generic question each (frame, FE) answers."""
    outcomes, _, _ = score_instances(gold_corpus, pred_corpus, cascade)
    counts = Counter()
    for o in outcomes:
        for kind, frame, fe in o.role_events:
            counts[(qmap.get((frame, fe), FALLBACK_QUESTION), kind)] += 1
    tags = sorted({tag for tag, _ in counts})
    return {t: PRF(counts[(t, "tp")], counts[(t, "fp")], counts[(t, "fn")]) for t in tags}


def full_report(gold_corpus, pred_corpus, lexicon=None, qmap=None, cascade="strict",
                n_bins: int = 10) -> EvalReport:
    report = evaluate_levels(gold_corpus, pred_corpus, lexicon, cascade)
    report.breakdowns["target type"] = breakdown_by_target_type(gold_corpus, pred_corpus, cascade)
    if qmap is not None:
        report.breakdowns["question"] = group_by_question(gold_corpus, pred_corpus, qmap, cascade)
    n_sent = sum(1 for _ in iter_sentences(gold_corpus))
    if n_sent >= n_bins:
        bins = breakdown_by_sentence_length(gold_corpus, pred_corpus, n_bins, cascade)
        report.breakdowns["length bin"] = {
            f"{b.index + 1} (len {b.mean_length:.1f})": b.prf for b in bins}
    return report


# ---------------------------------------------------------------------------
# folds


def mean_std(values) -> tuple[float, float]:
    values = list(values)
    if len(values) < 2:
        raise ValueError("standard deviation needs at least two folds")
    return statistics.fmean(values), statistics.stdev(values)


def aggregate_folds(per_fold) -> dict[str, tuple[float, float]]:
    """Mean and sample standard deviation of P, R and F over folds."""
    per_fold = list(per_fold)
    return {m: mean_std(getattr(p, m) for p in per_fold) for m in METRICS}


@dataclass
class FoldedReport:
    per_fold: list[EvalReport]

    def summary(self) -> dict[str, dict[str, tuple[float, float]]]:
        return {lv: aggregate_folds(r.levels[lv] for r in self.per_fold) for lv in LEVELS}

    def to_json(self) -> dict:
        return {
            "folds": [r.to_json() for r in self.per_fold],
            "summary": {lv: {m: {"mean": mu, "std": sd} for m, (mu, sd) in ms.items()}
                        for lv, ms in self.summary().items()},
        }

    def to_text(self) -> str:
        return format_mean_std_table("Level", list(self.summary().items()))


def _pct(x: float) -> str:
    return f"{100 * x:5.1f}"


def format_prf_table(title: str, rows, counts: bool = False) -> str:
    header = [title, "Precision", "Recall", "F-measure"] + (["tp", "fp", "fn"] if counts else [])
    body = []
    for name, p in rows:
        row = [str(name), _pct(p.precision), _pct(p.recall), _pct(p.fmeasure)]
        if counts:
            row += [str(p.tp), str(p.fp), str(p.fn)]
        body.append(row)
    return _align([header] + body)


def format_mean_std_table(title: str, rows, extra_cols=()) -> str:
    header = [title] + [c for c, _ in extra_cols] + ["Precision", "Recall", "F-measure"]
    body = []
    for i, (name, ms) in enumerate(rows):
        row = [str(name)] + [str(vals[i]) for _, vals in extra_cols]
        row += [f"{_pct(ms[m][0]).strip()} ± {_pct(ms[m][1]).strip()}" for m in METRICS]
        body.append(row)
    return _align([header] + body)


def _align(table) -> str:
    widths = [max(len(r[i]) for r in table) for i in range(len(table[0]))]
    return "\n".join("  ".join(c.ljust(w) if i == 0 else c.rjust(w) for i, (c, w) in
                               enumerate(zip(r, widths))).rstrip() for r in table)
