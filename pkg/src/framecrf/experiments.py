"""Document-level k-fold plans, feature ablation and training-composition runs."""

from __future__ import annotations

import json
import random
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .corpus import Document, FrameLexicon, count_instances
from .crf import TrainHyper
from .evaluation import EvalReport, FoldedReport, evaluate_levels, format_mean_std_table, mean_std
from .features import FeatureConfig
from .pipeline import predict_corpus, train_all


# ---------------------------------------------------------------------------
# folds


@dataclass
class FoldPlan:
    k: int
    assignment: dict[str, int]
    balance: float
    seed: int = 0

    def test_docs(self, corpus, fold: int) -> list[Document]:
        return [d for d in corpus if self.assignment[d.doc_id] == fold]

    def train_docs(self, corpus, fold: int) -> list[Document]:
        return [d for d in corpus if self.assignment[d.doc_id] != fold]

    def to_json(self) -> dict:
        return {"k": self.k, "seed": self.seed, "balance": self.balance,
                "assignment": dict(sorted(self.assignment.items()))}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True, indent=1) + "\n"

    @classmethod
    def from_json(cls, obj) -> "FoldPlan":
        return cls(obj["k"], dict(obj["assignment"]), obj["balance"], obj.get("seed", 0))


def frame_profile(doc: Document) -> Counter:
    return Counter(f.frame for s in doc.sentences for f in s.frames)


def make_folds(corpus, k: int = 5, seed: int = 0) -> FoldPlan:
    """Assign whole documents to ``k`` folds with balanced frame counts.

    Documents are visited by decreasing number of frame instances (the seed
    orders documents of equal size) and each goes to the fold where it adds
    the least to ``sum_f (count - ideal)^2 / ideal``.  Moves and swaps that
    lower that sum are then applied until none is left.
    """
    corpus = list(corpus)
    if k < 2:
        raise ValueError("k must be >= 2")
    if len(corpus) < k:
        raise ValueError(f"{len(corpus)} documents cannot fill {k} folds")
    profiles = {d.doc_id: frame_profile(d) for d in corpus}
    totals = Counter()
    for p in profiles.values():
        totals.update(p)
    ideal = {f: c / k for f, c in totals.items()}

    order = [d.doc_id for d in corpus]
    random.Random(seed).shuffle(order)
    order.sort(key=lambda d: -sum(profiles[d].values()))

    counts = [Counter() for _ in range(k)]
    n_docs = [0] * k
    assignment = {}
    for doc_id in order:
        prof = profiles[doc_id]

        def cost(j):
            delta = 0.0
            for f, c in prof.items():
                cur = counts[j][f] - ideal[f]
                delta += ((cur + c) ** 2 - cur ** 2) / ideal[f]
            # fewer documents breaks ties so that no fold is left empty
            return (delta, n_docs[j], j)

        best = min(range(k), key=cost)
        assignment[doc_id] = best
        counts[best].update(prof)
        n_docs[best] += 1
    _refine(order, profiles, assignment, counts, n_docs, ideal)
    balance = sum((counts[j][f] - ideal[f]) ** 2 / ideal[f] for j in range(k) for f in ideal)
    return FoldPlan(k, assignment, balance, seed)


def _refine(order, profiles, assignment, counts, n_docs, ideal, max_rounds=100):
    """Improve a greedy plan by single-document moves and pairwise swaps.

    Each round applies the first change, in document order, that lowers the
    imbalance; stops when no change helps.
    """
    k = len(counts)

    def fold_cost(j, add=(), sub=()):
        c = Counter(counts[j])
        for p in add:
            c.update(p)
        for p in sub:
            c.subtract(p)
        return sum((c[f] - ideal[f]) ** 2 / ideal[f] for f in ideal)

    for _ in range(max_rounds):
        improved = False
        for a in order:
            ja, pa = assignment[a], profiles[a]
            base_a = fold_cost(ja)
            for jb in range(k):
                if jb == ja:
                    continue
                base = base_a + fold_cost(jb)
                if n_docs[ja] > 1 and fold_cost(ja, sub=[pa]) + fold_cost(jb, add=[pa]) < base - 1e-9:
                    counts[ja].subtract(pa)
                    counts[jb].update(pa)
                    n_docs[ja] -= 1
                    n_docs[jb] += 1
                    assignment[a] = jb
                    improved = True
                    break
                for b in order:
                    if assignment[b] != jb:
                        continue
                    pb = profiles[b]
                    after = fold_cost(ja, add=[pb], sub=[pa]) + fold_cost(jb, add=[pa], sub=[pb])
                    if after < base - 1e-9:
                        counts[ja].subtract(pa)
                        counts[ja].update(pb)
                        counts[jb].subtract(pb)
                        counts[jb].update(pa)
                        assignment[a], assignment[b] = jb, ja
                        improved = True
                        break
                if improved:
                    break
            if improved:
                break
        if not improved:
            return


# ---------------------------------------------------------------------------
# cross-validation


def _train_eval(args) -> EvalReport:
    train, test, lexicon, config, hyper, cascade = args
    if count_instances(train) == 0:
        raise ValueError("empty training selection")
    registry = train_all(train, lexicon, config, hyper)
    pred, diag = predict_corpus(test, registry, lexicon)
    report = evaluate_levels(test, pred, lexicon, cascade)
    report.extra["diagnostics"] = diag
    report.extra["train_instances"] = count_instances(train)
    report.extra["test_instances"] = count_instances(test)
    return report


def _run_jobs(jobs_args, jobs: int) -> list[EvalReport]:
    if jobs > 1 and len(jobs_args) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_train_eval, jobs_args))
    return [_train_eval(a) for a in jobs_args]


def cross_validate(corpus, lexicon: FrameLexicon, plan: FoldPlan,
                   config: FeatureConfig = FeatureConfig(), hyper: TrainHyper = TrainHyper(),
                   cascade: str = "strict", jobs: int = 1) -> FoldedReport:
    corpus = list(corpus)
    args = [(plan.train_docs(corpus, i), plan.test_docs(corpus, i), lexicon, config, hyper, cascade)
            for i in range(plan.k)]
    return FoldedReport(_run_jobs(args, jobs))


# ---------------------------------------------------------------------------
# ablation

ABLATION_ROWS = (
    ("all features", ()),
    ("all but dep_path", ("dep_path",)),
    ("all but pos", ("pos",)),
    ("all but lin_dist", ("lin_dist",)),
    ("all but lemma", ("lemma",)),
    ("all but parent_lemma", ("parent_lemma",)),
    ("all but dependency parse", ("parent_lemma", "dep_path")),
)


@dataclass
class ExperimentRow:
    name: str
    report: FoldedReport
    info: dict = field(default_factory=dict)

    def sr_folds(self):
        return [r.levels["SR"] for r in self.report.per_fold]

    def sr_summary(self):
        return self.report.summary()["SR"]


@dataclass
class ExperimentTable:
    title: str
    rows: list[ExperimentRow]
    provenance: dict = field(default_factory=dict)

    def row(self, name: str) -> ExperimentRow:
        for r in self.rows:
            if r.name == name:
                return r
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "title": self.title,
            "provenance": self.provenance,
            "rows": [{"name": r.name, **r.info, **r.report.to_json()} for r in self.rows],
        }

    def to_text(self) -> str:
        extra = []
        if self.rows and "train_size" in self.rows[0].info:
            extra = [("Train size", [r.info["train_size"] for r in self.rows])]
        table = format_mean_std_table(self.title, [(r.name, r.sr_summary()) for r in self.rows], extra)
        return table + "\n"


def run_ablation(corpus, lexicon: FrameLexicon, plan: FoldPlan, hyper: TrainHyper = TrainHyper(),
                 base: FeatureConfig = FeatureConfig(), rows=None, cascade: str = "strict",
                 jobs: int = 1) -> ExperimentTable:
    """SR results of full k-fold runs with feature families removed.

    ``rows`` selects a subset of the row names in ``ABLATION_ROWS``.
    """
    corpus = list(corpus)
    chosen = [r for r in ABLATION_ROWS if rows is None or r[0] in rows]
    if rows is not None and len(chosen) != len(rows):
        raise ValueError(f"unknown ablation rows {sorted(set(rows) - {r[0] for r in ABLATION_ROWS})}")
    args = []
    for _, removed in chosen:
        config = base.without(*removed)
        for i in range(plan.k):
            args.append((plan.train_docs(corpus, i), plan.test_docs(corpus, i), lexicon, config,
                         hyper, cascade))
    reports = _run_jobs(args, jobs)
    out = []
    for n, (name, removed) in enumerate(chosen):
        folds = reports[n * plan.k:(n + 1) * plan.k]
        out.append(ExperimentRow(name, FoldedReport(folds),
                                 {"families": list(base.without(*removed).families)}))
    prov = {"k": plan.k, "seed": plan.seed, "hyper": hyper.to_json(), "base_config": base.to_json()}
    return ExperimentTable("Features", out, prov)


# ---------------------------------------------------------------------------
# training composition


@dataclass(frozen=True)
class CompositionSpec:
    parts: tuple[tuple[str, float], ...]
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "parts", tuple((s, float(f)) for s, f in self.parts))
        if not self.parts:
            raise ValueError("composition spec has no parts")
        for src, frac in self.parts:
            if not 0 < frac <= 1:
                raise ValueError(f"fraction for {src!r} must be in (0, 1], got {frac}")
        if not self.name:
            object.__setattr__(self, "name", " + ".join(f"{round(100 * f)}% {s}" for s, f in self.parts))

    @classmethod
    def from_json(cls, obj) -> "CompositionSpec":
        return cls(tuple(tuple(p) for p in obj["parts"]), obj.get("name", ""))


def sources_of(corpus) -> dict[str, list[Document]]:
    out = {}
    for d in corpus:
        out.setdefault(d.source, []).append(d)
    return out


def shared_lus(corpus) -> set[str]:
    """LUs with gold instances in every source of the corpus."""
    per_source = {}
    for d in corpus:
        lus = per_source.setdefault(d.source, set())
        lus.update(f.lu for s in d.sentences for f in s.frames)
    return set.intersection(*per_source.values()) if per_source else set()


def restrict_corpus(corpus, lus) -> list[Document]:
    keep = set(lus)
    return [Document(d.doc_id, d.source,
                     tuple(s.with_frames(f for f in s.frames if f.lu in keep) for s in d.sentences))
            for d in corpus]


def sample_documents(docs, fraction: float, n_total: int, rng: random.Random) -> list[Document]:
    """``round(fraction * n_total)`` documents (at least one) drawn from ``docs``."""
    n = max(1, round(fraction * n_total))
    pool = sorted(docs, key=lambda d: d.doc_id)
    return rng.sample(pool, min(n, len(pool)))


def run_composition(corpus, lexicon: FrameLexicon, specs, test_source: str, lu_filter: bool = False,
                    k: int = 5, seed: int = 0, config: FeatureConfig = FeatureConfig(),
                    hyper: TrainHyper = TrainHyper(), cascade: str = "strict",
                    jobs: int = 1) -> ExperimentTable:
    """Train on sampled fractions of each source, test on held-out test-source documents.

    Test-source documents are split into ``k`` folds; for each fold the
    fractions are drawn from documents outside that fold.  A source's draw
    depends only on (seed, fold, source), so specs that share a part share
    its documents.
    """
    corpus = list(corpus)
    by_source = sources_of(corpus)
    if test_source not in by_source:
        raise ValueError(f"test source {test_source!r} not in corpus")
    for spec in specs:
        for src, _ in spec.parts:
            if src not in by_source:
                raise ValueError(f"source {src!r} not in corpus")
    prov = {"test_source": test_source, "lu_filter": lu_filter, "k": k, "seed": seed,
            "hyper": hyper.to_json(), "config": config.to_json()}
    if lu_filter:
        lus = shared_lus(corpus)
        corpus = restrict_corpus(corpus, lus)
        lexicon = lexicon.restrict(lus)
        by_source = sources_of(corpus)
        prov["lus"] = sorted(lus)
    plan = make_folds(by_source[test_source], k, seed)
    args, sizes = [], []
    for spec in specs:
        row_sizes = []
        for fold in range(k):
            test = plan.test_docs(by_source[test_source], fold)
            test_ids = {d.doc_id for d in test}
            train = []
            for src, frac in spec.parts:
                pool = [d for d in by_source[src] if d.doc_id not in test_ids]
                rng = random.Random(f"{seed}:{fold}:{src}")
                train += sample_documents(pool, frac, len(by_source[src]), rng)
            if not train or count_instances(train) == 0:
                raise ValueError(f"empty training selection for {spec.name!r}, fold {fold}")
            row_sizes.append(count_instances(train))
            args.append((train, test, lexicon, config, hyper, cascade))
        sizes.append(row_sizes)
    reports = _run_jobs(args, jobs)
    rows = []
    for n, spec in enumerate(specs):
        folds = reports[n * k:(n + 1) * k]
        rows.append(ExperimentRow(spec.name, FoldedReport(folds), {
            "parts": [list(p) for p in spec.parts],
            "train_size": round(mean_std(sizes[n])[0]) if k > 1 else sizes[n][0],
            "train_sizes": sizes[n],
        }))
    return ExperimentTable("Training set", rows, prov)
