"""Per-LU training and full-sentence prediction."""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .corpus import (Document, FrameInstance, FrameLexicon, Sentence, iter_lu_occurrences,
                     iter_sentences, lexicon_from_json, write_corpus)
from .crf import CrfModel, TrainHyper, TrainInstance, train, viterbi_decode
from .features import FeatureConfig, FeatureDictionary, extract_sequence_features
from .tagging import build_label_set, decode_labels, encode_labels, filter_incompatible_roles

log = logging.getLogger(__name__)

REGISTRY_FILE = "registry.json"
DIAGNOSTIC_KEYS = ("occurrences", "predicted", "skipped_lu", "dropped_roles", "repaired_orphan_i")


def lexicon_hash(lexicon: FrameLexicon) -> str:
    blob = json.dumps(lexicon.to_json(), sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def model_filename(lu: str) -> str:
    safe = re.sub(r"[^\w.-]+", "_", lu, flags=re.UNICODE)
    return f"{safe}.model.json"


@dataclass
class ModelRegistry:
    models: dict[str, CrfModel]
    lexicon: FrameLexicon
    config: FeatureConfig = field(default_factory=FeatureConfig)

    def __post_init__(self):
        for lu, m in self.models.items():
            if m.config != self.config:
                raise ValueError(f"model {lu!r} was trained with a different feature config")

    def __len__(self):
        return len(self.models)

    def __contains__(self, lu):
        return lu in self.models

    def save(self, directory) -> None:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        files = {}
        for lu in sorted(self.models):
            name = model_filename(lu)
            if name in files.values():
                raise ValueError(f"model file name collision for LU {lu!r}")
            files[lu] = name
            (directory / name).write_text(self.models[lu].dumps() + "\n", encoding="utf-8")
        meta = {
            "lexicon_sha256": lexicon_hash(self.lexicon),
            "lexicon": self.lexicon.to_json(),
            "feature_config": self.config.to_json(),
            "lus": files,
        }
        (directory / REGISTRY_FILE).write_text(
            json.dumps(meta, ensure_ascii=False, sort_keys=True, indent=1) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, directory) -> "ModelRegistry":
        directory = Path(directory)
        meta = json.loads((directory / REGISTRY_FILE).read_text(encoding="utf-8"))
        lexicon = lexicon_from_json(meta["lexicon"])
        if lexicon_hash(lexicon) != meta["lexicon_sha256"]:
            raise ValueError(f"{directory}: lexicon hash mismatch")
        models = {lu: CrfModel.loads((directory / name).read_text(encoding="utf-8"))
                  for lu, name in meta["lus"].items()}
        return cls(models, lexicon, FeatureConfig.from_json(meta["feature_config"]))


def collect_instances(corpus, lexicon: FrameLexicon) -> dict[str, list[tuple[Sentence, FrameInstance]]]:
    """Gold (sentence, instance) pairs grouped by LU, in corpus order."""
    by_lu = {}
    for s in iter_sentences(corpus):
        for inst in s.frames:
            if inst.lu in lexicon.lu_to_frames:
                by_lu.setdefault(inst.lu, []).append((s, inst))
    return by_lu


def train_lu(lu: str, examples, lexicon: FrameLexicon, config: FeatureConfig,
             hyper: TrainHyper) -> CrfModel:
    label_set = build_label_set(lu, lexicon)
    dictionary = FeatureDictionary()
    data = [TrainInstance(extract_sequence_features(s, inst.target, config, dictionary),
                          encode_labels(s, inst, label_set))
            for s, inst in examples]
    dictionary.freeze()
    return train(data, label_set, dictionary, hyper, config)


def _train_job(args):
    return train_lu(*args)


def train_all(corpus, lexicon: FrameLexicon, config: FeatureConfig = FeatureConfig(),
              hyper: TrainHyper = TrainHyper(), jobs: int = 1) -> ModelRegistry:
    """One CRF per LU that has at least one gold instance."""
    by_lu = collect_instances(corpus, lexicon)
    for lu in sorted(set(lexicon.lu_to_frames) - set(by_lu)):
        log.warning("LU %r has no training instances; no model trained", lu)
    lus = sorted(by_lu)
    jobs_args = [(lu, by_lu[lu], lexicon, config, hyper) for lu in lus]
    if jobs > 1 and len(lus) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            models = list(pool.map(_train_job, jobs_args))
    else:
        models = [_train_job(a) for a in jobs_args]
    return ModelRegistry(dict(zip(lus, models)), lexicon, config)


def predict_sentence(sentence: Sentence, registry: ModelRegistry, lexicon: FrameLexicon | None = None,
                     diagnostics: Counter | None = None) -> list[FrameInstance]:
    """Apply the matching CRF to every LU occurrence of the sentence.

    Roles not licensed by the predicted frame are removed; OTHER predictions
    are kept (they carry the negative target decision) with no roles.
    """
    lexicon = lexicon or registry.lexicon
    diag = diagnostics if diagnostics is not None else Counter()
    out = []
    for lu, target in iter_lu_occurrences(sentence, lexicon):
        diag["occurrences"] += 1
        model = registry.models.get(lu)
        if model is None:
            diag["skipped_lu"] += 1
            continue
        x = extract_sequence_features(sentence, target, model.config, model.dictionary)
        path, _ = viterbi_decode(model, x)
        inst = decode_labels(path, target, model.label_set, diag)
        inst, dropped = filter_incompatible_roles(inst, lexicon)
        diag["dropped_roles"] += len(dropped)
        diag["predicted"] += 1
        out.append(inst)
    return out


def _predict_documents(docs, registry, lexicon):
    diag = Counter({k: 0 for k in DIAGNOSTIC_KEYS})
    out = []
    for doc in docs:
        sentences = tuple(s.with_frames(predict_sentence(s, registry, lexicon, diag))
                          for s in doc.sentences)
        out.append(Document(doc.doc_id, doc.source, sentences))
    return out, diag


_worker_state = {}


def _init_worker(registry, lexicon):
    _worker_state["registry"] = registry
    _worker_state["lexicon"] = lexicon


def _predict_chunk(docs):
    return _predict_documents(docs, _worker_state["registry"], _worker_state["lexicon"])


def predict_corpus(corpus, registry: ModelRegistry, lexicon: FrameLexicon | None = None,
                   out_path=None, jobs: int = 1):
    """Predict every document; returns ``(predicted corpus, diagnostics)``.

    The predicted corpus keeps the input tokens and replaces the frame
    annotations.  Output order follows the input regardless of ``jobs``.
    """
    lexicon = lexicon or registry.lexicon
    corpus = list(corpus)
    if jobs > 1 and len(corpus) > 1:
        chunks = [corpus[i::jobs] for i in range(jobs)]
        with ProcessPoolExecutor(max_workers=jobs, initializer=_init_worker,
                                 initargs=(registry, lexicon)) as pool:
            results = list(pool.map(_predict_chunk, chunks))
        by_id = {}
        diag = Counter({k: 0 for k in DIAGNOSTIC_KEYS})
        for docs, d in results:
            by_id.update((doc.doc_id, doc) for doc in docs)
            diag.update(d)
        predicted = [by_id[doc.doc_id] for doc in corpus]
    else:
        predicted, diag = _predict_documents(corpus, registry, lexicon)
    if out_path is not None:
        write_corpus(predicted, out_path)
    return predicted, dict(diag)


def default_model_dir() -> str | None:
    return os.environ.get("FRAMECRF_MODELS")
