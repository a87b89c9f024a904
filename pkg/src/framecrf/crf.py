"""First-order linear-chain CRF with sparse binary observation features.

Scores are ``sum_t sum_{f in x_t} w_obs[f, y_t] + sum_{t>=1} w_trans[y_{t-1}, y_t]``.
Inference runs in log space.  Training minimises the L2-regularised negative
conditional log-likelihood with L-BFGS; sequences are grouped by length so
that forward-backward is vectorised over each group.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize, sparse

from .features import FeatureConfig, FeatureDictionary, FeatureVector
from .tagging import LabelSet

MODEL_VERSION = 1


class CrfTrainingError(RuntimeError):
    pass


@dataclass
class TrainInstance:
    x: FeatureVector
    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.int64)
        if len(self.x) != len(self.y):
            raise ValueError(f"feature length {len(self.x)} != label length {len(self.y)}")


@dataclass
class CrfModel:
    label_set: LabelSet
    dictionary: FeatureDictionary
    w_obs: np.ndarray
    w_trans: np.ndarray
    config: FeatureConfig = field(default_factory=FeatureConfig)
    training: dict = field(default_factory=dict)

    def __post_init__(self):
        n_labels = len(self.label_set)
        self.w_obs = np.asarray(self.w_obs, dtype=np.float64)
        self.w_trans = np.asarray(self.w_trans, dtype=np.float64)
        if self.w_obs.shape != (len(self.dictionary), n_labels):
            raise ValueError(f"w_obs shape {self.w_obs.shape} != {(len(self.dictionary), n_labels)}")
        if self.w_trans.shape != (n_labels, n_labels):
            raise ValueError(f"w_trans shape {self.w_trans.shape} != {(n_labels, n_labels)}")
        if not (np.all(np.isfinite(self.w_obs)) and np.all(np.isfinite(self.w_trans))):
            raise ValueError("model weights must be finite")

    @property
    def n_labels(self) -> int:
        return len(self.label_set)

    @classmethod
    def zeros(cls, label_set, dictionary, config=None) -> "CrfModel":
        n = len(label_set)
        return cls(label_set, dictionary, np.zeros((len(dictionary), n)), np.zeros((n, n)),
                   config or FeatureConfig())

    def with_weights(self, w_obs, w_trans) -> "CrfModel":
        return CrfModel(self.label_set, self.dictionary, w_obs, w_trans, self.config,
                        dict(self.training))

    # -- serialisation ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": MODEL_VERSION,
            "lu": self.label_set.lu,
            "labels": list(self.label_set.labels),
            "features": self.dictionary.strings,
            "w_obs": [[float(v) for v in row] for row in self.w_obs],
            "w_trans": [[float(v) for v in row] for row in self.w_trans],
            "feature_config": self.config.to_json(),
            "training": self.training,
        }

    def dumps(self) -> str:
        # float repr is the shortest string that round-trips exactly
        return json.dumps(self.to_json(), ensure_ascii=False, sort_keys=True)

    @classmethod
    def from_json(cls, obj: dict) -> "CrfModel":
        if obj.get("version") != MODEL_VERSION:
            raise ValueError(f"unsupported model version {obj.get('version')!r}")
        labels = LabelSet(obj["lu"], tuple(obj["labels"]))
        n = len(labels)
        w_obs = np.asarray(obj["w_obs"], dtype=np.float64).reshape(-1, n)
        return cls(labels, FeatureDictionary.from_strings(obj["features"]), w_obs,
                   np.asarray(obj["w_trans"], dtype=np.float64).reshape(n, n),
                   FeatureConfig.from_json(obj["feature_config"]), obj.get("training", {}))

    @classmethod
    def loads(cls, text: str) -> "CrfModel":
        return cls.from_json(json.loads(text))


# ---------------------------------------------------------------------------
# single-sequence inference


def emission_scores(w_obs: np.ndarray, x: FeatureVector) -> np.ndarray:
    """(T, L) matrix of observation scores."""
    out = np.empty((len(x), w_obs.shape[1]))
    for t, ids in enumerate(x):
        out[t] = w_obs[ids].sum(axis=0)
    return out


def sequence_score(model: CrfModel, x: FeatureVector, y) -> float:
    y = np.asarray(y, dtype=np.int64)
    if len(y) != len(x):
        raise ValueError("label sequence and features differ in length")
    if len(y) and (y.min() < 0 or y.max() >= model.n_labels):
        raise IndexError("label index out of range")
    em = emission_scores(model.w_obs, x)
    score = em[np.arange(len(y)), y].sum()
    if len(y) > 1:
        score += model.w_trans[y[:-1], y[1:]].sum()
    return float(score)


def _lse(a: np.ndarray, axis: int) -> np.ndarray:
    # weights are finite, so the max shift never meets -inf
    m = a.max(axis=axis, keepdims=True)
    return np.log(np.exp(a - m).sum(axis=axis)) + np.squeeze(m, axis=axis)


def _forward_backward(em: np.ndarray, trans: np.ndarray):
    """Batched forward-backward over log-domain messages.

    ``em`` has shape (N, T, L).  Returns ``logZ`` (N,), ``alpha`` and ``beta``
    (N, T, L).  Each recursion step is a max-shifted product with
    ``exp(trans)``; a step that underflows is redone with an explicit
    log-sum-exp.
    """
    n, T, L = em.shape
    alpha = np.empty_like(em)
    beta = np.empty_like(em)
    t_max = trans.max()
    e_trans = np.exp(trans - t_max)
    alpha[:, 0] = em[:, 0]
    for t in range(1, T):
        prev = alpha[:, t - 1]
        m = prev.max(axis=1, keepdims=True)
        s = np.exp(prev - m) @ e_trans
        if np.all(s > 0):
            alpha[:, t] = np.log(s) + m + t_max + em[:, t]
        else:
            alpha[:, t] = _lse(prev[:, :, None] + trans[None], axis=1) + em[:, t]
    beta[:, T - 1] = 0.0
    for t in range(T - 2, -1, -1):
        nxt = em[:, t + 1] + beta[:, t + 1]
        m = nxt.max(axis=1, keepdims=True)
        s = np.exp(nxt - m) @ e_trans.T
        if np.all(s > 0):
            beta[:, t] = np.log(s) + m + t_max
        else:
            beta[:, t] = _lse(trans[None] + nxt[:, None, :], axis=2)
    log_z = _lse(alpha[:, T - 1], axis=1)
    return log_z, alpha, beta


def _expected_transitions(em, trans, alpha, beta, log_z) -> np.ndarray:
    """Sum over sequences and positions of the label-pair posteriors, (L, L)."""
    L = trans.shape[0]
    a = alpha[:, :-1]
    b = em[:, 1:] + beta[:, 1:]
    ma = a.max(axis=2, keepdims=True)
    mb = b.max(axis=2, keepdims=True)
    left = np.exp(a - ma) * np.exp(ma + mb - log_z[:, None, None])
    right = np.exp(b - mb)
    return (left.reshape(-1, L).T @ right.reshape(-1, L)) * np.exp(trans)


def _pair_marginals(em, trans, alpha, beta, log_z):
    """(N, T-1, L, L) posterior of label pairs at positions (t-1, t)."""
    return np.exp(alpha[:, :-1, :, None] + trans[None, None] + (em[:, 1:] + beta[:, 1:])[:, :, None, :]
                  - log_z[:, None, None, None])


def log_partition_and_marginals(model: CrfModel, x: FeatureVector):
    """Return ``(logZ, unigram (T, L), bigram (T-1, L, L))``.

    ``bigram[t-1, a, b]`` is the posterior probability of labels ``a`` at
    ``t-1`` and ``b`` at ``t``.
    """
    if len(x) < 1:
        raise ValueError("empty sequence")
    em = emission_scores(model.w_obs, x)[None]
    log_z, alpha, beta = _forward_backward(em, model.w_trans)
    unigram = np.exp(alpha + beta - log_z[:, None, None])[0]
    bigram = _pair_marginals(em, model.w_trans, alpha, beta, log_z)[0]
    return float(log_z[0]), unigram, bigram


def viterbi_decode(model: CrfModel, x: FeatureVector):
    """Best label sequence and its score.

    Ties go to the lowest label index at each backtracking step.
    """
    if len(x) < 1:
        raise ValueError("empty sequence")
    em = emission_scores(model.w_obs, x)
    T, L = em.shape
    delta = em[0].copy()
    back = np.zeros((T, L), dtype=np.int64)
    for t in range(1, T):
        cand = delta[:, None] + model.w_trans
        back[t] = np.argmax(cand, axis=0)
        delta = cand[back[t], np.arange(L)] + em[t]
    path = np.empty(T, dtype=np.int64)
    path[-1] = int(np.argmax(delta))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return path, float(delta[path[-1]])


# ---------------------------------------------------------------------------
# training objective


class _CompiledBatch:
    """Training instances grouped by length, with sparse design matrices."""

    def __init__(self, instances: list[TrainInstance], n_features: int):
        groups = {}
        for inst in instances:
            groups.setdefault(len(inst.x), []).append(inst)
        self.groups = []
        for T in sorted(groups):
            members = groups[T]
            rows, cols = [], []
            r = 0
            for inst in members:
                for ids in inst.x:
                    rows.extend([r] * len(ids))
                    cols.extend(int(i) for i in ids)
                    r += 1
            X = sparse.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(r, n_features))
            Y = np.stack([inst.y for inst in members])
            self.groups.append((T, X, Y))
        self.n_features = n_features

    def empirical_counts(self, n_labels: int):
        obs = np.zeros((self.n_features, n_labels))
        trans = np.zeros((n_labels, n_labels))
        for T, X, Y in self.groups:
            onehot = np.zeros((Y.size, n_labels))
            onehot[np.arange(Y.size), Y.ravel()] = 1.0
            obs += X.T @ onehot
            if T > 1:
                np.add.at(trans, (Y[:, :-1].ravel(), Y[:, 1:].ravel()), 1.0)
        return obs, trans


def _objective(batch: _CompiledBatch, w_obs, w_trans, l2: float):
    n_labels = w_trans.shape[0]
    total = 0.0
    g_obs = np.zeros_like(w_obs)
    g_trans = np.zeros_like(w_trans)
    for T, X, Y in batch.groups:
        n = Y.shape[0]
        em = np.asarray(X @ w_obs).reshape(n, T, n_labels)
        log_z, alpha, beta = _forward_backward(em, w_trans)
        gold = np.take_along_axis(em, Y[:, :, None], axis=2).sum()
        if T > 1:
            gold += w_trans[Y[:, :-1], Y[:, 1:]].sum()
        total += log_z.sum() - gold
        unigram = np.exp(alpha + beta - log_z[:, None, None])
        unigram[np.arange(n)[:, None], np.arange(T)[None, :], Y] -= 1.0
        g_obs += X.T @ unigram.reshape(n * T, n_labels)
        if T > 1:
            g_trans += _expected_transitions(em, w_trans, alpha, beta, log_z)
            np.add.at(g_trans, (Y[:, :-1].ravel(), Y[:, 1:].ravel()), -1.0)
    total += 0.5 * l2 * (np.sum(w_obs * w_obs) + np.sum(w_trans * w_trans))
    g_obs += l2 * w_obs
    g_trans += l2 * w_trans
    return float(total), g_obs, g_trans


def nll_and_gradient(model: CrfModel, batch: list[TrainInstance], l2: float = 0.0):
    """Regularised negative log-likelihood and its gradient.

    Returns ``(objective, (grad_obs, grad_trans))`` with the gradient arrays
    shaped like ``model.w_obs`` and ``model.w_trans``.
    """
    if not batch:
        raise ValueError("empty batch")
    if l2 < 0:
        raise ValueError("l2 must be non-negative")
    compiled = _CompiledBatch(batch, model.w_obs.shape[0])
    obj, g_obs, g_trans = _objective(compiled, model.w_obs, model.w_trans, l2)
    return obj, (g_obs, g_trans)


@dataclass(frozen=True)
class TrainHyper:
    l2: float = 1.0
    max_iter: int = 200
    tol: float = 1e-4
    seed: int = 0

    def to_json(self) -> dict:
        return {"l2": self.l2, "max_iter": self.max_iter, "tol": self.tol, "seed": self.seed}


def train(instances: list[TrainInstance], label_set: LabelSet, dictionary: FeatureDictionary,
          hyper: TrainHyper = TrainHyper(), config: FeatureConfig | None = None) -> CrfModel:
    """Fit weights by L-BFGS from an all-zero start.

    Stops when the largest gradient component is below ``hyper.tol`` or after
    ``hyper.max_iter`` iterations.  The objective value after every accepted
    iteration is kept in ``model.training["objective_trace"]``.
    """
    if not instances:
        raise ValueError("no training instances")
    n_feat, n_lab = len(dictionary), len(label_set)
    batch = _CompiledBatch(instances, n_feat)
    split = n_feat * n_lab

    def fun(w):
        obj, g_obs, g_trans = _objective(batch, w[:split].reshape(n_feat, n_lab),
                                         w[split:].reshape(n_lab, n_lab), hyper.l2)
        if not math.isfinite(obj) or not np.all(np.isfinite(g_obs)) or not np.all(np.isfinite(g_trans)):
            raise CrfTrainingError(f"non-finite objective ({obj}) during training of {label_set.lu!r}")
        return obj, np.concatenate([g_obs.ravel(), g_trans.ravel()])

    trace = []

    def record(intermediate_result):
        trace.append(float(intermediate_result.fun))

    w0 = np.zeros(split + n_lab * n_lab)
    res = optimize.minimize(fun, w0, jac=True, method="L-BFGS-B", callback=record,
                            options={"maxiter": hyper.max_iter, "gtol": hyper.tol, "ftol": 1e-12})
    w = res.x
    _, grad = fun(w)
    model = CrfModel(label_set, dictionary.freeze(), w[:split].reshape(n_feat, n_lab).copy(),
                     w[split:].reshape(n_lab, n_lab).copy(), config or FeatureConfig())
    model.training = {
        "hyper": hyper.to_json(),
        "iterations": int(res.nit),
        "final_objective": float(res.fun),
        "grad_inf_norm": float(np.max(np.abs(grad))),
        "converged": bool(np.max(np.abs(grad)) <= hyper.tol),
        "n_instances": len(instances),
        "objective_trace": trace,
    }
    return model
