"""Comparison classifiers: k-nearest neighbours, a linear SVM and OMP."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .dataset import LabeledDataset
from .errors import ContractError, FitError
from .regression import as_vector
from .subspace import (
    DecisionRule,
    RawClassDictionaries,
    classify_union_subspace,
    partition_by_label,
    predict_union_subspace,
)

SVM_NAME = "linear-SVM (stand-in)"


@dataclass(frozen=True)
class KnnModel:
    train: LabeledDataset
    k: int = 1

    def __post_init__(self):
        if not 1 <= self.k <= len(self.train):
            raise ContractError(f"k must be in 1..{len(self.train)}, got {self.k}")


def predict_knn(model: KnnModel, Y) -> np.ndarray:
    """Majority vote of the ``k`` nearest training columns (Euclidean).

    Distance ties go to the lower training index, vote ties to the lower
    class label.
    """
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != model.train.dim:
        raise ContractError(f"queries have dimension {Y.shape[0]}, expected {model.train.dim}")
    dist = cdist(Y.T, model.train.data.T, "sqeuclidean")
    nearest = np.argsort(dist, axis=1, kind="stable")[:, : model.k]
    votes = model.train.labels[nearest]
    C = model.train.num_classes
    counts = np.zeros((votes.shape[0], C), dtype=np.int64)
    np.add.at(counts, (np.arange(votes.shape[0])[:, None], votes), 1)
    return np.argmax(counts, axis=1)


def knn_classify(model: KnnModel, y) -> int:
    y = as_vector(y, model.train.dim, "y")
    return int(predict_knn(model, y[:, None])[0])


@dataclass(frozen=True)
class LinearSvmModel:
    """One-vs-rest linear SVM; ``weights`` is ``(C, m)``, ``biases`` is ``(C,)``."""

    weights: np.ndarray
    biases: np.ndarray
    reg: float
    epochs: int
    seed: int
    loss_history: tuple[float, ...] = field(default=(), repr=False)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def _ovr_objective(W: np.ndarray, Xa: np.ndarray, Y: np.ndarray, reg: float) -> float:
    margins = Y * (Xa @ W.T)
    hinge = np.maximum(0.0, 1.0 - margins).mean(axis=0)
    return float(np.sum(0.5 * reg * np.sum(W**2, axis=1) + hinge))


def fit_linear_svm(train: LabeledDataset, reg: float = 1e-3, epochs: int = 30, seed: int = 0) -> LinearSvmModel:
    """Train one-vs-rest hinge-loss classifiers by seeded stochastic subgradient descent.

    Pegasos-style steps ``1 / (reg * t)`` with projection onto the ball of
    radius ``1 / sqrt(reg)``; the bias is handled as an extra constant
    feature. The returned weights are the running average of the iterates,
    and ``loss_history`` holds the regularised training objective of that
    average after every epoch.
    """
    partition_by_label(train)  # every class populated
    if reg <= 0:
        raise ContractError(f"reg must be positive, got {reg}")
    if epochs < 1:
        raise ContractError(f"epochs must be >= 1, got {epochs}")
    C = train.num_classes
    L = len(train)
    Xa = np.hstack([train.data.T, np.ones((L, 1))])
    Y = np.where(train.labels[:, None] == np.arange(C)[None, :], 1.0, -1.0)
    rng = np.random.default_rng(seed)
    radius = 1.0 / np.sqrt(reg)

    W = np.zeros((C, Xa.shape[1]))
    W_avg = np.zeros_like(W)
    history = []
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(L):
            t += 1
            eta = 1.0 / (reg * t)
            x_i = Xa[i]
            violated = Y[i] * (W @ x_i) < 1.0
            W *= 1.0 - eta * reg
            W[violated] += eta * Y[i, violated, None] * x_i
            norms = np.linalg.norm(W, axis=1)
            over = norms > radius
            W[over] *= (radius / norms[over])[:, None]
            W_avg += (W - W_avg) / t
        history.append(_ovr_objective(W_avg, Xa, Y, reg))
    return LinearSvmModel(W_avg[:, :-1].copy(), W_avg[:, -1].copy(), reg, epochs, seed, tuple(history))


def svm_decision_values(model: LinearSvmModel, Y) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    if Y.shape[0] != model.dim:
        raise ContractError(f"queries have dimension {Y.shape[0]}, expected {model.dim}")
    return model.weights @ Y + model.biases[:, None]


def predict_svm(model: LinearSvmModel, Y) -> np.ndarray:
    return np.argmax(svm_decision_values(model, Y), axis=0)


def svm_classify(model: LinearSvmModel, y) -> int:
    y = as_vector(y, model.dim, "y")
    return int(predict_svm(model, y[:, None])[0])


def predict_omp(dicts: RawClassDictionaries, Y, k: int = 1, rule: DecisionRule = DecisionRule()) -> np.ndarray:
    return predict_union_subspace(dicts, Y, rule, solver="omp", omp_k=k)


def omp_classify(dicts: RawClassDictionaries, y, k: int = 1, rule: DecisionRule = DecisionRule()) -> int:
    """Union-of-subspace classification with an OMP solve of sparsity ``k``.

    ``k`` may exceed the atom count of a single class; the selected atoms are
    free to concentrate in one block.
    """
    if not 1 <= k <= int(dicts.sizes.sum()):
        raise FitError(f"omp k={k} exceeds the {int(dicts.sizes.sum())} available atoms")
    return classify_union_subspace(dicts, y, rule, solver="omp", omp_k=k)
