"""Nearest-subspace and union-of-subspace classifiers over raw training atoms.

Each class ``c`` is represented by the matrix ``A_c`` of its training
samples. The nearest-subspace scheme regresses a query on every ``A_c``
separately; the union scheme regresses once on ``[A_0 ... A_{C-1}]`` and
splits the coefficient vector into per-class blocks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .dataset import LabeledDataset
from .errors import ContractError, FitError
from .regression import (
    RegularizationParams,
    as_matrix,
    as_vector,
    lstsq_many,
    solve_elastic_net,
    solve_lasso,
    solve_omp,
    solve_ridge,
)

RULE_KINDS = ("coefficient_norm", "reconstruction_residual")
UNION_SOLVERS = ("least_squares", "ridge", "lasso", "elastic_net", "omp")


@dataclass(frozen=True)
class DecisionRule:
    """How per-class coefficients become a label.

    ``coefficient_norm`` picks the class with the LARGEST ``||s_c||_alpha``.
    ``reconstruction_residual`` picks the smallest ``||x - A_c s_c||_2``.
    """

    kind: str = "reconstruction_residual"
    alpha: float = 2.0

    def __post_init__(self):
        if self.kind not in RULE_KINDS:
            raise ContractError(f"unknown decision rule {self.kind!r}; expected one of {RULE_KINDS}")
        if not self.alpha > 0:
            raise ContractError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class RawClassDictionaries:
    per_class: tuple[np.ndarray, ...]

    def __post_init__(self):
        mats = tuple(as_matrix(A, f"A_{c}") for c, A in enumerate(self.per_class))
        if len(mats) < 2:
            raise FitError("at least two classes are required")
        if len({A.shape[0] for A in mats}) != 1:
            raise ContractError("all class dictionaries must share the same row count")
        object.__setattr__(self, "per_class", mats)

    @property
    def dim(self) -> int:
        return self.per_class[0].shape[0]

    @property
    def num_classes(self) -> int:
        return len(self.per_class)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([A.shape[1] for A in self.per_class])

    @property
    def offsets(self) -> np.ndarray:
        """Block boundaries: class ``c`` owns ``offsets[c]:offsets[c+1]``."""
        return np.concatenate([[0], np.cumsum(self.sizes)])

    def stacked(self) -> np.ndarray:
        return np.hstack(self.per_class)


def partition_by_label(train: LabeledDataset) -> list[np.ndarray]:
    """Columns of ``train.data`` grouped by label, original order kept."""
    if train.num_classes < 2:
        raise FitError(f"need at least 2 classes, got {train.num_classes}")
    counts = train.class_counts()
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise FitError(f"class {int(empty[0])} has no training samples")
    return [train.data[:, train.labels == c] for c in range(train.num_classes)]


def fit_raw_dictionaries(train: LabeledDataset) -> RawClassDictionaries:
    return RawClassDictionaries(tuple(partition_by_label(train)))


def alpha_norm(S: np.ndarray, alpha: float, axis: int = 0) -> np.ndarray:
    """``(sum |s|^alpha)^(1/alpha)`` along ``axis``; ``alpha=inf`` gives max-abs."""
    S = np.abs(S)
    if np.isinf(alpha):
        return S.max(axis=axis) if S.shape[axis] else np.zeros(np.delete(S.shape, axis))
    return np.sum(S**alpha, axis=axis) ** (1.0 / alpha)


def _decide(scores: np.ndarray, rule: DecisionRule) -> np.ndarray:
    # argmax/argmin return the first extremum, i.e. the smallest class on ties
    if rule.kind == "coefficient_norm":
        return np.argmax(scores, axis=0)
    return np.argmin(scores, axis=0)


def _as_columns(Y, m: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    Y = as_matrix(Y, "Y")
    if Y.shape[0] != m:
        raise ContractError(f"queries have dimension {Y.shape[0]}, expected {m}")
    return Y


def nearest_subspace_scores(
    dicts: RawClassDictionaries, Y, rule: DecisionRule = DecisionRule()
) -> np.ndarray:
    """Per-class scores, shape ``(C, N)``, for the queries in the columns of ``Y``."""
    Y = _as_columns(Y, dicts.dim)
    scores = np.empty((dicts.num_classes, Y.shape[1]))
    for c, A in enumerate(dicts.per_class):
        S, _ = lstsq_many(A, Y)
        if rule.kind == "coefficient_norm":
            scores[c] = alpha_norm(S, rule.alpha)
        else:
            scores[c] = np.linalg.norm(Y - A @ S, axis=0)
    return scores


def predict_nearest_subspace(
    dicts: RawClassDictionaries, Y, rule: DecisionRule = DecisionRule()
) -> np.ndarray:
    return _decide(nearest_subspace_scores(dicts, Y, rule), rule)


def classify_nearest_subspace(
    dicts: RawClassDictionaries, x, rule: DecisionRule = DecisionRule()
) -> int:
    """Label of ``x`` from one independent least-squares fit per class."""
    x = as_vector(x, dicts.dim)
    return int(predict_nearest_subspace(dicts, x[:, None], rule)[0])


def block_scores(
    dicts: RawClassDictionaries, S: np.ndarray, Y: np.ndarray, rule: DecisionRule
) -> np.ndarray:
    """Score each class block of union coefficients ``S`` (``(n_total, N)``)."""
    off = dicts.offsets
    scores = np.empty((dicts.num_classes, S.shape[1]))
    for c, A in enumerate(dicts.per_class):
        block = S[off[c] : off[c + 1]]
        if rule.kind == "coefficient_norm":
            scores[c] = alpha_norm(block, rule.alpha)
        else:
            scores[c] = np.linalg.norm(Y - A @ block, axis=0)
    return scores


def union_coefficients(
    A: np.ndarray,
    Y: np.ndarray,
    solver: str = "least_squares",
    params: RegularizationParams | None = None,
    omp_k: int = 1,
) -> np.ndarray:
    """Solve the joint regression for every column of ``Y``."""
    if solver not in UNION_SOLVERS:
        raise ContractError(f"unknown solver {solver!r}; expected one of {UNION_SOLVERS}")
    params = params or RegularizationParams()
    if solver == "least_squares":
        S, _ = lstsq_many(A, Y)
        return S
    if solver == "ridge":
        return np.column_stack([solve_ridge(A, y, params.ridge_lambda).values for y in Y.T])
    if solver == "lasso":
        return np.column_stack(
            [solve_lasso(A, y, params.lasso_lambda, params.tol, params.max_iter).values for y in Y.T]
        )
    if solver == "elastic_net":
        return np.column_stack(
            [
                solve_elastic_net(
                    A, y, params.elastic_lambda1, params.elastic_lambda2, params.tol, params.max_iter
                ).values
                for y in Y.T
            ]
        )
    return np.column_stack([solve_omp(A, y, omp_k).values for y in Y.T])


def predict_union_subspace(
    dicts: RawClassDictionaries,
    Y,
    rule: DecisionRule = DecisionRule(),
    solver: str = "least_squares",
    params: RegularizationParams | None = None,
    omp_k: int = 1,
) -> np.ndarray:
    Y = _as_columns(Y, dicts.dim)
    S = union_coefficients(dicts.stacked(), Y, solver, params, omp_k)
    return _decide(block_scores(dicts, S, Y, rule), rule)


def classify_union_subspace(
    dicts: RawClassDictionaries,
    x,
    rule: DecisionRule = DecisionRule(),
    solver: str = "least_squares",
    params: RegularizationParams | None = None,
    omp_k: int = 1,
) -> int:
    """Label of ``x`` from one regression on the concatenated dictionary.

    Parameters
    ----------
    dicts:
        Raw per-class training dictionaries.
    x:
        Query vector of length ``dicts.dim``.
    rule:
        Applied to each class block of the joint coefficient vector.
    solver:
        One of ``least_squares``, ``ridge``, ``lasso``, ``elastic_net``, ``omp``.
    params:
        Penalties and stopping rules for the penalised solvers.
    omp_k:
        Sparsity level for ``omp``.
    """
    x = as_vector(x, dicts.dim)
    return int(predict_union_subspace(dicts, x[:, None], rule, solver, params, omp_k)[0])


def split_blocks(values: np.ndarray, sizes: Sequence[int]) -> list[np.ndarray]:
    """Split a stacked coefficient vector into consecutive blocks of ``sizes``."""
    sizes = [int(s) for s in sizes]
    if sum(sizes) != len(values):
        raise ContractError(f"block sizes sum to {sum(sizes)}, vector has length {len(values)}")
    return np.split(np.asarray(values), np.cumsum(sizes)[:-1])
