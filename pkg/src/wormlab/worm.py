"""Weighted orthogonal regression classifier.

Fitting keeps, for every class, the leading left singular vectors of the
class training matrix (enough to reach an energy fraction ``tau``) together
with their singular values. A query is regressed once on the concatenation
of all class bases, and each class is scored by the singular-value-weighted
sum of its coefficient block.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dataset import LabeledDataset
from .errors import ContractError, FitError, InputError
from .regression import CoefficientVector, as_matrix, as_vector, lstsq_many
from .subspace import partition_by_label

VARIANTS = ("weighted_abs", "weighted_signed")
DEFAULT_TAU = 0.95
RANK_RTOL = 1e-12
# cond(D) above this makes D^T D singular in double precision
COND_LIMIT = 1e8
FORMAT_NAME = "wormlab-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class ClassDictionary:
    """Orthonormal basis of one class with its singular-value weights."""

    basis: np.ndarray
    weights: np.ndarray
    class_id: int = 0

    def __post_init__(self):
        basis = as_matrix(self.basis, "basis")
        weights = np.asarray(self.weights, dtype=np.float64)
        if weights.ndim != 1 or weights.shape[0] != basis.shape[1]:
            raise ContractError("need exactly one weight per basis vector")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ContractError("weights must be finite and strictly positive")
        if np.any(np.diff(weights) > 0):
            raise ContractError("weights must be non-increasing")
        gram = basis.T @ basis
        if np.max(np.abs(gram - np.eye(basis.shape[1]))) > 1e-10:
            raise ContractError("basis columns are not orthonormal")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "class_id", int(self.class_id))

    @property
    def k(self) -> int:
        return self.basis.shape[1]


def energy_profile(A_c) -> np.ndarray:
    """Cumulative fraction of squared singular-value energy, one entry per component.

    Components below ``1e-12 * sigma_max`` are dropped first. The last entry
    is exactly 1.0.
    """
    sigma = np.linalg.svd(as_matrix(A_c, "A_c"), compute_uv=False)
    return _cumulative_energy(_significant(sigma))


def _significant(sigma: np.ndarray) -> np.ndarray:
    if sigma.size == 0 or sigma[0] == 0.0:
        return sigma[:0]
    return sigma[sigma >= RANK_RTOL * sigma[0]]


def _cumulative_energy(sigma: np.ndarray) -> np.ndarray:
    cum = np.cumsum(sigma**2)
    return cum / cum[-1]


def _fix_signs(U: np.ndarray) -> np.ndarray:
    # largest-magnitude entry of every column made positive
    idx = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[idx, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs


def select_basis(A_c, tau: float = DEFAULT_TAU, class_id: int = 0, center: bool = False) -> ClassDictionary:
    """Leading singular subspace of ``A_c`` capturing at least ``tau`` of its energy.

    Parameters
    ----------
    A_c:
        Training samples of one class as columns, shape ``(m, n_c)``.
    tau:
        Energy threshold in ``(0, 1]``. The smallest ``k`` with
        ``sum(sigma[:k]**2) / sum(sigma**2) >= tau`` is kept.
    class_id:
        Stored on the result.
    center:
        Subtract the column mean before the SVD.

    Returns
    -------
    ClassDictionary
        ``basis`` holds the first ``k`` left singular vectors (each with its
        largest-magnitude entry positive), ``weights`` the matching singular
        values.
    """
    A_c = as_matrix(A_c, "A_c")
    if not 0 < tau <= 1:
        raise ContractError(f"tau must lie in (0, 1], got {tau}")
    if center:
        A_c = A_c - A_c.mean(axis=1, keepdims=True)
    U, sigma, _ = np.linalg.svd(A_c, full_matrices=False)
    sigma = _significant(sigma)
    if sigma.size == 0:
        raise FitError(f"class {class_id}: training matrix is numerically zero")
    ratios = _cumulative_energy(sigma)
    k = int(np.searchsorted(ratios, tau, side="left")) + 1
    k = min(k, sigma.size)
    return ClassDictionary(_fix_signs(U[:, :k]), sigma[:k].copy(), class_id)


@dataclass(frozen=True)
class WormModel:
    """Fitted classifier: per-class bases plus the assembled dictionary ``D``."""

    dictionaries: tuple[ClassDictionary, ...]
    energy_threshold: float = DEFAULT_TAU
    decision_variant: str = "weighted_abs"
    centered: bool = False
    assembled: np.ndarray = field(init=False, repr=False)
    offsets: np.ndarray = field(init=False, repr=False)
    weights: np.ndarray = field(init=False, repr=False)
    ill_conditioned: bool = field(init=False, repr=False)

    def __post_init__(self):
        dicts = tuple(self.dictionaries)
        if len(dicts) < 2:
            raise FitError("at least two classes are required")
        if len({d.basis.shape[0] for d in dicts}) != 1:
            raise ContractError("all class bases must share the same dimension")
        if self.decision_variant not in VARIANTS:
            raise ContractError(f"unknown decision variant {self.decision_variant!r}")
        if not 0 < self.energy_threshold <= 1:
            raise ContractError(f"energy_threshold must lie in (0, 1], got {self.energy_threshold}")
        D = np.hstack([d.basis for d in dicts])
        m, total = D.shape
        if total > m:
            raise FitError(
                f"{total} basis vectors retained but dimension is {m}; use a smaller tau"
            )
        sigma = np.linalg.svd(D, compute_uv=False)
        cond = sigma[0] / sigma[-1] if sigma[-1] > 0 else np.inf
        object.__setattr__(self, "dictionaries", dicts)
        object.__setattr__(self, "assembled", D)
        object.__setattr__(self, "offsets", np.concatenate([[0], np.cumsum([d.k for d in dicts])]))
        object.__setattr__(self, "weights", np.concatenate([d.weights for d in dicts]))
        object.__setattr__(self, "ill_conditioned", bool(cond > COND_LIMIT))

    @property
    def dim(self) -> int:
        return self.assembled.shape[0]

    @property
    def num_classes(self) -> int:
        return len(self.dictionaries)

    @property
    def ranks(self) -> list[int]:
        return [d.k for d in self.dictionaries]


def fit_worm(
    train: LabeledDataset,
    tau: float = DEFAULT_TAU,
    decision_variant: str = "weighted_abs",
    center: bool = False,
) -> WormModel:
    """Select a basis per class and assemble ``D = [D_0 ... D_{C-1}]``."""
    parts = partition_by_label(train)
    dicts = tuple(select_basis(A_c, tau, c, center) for c, A_c in enumerate(parts))
    return WormModel(dicts, tau, decision_variant, center)


def worm_regress(model: WormModel, y) -> CoefficientVector:
    """Unconstrained least-squares coefficients of ``y`` on the assembled dictionary."""
    y = as_vector(y, model.dim, "y")
    x, rank = lstsq_many(model.assembled, y)
    return CoefficientVector(
        values=x,
        residual_norm=float(np.linalg.norm(y - model.assembled @ x)),
        ill_conditioned=model.ill_conditioned or rank < model.assembled.shape[1],
    )


@dataclass(frozen=True)
class WormDecision:
    label: int
    scores: np.ndarray


def weighted_scores(model: WormModel, X: np.ndarray) -> np.ndarray:
    """Class scores ``(C, N)`` for coefficient columns ``X`` (``(sum k_c, N)``)."""
    terms = np.abs(X) if model.decision_variant == "weighted_abs" else X
    terms = terms * model.weights[:, None]
    return np.add.reduceat(terms, model.offsets[:-1], axis=0)


def worm_decide(model: WormModel, coeffs) -> WormDecision:
    """Weighted decision on one coefficient vector; ties go to the lower class."""
    values = coeffs.values if isinstance(coeffs, CoefficientVector) else np.asarray(coeffs, float)
    if values.ndim != 1 or values.shape[0] != model.offsets[-1]:
        raise ContractError(
            f"coefficient vector has length {values.shape[0] if values.ndim else 0}, "
            f"expected {int(model.offsets[-1])}"
        )
    scores = weighted_scores(model, values[:, None])[:, 0]
    return WormDecision(int(np.argmax(scores)), scores)


def classify_worm(model: WormModel, y) -> int:
    return worm_decide(model, worm_regress(model, y)).label


def predict_worm(model: WormModel, Y) -> np.ndarray:
    """Labels for the columns of ``Y`` (one batched solve)."""
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[:, None]
    Y = as_matrix(Y, "Y")
    if Y.shape[0] != model.dim:
        raise ContractError(f"queries have dimension {Y.shape[0]}, expected {model.dim}")
    X, _ = lstsq_many(model.assembled, Y)
    return np.argmax(weighted_scores(model, X), axis=0)


def rescaled_regression(D, weights, y) -> CoefficientVector:
    """Least squares on ``D @ diag(weights)^-1``.

    The result equals ``diag(weights) @ x`` where ``x`` is the least-squares
    solution on ``D`` itself.
    """
    D = as_matrix(D, "D")
    weights = np.asarray(weights, dtype=np.float64)
    if weights.shape != (D.shape[1],):
        raise ContractError("need one weight per dictionary column")
    if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
        raise InputError("weights must be finite and strictly positive")
    y = as_vector(y, D.shape[0], "y")
    D_new = D / weights
    x_new, rank = lstsq_many(D_new, y)
    return CoefficientVector(
        values=x_new,
        residual_norm=float(np.linalg.norm(y - D_new @ x_new)),
        ill_conditioned=rank < D.shape[1],
    )


def equivalence_transform(model: WormModel, y) -> CoefficientVector:
    """Coefficients of ``y`` on the dictionary with atoms divided by their weights."""
    y = as_vector(y, model.dim, "y")
    return rescaled_regression(model.assembled, model.weights, y)


def model_to_dict(model: WormModel) -> dict:
    return {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "dim": model.dim,
        "num_classes": model.num_classes,
        "energy_threshold": model.energy_threshold,
        "decision_variant": model.decision_variant,
        "centered": model.centered,
        "classes": [
            {
                "class_id": d.class_id,
                "k": d.k,
                "weights": d.weights.tolist(),
                "basis": d.basis.T.tolist(),  # one list per basis vector
            }
            for d in model.dictionaries
        ],
    }


def model_from_dict(payload: dict) -> WormModel:
    if payload.get("format") != FORMAT_NAME:
        raise InputError(f"not a {FORMAT_NAME} file")
    if payload.get("version") != FORMAT_VERSION:
        raise InputError(f"unsupported model version {payload.get('version')}")
    dicts = []
    for entry in payload["classes"]:
        basis = np.array(entry["basis"], dtype=np.float64).T
        if basis.shape != (payload["dim"], entry["k"]):
            raise InputError(f"class {entry['class_id']}: basis shape {basis.shape} is inconsistent")
        dicts.append(ClassDictionary(basis, np.array(entry["weights"], dtype=np.float64), entry["class_id"]))
    if len(dicts) != payload["num_classes"]:
        raise InputError("class count does not match num_classes")
    return WormModel(
        tuple(dicts),
        payload["energy_threshold"],
        payload["decision_variant"],
        payload.get("centered", False),
    )


def save_model(model: WormModel, path) -> Path:
    """Write ``model`` as JSON; floats use shortest round-trip repr, so reload is bit-exact."""
    path = Path(path)
    path.write_text(json.dumps(model_to_dict(model)) + "\n")
    return path


def load_model(path) -> WormModel:
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid model file ({exc})") from exc
    return model_from_dict(payload)
