"""Dense regression solvers shared by every classifier in the package.

All solvers take a dictionary ``A`` of shape ``(m, n)`` whose columns are
atoms and a target vector ``x`` of length ``m``, and return a
:class:`CoefficientVector` with one weight per atom.

Penalised objectives use the un-normalised squared loss::

    ridge        ||x - A s||^2 + lam * ||s||^2
    lasso        ||x - A s||^2 + lam * ||s||_1
    elastic net  ||x - A s||^2 + lam1 * ||s||_1 + lam2 * ||s||^2
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import ContractError, InputError

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10_000


@dataclass(frozen=True)
class CoefficientVector:
    """Regression coefficients against a dictionary.

    Attributes
    ----------
    values:
        One coefficient per dictionary atom.
    residual_norm:
        Euclidean norm of ``x - A @ values``.
    converged:
        False when an iterative solver hit ``max_iter`` first.
    n_iter:
        Sweeps (coordinate descent) or greedy steps (OMP) performed.
    ill_conditioned:
        Set when the dictionary was numerically rank deficient and the
        minimum-norm solution was returned.
    """

    values: np.ndarray
    residual_norm: float
    converged: bool = True
    n_iter: int = 0
    ill_conditioned: bool = False

    def __len__(self) -> int:
        return len(self.values)

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.values)


@dataclass(frozen=True)
class RegularizationParams:
    """Penalty weights and stopping rules for the penalised solvers."""

    ridge_lambda: float = 0.0
    lasso_lambda: float = 1.0
    elastic_lambda1: float = 1.0
    elastic_lambda2: float = 1.0
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        for name in ("ridge_lambda", "lasso_lambda", "elastic_lambda1", "elastic_lambda2"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ContractError(f"{name} must be finite and nonnegative, got {value}")
        if not np.isfinite(self.tol) or self.tol <= 0:
            raise ContractError(f"tol must be positive, got {self.tol}")
        if int(self.max_iter) < 1:
            raise ContractError(f"max_iter must be >= 1, got {self.max_iter}")


def as_matrix(A, name: str = "A") -> np.ndarray:
    """Validate a dictionary / data matrix and return it as float64."""
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise ContractError(f"{name} must be a non-empty 2-D matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise InputError(f"{name} contains non-finite entries")
    return A


def as_vector(x, m: int, name: str = "x") -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ContractError(f"{name} must be a 1-D vector, got shape {x.shape}")
    if x.shape[0] != m:
        raise ContractError(f"{name} has length {x.shape[0]}, expected {m}")
    if not np.all(np.isfinite(x)):
        raise InputError(f"{name} contains non-finite entries")
    return x


def _check_lambda(lam: float, name: str) -> float:
    lam = float(lam)
    if not np.isfinite(lam) or lam < 0:
        raise ContractError(f"{name} must be finite and nonnegative, got {lam}")
    return lam


def _residual_norm(A: np.ndarray, x: np.ndarray, s: np.ndarray) -> float:
    return float(np.linalg.norm(x - A @ s))


def lstsq_many(A: np.ndarray, X: np.ndarray) -> tuple[np.ndarray, int]:
    """Minimum-norm least squares for every column of ``X`` at once.

    Returns the ``(n, N)`` coefficient matrix and the numerical rank of ``A``.
    """
    S, _, rank, _ = np.linalg.lstsq(A, X, rcond=None)
    return S, int(rank)


def solve_least_squares(A, x) -> CoefficientVector:
    """Minimum-norm minimiser of ``||x - A s||_2``.

    Uses an SVD-based solver rather than forming ``(A^T A)^-1``; for full
    column rank ``A`` the result equals ``(A^T A)^-1 A^T x``.

    >>> solve_least_squares([[1.0], [1.0]], [1.0, 3.0]).values
    array([2.])
    """
    A = as_matrix(A)
    x = as_vector(x, A.shape[0])
    s, rank = lstsq_many(A, x)
    return CoefficientVector(
        values=s,
        residual_norm=_residual_norm(A, x, s),
        ill_conditioned=rank < A.shape[1],
    )


def solve_ridge(A, x, lam: float) -> CoefficientVector:
    """Closed-form ridge solution ``(A^T A + lam I)^-1 A^T x``.

    Evaluated through the thin SVD of ``A`` with filter factors
    ``sigma / (sigma^2 + lam)``. With ``lam == 0`` this degrades to the
    minimum-norm least-squares solution, also when ``A^T A`` is singular.
    """
    A = as_matrix(A)
    x = as_vector(x, A.shape[0])
    lam = _check_lambda(lam, "lambda")
    U, sigma, Vt = np.linalg.svd(A, full_matrices=False)
    cutoff = np.finfo(np.float64).eps * max(A.shape) * (sigma[0] if sigma.size else 0.0)
    keep = sigma > cutoff
    factors = np.zeros_like(sigma)
    if lam == 0.0:
        factors[keep] = 1.0 / sigma[keep]
    else:
        factors[keep] = sigma[keep] / (sigma[keep] ** 2 + lam)
    s = Vt.T @ (factors * (U.T @ x))
    return CoefficientVector(
        values=s,
        residual_norm=_residual_norm(A, x, s),
        ill_conditioned=lam == 0.0 and (int(keep.sum()) < A.shape[1]),
    )


def soft_threshold(value: float, threshold: float) -> float:
    """``sign(value) * max(|value| - threshold, 0)``."""
    if value > threshold:
        return value - threshold
    if value < -threshold:
        return value + threshold
    return 0.0


def _coordinate_descent(
    A: np.ndarray, x: np.ndarray, l1: float, l2: float, tol: float, max_iter: int
) -> CoefficientVector:
    m, n = A.shape
    col_sq = np.einsum("ij,ij->j", A, A)
    denom = col_sq + l2
    half_l1 = 0.5 * l1
    s = np.zeros(n)
    r = x.copy()
    converged = False
    sweeps = 0
    for sweeps in range(1, int(max_iter) + 1):
        max_change = 0.0
        for j in range(n):
            if denom[j] == 0.0:
                continue
            a_j = A[:, j]
            old = s[j]
            rho = a_j @ r + col_sq[j] * old
            new = soft_threshold(rho, half_l1) / denom[j]
            if new != old:
                r -= (new - old) * a_j
                s[j] = new
                change = abs(new - old)
                if change > max_change:
                    max_change = change
        if max_change < tol:
            converged = True
            break
    return CoefficientVector(
        values=s,
        residual_norm=_residual_norm(A, x, s),
        converged=converged,
        n_iter=sweeps,
    )


def solve_lasso(
    A, x, lam: float, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> CoefficientVector:
    """Minimise ``||x - A s||^2 + lam * ||s||_1`` by cyclic coordinate descent.

    Parameters
    ----------
    A:
        Dictionary, shape ``(m, n)``.
    x:
        Target vector, length ``m``.
    lam:
        Weight on the l1 term. Any ``lam >= 2 * max|A^T x|`` yields ``s = 0``.
    tol:
        Stop once the largest coordinate change in a sweep is below ``tol``.
    max_iter:
        Maximum number of full sweeps. If reached, the last iterate is
        returned with ``converged=False``.
    """
    A = as_matrix(A)
    x = as_vector(x, A.shape[0])
    lam = _check_lambda(lam, "lambda")
    return _coordinate_descent(A, x, lam, 0.0, tol, max_iter)


def solve_elastic_net(
    A,
    x,
    lambda1: float,
    lambda2: float,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> CoefficientVector:
    """Minimise ``||x - A s||^2 + lambda1 ||s||_1 + lambda2 ||s||^2``.

    The l2 term is squared, so ``lambda1 = 0`` is ridge and ``lambda2 = 0``
    is the lasso.
    """
    A = as_matrix(A)
    x = as_vector(x, A.shape[0])
    l1 = _check_lambda(lambda1, "lambda1")
    l2 = _check_lambda(lambda2, "lambda2")
    return _coordinate_descent(A, x, l1, l2, tol, max_iter)


@dataclass(frozen=True)
class OmpStep:
    """State after one greedy OMP iteration."""

    support: tuple[int, ...]
    coefficients: np.ndarray  # aligned with ``support``
    residual: np.ndarray


def omp_path(A, x, k: int, tol: float = 1e-10) -> Iterator[OmpStep]:
    """Yield the OMP state after each greedy selection.

    Atoms are picked by maximum absolute correlation between the
    unit-normalised atom and the current residual. After every pick the
    coefficients on the selected atoms are refit by least squares, so the
    residual stays orthogonal to all selected atoms. Iteration ends after
    ``k`` picks, once the residual norm drops below ``tol``, or when no
    nonzero atom is left.
    """
    A = as_matrix(A)
    x = as_vector(x, A.shape[0])
    n = A.shape[1]
    k = int(k)
    if k < 1 or k > n:
        raise ContractError(f"k must be in 1..{n}, got {k}")

    norms = np.linalg.norm(A, axis=0)
    usable = norms > 0
    A_unit = np.zeros_like(A)
    A_unit[:, usable] = A[:, usable] / norms[usable]

    support: list[int] = []
    residual = x.copy()
    for _ in range(k):
        if np.linalg.norm(residual) < tol:
            return
        corr = np.abs(A_unit.T @ residual)
        corr[~usable] = -np.inf
        corr[support] = -np.inf
        j = int(np.argmax(corr))
        if not np.isfinite(corr[j]):
            return
        support.append(j)
        sub = A[:, support]
        coef, _ = lstsq_many(sub, x)
        residual = x - sub @ coef
        yield OmpStep(support=tuple(support), coefficients=coef, residual=residual)


def solve_omp(A, x, k: int, tol: float = 1e-10) -> CoefficientVector:
    """Orthogonal matching pursuit with at most ``k`` nonzero coefficients.

    Coefficients are reported against the original (unnormalised) columns.
    """
    A = as_matrix(A)
    x = as_vector(x, A.shape[0])
    s = np.zeros(A.shape[1])
    steps = 0
    for step in omp_path(A, x, k, tol):
        steps += 1
        s[:] = 0.0
        s[list(step.support)] = step.coefficients
    return CoefficientVector(values=s, residual_norm=_residual_norm(A, x, s), n_iter=steps)
