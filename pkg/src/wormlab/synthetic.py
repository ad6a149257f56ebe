"""Synthetic benchmark data: noisy points on random lines through the origin.

Seeds
-----
Every random draw comes from a :class:`numpy.random.SeedSequence`. A trial
seed is the first 64-bit word of ``SeedSequence(master_seed,
spawn_key=(trial,))`` (see :func:`derive_seed`), and inside
:func:`generate` the stream is split again into five children: directions,
train coefficients, test coefficients, train noise, test noise. The noise
children do not depend on the noise level, so a sweep over levels reuses
the same underlying random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .dataset import LabeledDataset
from .errors import ConfigError, ContractError
from .regression import as_matrix

NOISE_KINDS = ("gaussian", "salt_pepper", "multiplicative")


@dataclass(frozen=True)
class NoiseSpec:
    """Noise model and its strength.

    ``level`` is the additive standard deviation for ``gaussian``, the
    per-entry corruption probability for ``salt_pepper`` and the standard
    deviation of ``e`` in the ``(1 + e)`` factor for ``multiplicative``.
    ``amplitude`` is the salt-and-pepper value ``a``; ``None`` means
    ``max|X|`` of the clean matrix.
    """

    kind: str = "gaussian"
    level: float = 0.0
    amplitude: float | None = None

    def __post_init__(self):
        if self.kind not in NOISE_KINDS:
            raise ContractError(f"unknown noise kind {self.kind!r}; expected one of {NOISE_KINDS}")
        if not np.isfinite(self.level) or self.level < 0:
            raise ContractError(f"noise level must be finite and nonnegative, got {self.level}")
        if self.kind == "salt_pepper" and self.level > 1:
            raise ContractError(f"salt_pepper probability must be <= 1, got {self.level}")
        if self.amplitude is not None and (not np.isfinite(self.amplitude) or self.amplitude < 0):
            raise ContractError(f"amplitude must be finite and nonnegative, got {self.amplitude}")


@dataclass(frozen=True)
class GeneratorConfig:
    dim: int = 200
    num_classes: int = 30
    n_train: int = 200
    n_test: int = 1000
    coefficient_range: tuple[float, float] = (-1.0, 1.0)
    dead_zone: float = 0.1
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    seed: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigError(f"dim must be >= 1, got {self.dim}")
        if self.num_classes < 2:
            raise ConfigError(f"num_classes must be >= 2, got {self.num_classes}")
        if self.n_train < self.num_classes:
            raise ConfigError(
                f"n_train={self.n_train} leaves some of the {self.num_classes} classes empty"
            )
        if self.n_test < 1:
            raise ConfigError(f"n_test must be >= 1, got {self.n_test}")
        lo, hi = self.coefficient_range
        if not lo < hi:
            raise ConfigError(f"coefficient_range must be increasing, got {self.coefficient_range}")
        if self.dead_zone < 0 or _allowed_length(lo, hi, self.dead_zone) <= 0:
            raise ConfigError("dead_zone leaves no admissible line coefficients")


def derive_seed(master_seed: int, *keys: int) -> int:
    """64-bit child seed for ``keys`` under ``master_seed``.

    Depends only on its arguments, never on how many seeds were drawn
    before, so trials can run in any order or in parallel.
    """
    seq = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in keys))
    return int(seq.generate_state(1, np.uint64)[0])


def class_sizes(total: int, num_classes: int) -> np.ndarray:
    """Balanced split, remainder handed to the lowest class indices."""
    base, extra = divmod(int(total), int(num_classes))
    sizes = np.full(num_classes, base, dtype=np.int64)
    sizes[:extra] += 1
    return sizes


def _allowed_length(lo: float, hi: float, dz: float) -> float:
    neg = max(0.0, min(hi, -dz) - lo)
    pos = max(0.0, hi - max(lo, dz))
    return neg + pos


def sample_coefficients(rng: np.random.Generator, n: int, lo: float, hi: float, dz: float) -> np.ndarray:
    """Uniform draws on ``[lo, hi]`` with ``(-dz, dz)`` removed (inverse CDF)."""
    neg = max(0.0, min(hi, -dz) - lo)
    u = rng.uniform(0.0, _allowed_length(lo, hi, dz), size=n)
    return np.where(u < neg, lo + u, max(lo, dz) + (u - neg))


def random_directions(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """``count`` unit vectors uniform on the sphere, as columns."""
    U = rng.standard_normal((dim, count))
    norms = np.linalg.norm(U, axis=0)
    while np.any(norms == 0):  # pragma: no cover - probability zero
        bad = norms == 0
        U[:, bad] = rng.standard_normal((dim, int(bad.sum())))
        norms = np.linalg.norm(U, axis=0)
    return U / norms


def apply_noise(X, noise: NoiseSpec, seed) -> np.ndarray:
    """Corrupt ``X`` according to ``noise``; deterministic for a given ``seed``.

    The random draws are made before the level is applied, so two calls that
    differ only in ``noise.level`` share their randomness.
    """
    X = as_matrix(X, "X")
    rng = np.random.default_rng(seed)
    if noise.kind == "gaussian":
        Z = rng.standard_normal(X.shape)
        return X + noise.level * Z if noise.level > 0 else X.copy()
    if noise.kind == "multiplicative":
        Z = rng.standard_normal(X.shape)
        return X * (1.0 + noise.level * Z) if noise.level > 0 else X.copy()
    u = rng.uniform(size=X.shape)
    sign_draw = rng.uniform(size=X.shape)
    if noise.level == 0:
        return X.copy()
    amplitude = noise.amplitude if noise.amplitude is not None else float(np.max(np.abs(X)))
    out = X.copy()
    hit = u < noise.level
    out[hit] = np.where(sign_draw[hit] < 0.5, amplitude, -amplitude)
    return out


def measure_snr(clean, noisy) -> float:
    """``10 log10(||clean||_F^2 / ||noisy - clean||_F^2)`` in dB; ``inf`` if equal."""
    clean = np.asarray(clean, dtype=np.float64)
    noisy = np.asarray(noisy, dtype=np.float64)
    if clean.shape != noisy.shape:
        raise ContractError(f"shape mismatch {clean.shape} vs {noisy.shape}")
    noise_energy = float(np.sum((noisy - clean) ** 2))
    if noise_energy == 0.0:
        return float("inf")
    signal_energy = float(np.sum(clean**2))
    if signal_energy == 0.0:
        return float("-inf")
    return 10.0 * np.log10(signal_energy / noise_energy)


@dataclass(frozen=True)
class CleanSplit:
    directions: np.ndarray
    train: LabeledDataset
    test: LabeledDataset
    noise_seeds: tuple[np.random.SeedSequence, np.random.SeedSequence]


def _labels(rng: np.random.Generator, n: int, num_classes: int) -> np.ndarray:
    labels = np.repeat(np.arange(num_classes), class_sizes(n, num_classes))
    return rng.permutation(labels)


def clean_split(config: GeneratorConfig) -> CleanSplit:
    """Noise-free train/test samples for ``config`` (its ``noise`` is ignored)."""
    root = np.random.SeedSequence(int(config.seed))
    s_dir, s_train, s_test, s_ntrain, s_ntest = root.spawn(5)
    directions = random_directions(np.random.default_rng(s_dir), config.dim, config.num_classes)
    lo, hi = config.coefficient_range

    def draw(seq, n):
        rng = np.random.default_rng(seq)
        labels = _labels(rng, n, config.num_classes)
        t = sample_coefficients(rng, n, lo, hi, config.dead_zone)
        return LabeledDataset(directions[:, labels] * t, labels, config.num_classes)

    return CleanSplit(directions, draw(s_train, config.n_train), draw(s_test, config.n_test), (s_ntrain, s_ntest))


def noisy_from_clean(split: CleanSplit, noise: NoiseSpec) -> tuple[LabeledDataset, LabeledDataset]:
    out = []
    for ds, seq in zip((split.train, split.test), split.noise_seeds):
        out.append(LabeledDataset(apply_noise(ds.data, noise, seq), ds.labels, ds.num_classes))
    return out[0], out[1]


def generate(config: GeneratorConfig) -> tuple[LabeledDataset, LabeledDataset]:
    """Draw ``(train, test)`` for ``config``.

    Sample ``j`` of class ``c`` is ``t_j * u_c`` for a unit direction ``u_c``
    and a line coefficient ``t_j``, then corrupted by ``config.noise``.

    >>> train, test = generate(GeneratorConfig(dim=5, num_classes=2, n_train=4, n_test=2))
    >>> train.data.shape, test.data.shape
    ((5, 4), (5, 2))
    """
    return noisy_from_clean(clean_split(config), config.noise)


def with_noise(config: GeneratorConfig, kind: str, level: float, amplitude: float | None = None) -> GeneratorConfig:
    return replace(config, noise=NoiseSpec(kind, level, amplitude))
