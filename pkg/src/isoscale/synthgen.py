"""Synthetic binary response data with injected bad items.

Good items follow a two-parameter logistic curve in one latent trait. Bad
items get one of four pathologies:

miskey
    responses flipped 0 <-> 1.
grading_noise
    replaced by Bernoulli draws at the column's original mean, independent of ability.
ambiguous
    success probability 0.2 + 0.6 exp(-(theta - d)^2), which peaks at the
    item's difficulty and falls off on both sides.
off_construct
    driven by a second, independent latent trait.

Every random draw comes from a Philox stream keyed by (seed, purpose, column),
so changing one column's pathology never perturbs another column.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

import numpy as np

from .dataset import ItemLabelSet, ResponseMatrix, column_type, BINARY
from .errors import ConfigurationError, DomainError

PATHOLOGIES = ("miskey", "grading_noise", "ambiguous", "off_construct")

_THETA, _THETA2, _PARAMS, _COLUMN, _NOISE, _ASSIGN = range(6)


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=tuple(key))))


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


@dataclass(frozen=True)
class GeneratorConfig:
    """Simulation settings.

    ``pathologies`` maps pathology name to the number of items that get it.
    Discrimination is LogNormal(a_mu, a_sigma); difficulty is
    Normal(d_mu, d_sigma).
    """

    n: int = 500
    p: int = 30
    pathologies: dict = field(default_factory=dict)
    a_mu: float = 0.0
    a_sigma: float = 0.3
    d_mu: float = 0.0
    d_sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        unknown = set(self.pathologies) - set(PATHOLOGIES)
        if unknown:
            raise ConfigurationError(f"unknown pathology {sorted(unknown)}; choose from {PATHOLOGIES}")
        if any(int(v) < 0 for v in self.pathologies.values()):
            raise ConfigurationError("pathology counts must be nonnegative")
        if self.n < 2 or self.p < 2:
            raise ConfigurationError("need n >= 2 and p >= 2")
        if sum(int(v) for v in self.pathologies.values()) > self.p:
            raise ConfigurationError(f"pathology counts {dict(self.pathologies)} exceed p={self.p}")
        for name in ("a_mu", "a_sigma", "d_mu", "d_sigma"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.a_sigma < 0 or self.d_sigma < 0:
            raise ConfigurationError("sigma values must be >= 0")

    @property
    def n_bad(self) -> int:
        return sum(int(v) for v in self.pathologies.values())

    @classmethod
    def from_json(cls, path) -> "GeneratorConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    @classmethod
    def from_dict(cls, raw: dict) -> "GeneratorConfig":
        known = set(cls.__dataclass_fields__)
        extra = set(raw) - known
        if extra:
            raise ConfigurationError(f"unknown config field(s) {sorted(extra)}")
        return cls(**raw)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class Simulation:
    matrix: ResponseMatrix
    labels: ItemLabelSet
    theta: np.ndarray
    discrimination: np.ndarray
    difficulty: np.ndarray
    pathology: dict  # item id -> pathology name

    def __iter__(self):
        # allows ``matrix, labels = generate(cfg)``
        return iter((self.matrix, self.labels))


def generate(cfg: GeneratorConfig) -> Simulation:
    """Simulate a response matrix and its ground-truth labels."""
    n, p, seed = cfg.n, cfg.p, cfg.seed
    theta = _stream(seed, _THETA).standard_normal(n)
    theta2 = _stream(seed, _THETA2).standard_normal(n)
    prm = _stream(seed, _PARAMS)
    a = prm.lognormal(cfg.a_mu, cfg.a_sigma, size=p)
    d = prm.normal(cfg.d_mu, cfg.d_sigma, size=p)

    order = _stream(seed, _ASSIGN).permutation(p)
    assignment = {}
    pos = 0
    for name in PATHOLOGIES:
        for _ in range(int(cfg.pathologies.get(name, 0))):
            assignment[int(order[pos])] = name
            pos += 1

    Y = np.empty((n, p))
    for j in range(p):
        u = _stream(seed, _COLUMN, j).random(n)
        kind = assignment.get(j)
        if kind == "ambiguous":
            prob = 0.2 + 0.6 * np.exp(-((theta - d[j]) ** 2))
        elif kind == "off_construct":
            prob = _sigmoid(a[j] * (theta2 - d[j]))
        else:
            prob = _sigmoid(a[j] * (theta - d[j]))
        col = (u < prob).astype(float)
        if kind == "miskey":
            col = 1.0 - col
        elif kind == "grading_noise":
            col = (_stream(seed, _NOISE, j).random(n) < col.mean()).astype(float)
        Y[:, j] = col

    ids = [f"q{j + 1}" for j in range(p)]
    labels = ItemLabelSet.from_bad(ids, [ids[j] for j in assignment])
    return Simulation(ResponseMatrix(Y, ids), labels, theta, a, d,
                      {ids[j]: k for j, k in sorted(assignment.items())})


def inject(matrix: ResponseMatrix, item, pathology: str, seed: int = 0) -> ResponseMatrix:
    """Return a copy of ``matrix`` with one column corrupted.

    Without the true latent trait at hand, ``ambiguous`` uses the standardised
    rest score as the ability proxy and the column's logit-mean as its
    difficulty; ``off_construct`` redraws the column from an independent
    latent trait at the same mean (discrimination 1.5).
    """
    if pathology not in PATHOLOGIES:
        raise DomainError(f"unknown pathology {pathology!r}; choose from {PATHOLOGIES}")
    j = matrix.index_of(item)
    col = matrix.values[:, j]
    ok = np.isfinite(col)
    new = col.copy()
    if pathology == "miskey":
        if column_type(col) != BINARY:
            raise DomainError("miskey needs a binary column")
        new[ok] = 1.0 - col[ok]
        return matrix.with_column(j, new)
    rng = _stream(seed, _COLUMN, j)
    mean = float(col[ok].mean())
    if pathology == "grading_noise":
        new[ok] = (rng.random(int(ok.sum())) < mean).astype(float)
        return matrix.with_column(j, new)
    pm = min(max(mean, 1e-3), 1 - 1e-3)
    if pathology == "ambiguous":
        rest = np.nansum(np.delete(matrix.values, j, axis=1), axis=1)
        sd = rest.std()
        z = (rest - rest.mean()) / sd if sd > 0 else np.zeros_like(rest)
        diff = -np.log(pm / (1 - pm))
        prob = 0.2 + 0.6 * np.exp(-((z - diff) ** 2))
    else:
        diff = -np.log(pm / (1 - pm)) / 1.5
        prob = _sigmoid(1.5 * (_stream(seed, _THETA2, j).standard_normal(col.size) - diff))
    draw = (rng.random(col.size) < prob).astype(float)
    new[ok] = draw[ok]
    return matrix.with_column(j, new)
