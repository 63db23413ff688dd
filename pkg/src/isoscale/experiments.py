"""Resampling experiments: full-data evaluation, subsample stress test, n x p grid.

Every trial draws its own Philox stream from ``(seed, cell, trial)``, so a
trial can be rerun alone and trials may run in any order or in parallel
without changing results.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from . import methods as _methods
from .dataset import ItemLabelSet, ResponseMatrix
from .errors import ConfigurationError, DegenerateEvaluationError, IsoscaleError, SamplingError
from .evalrank import auc, average_rank, borda
from .isotonic import NeighborStrategy

MODES = ("full", "subsample_stress", "np_grid")
DEFAULT_P_GRID = (8, 16, 32, 64, 128, 256, 512)
DEFAULT_N_FRACTIONS = (0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1)
MAX_ATTEMPTS = 1000

DROP_SINGLE_CLASS = "single label class"
DROP_CONSTANT = "constant scores"
DROP_UNDEFINED = "all scores undefined"


def _rng(seed: int, cell: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(cell, trial))))


@dataclass(frozen=True)
class ExperimentSpec:
    """Experiment settings; ``replacement=None`` picks the protocol default
    (``without`` for the stress test, ``with`` for the grid)."""

    mode: str = "subsample_stress"
    methods: tuple = ("m_iso", "phi", "smc", "kappa")
    B: int = 20
    n_sub: int = 50
    p_sub: int = 200
    p_grid: tuple = DEFAULT_P_GRID
    n_fractions: tuple = DEFAULT_N_FRACTIONS
    resamples: int = 100
    min_bad: int = 2
    replacement: str | None = None
    seed: int = 0
    signing_mode: str = "tau_directed_fit"
    aggregation: str = "mean"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "methods", tuple(self.methods))
        object.__setattr__(self, "p_grid", tuple(int(v) for v in self.p_grid))
        object.__setattr__(self, "n_fractions", tuple(float(v) for v in self.n_fractions))
        if self.mode not in MODES:
            raise ConfigurationError(f"unknown experiment mode {self.mode!r}; choose from {MODES}")
        if self.replacement is None:
            object.__setattr__(self, "replacement", "with" if self.mode == "np_grid" else "without")
        if self.replacement not in ("with", "without"):
            raise ConfigurationError("replacement must be 'with' or 'without'")
        if not self.methods:
            raise ConfigurationError("no methods given")
        for m in self.methods:
            _methods.get_method(m)
        if self.min_bad < 1:
            raise ConfigurationError("min_bad must be >= 1")
        if self.B < 1 or self.resamples < 1:
            raise ConfigurationError("trial counts must be >= 1")
        if self.mode == "np_grid":
            if any(f <= 0 for f in self.n_fractions):
                raise ConfigurationError("n_fractions must be positive")
            if self.replacement == "without" and any(f > 1 for f in self.n_fractions):
                raise ConfigurationError("n_fraction > 1 needs replacement='with'")
            not_inter = [m for m in self.methods if not _methods.get_method(m).interitem]
            if not_inter:
                raise ConfigurationError(f"np_grid takes interitem methods only; got {not_inter}")

    @classmethod
    def from_dict(cls, raw: dict) -> "ExperimentSpec":
        extra = set(raw) - set(cls.__dataclass_fields__)
        if extra:
            raise ConfigurationError(f"unknown spec field(s) {sorted(extra)}")
        return cls(**raw)

    @classmethod
    def from_json(cls, path) -> "ExperimentSpec":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("workers")  # parallelism never changes results
        return d

    def hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def options(self) -> _methods.MethodOptions:
        return _methods.MethodOptions(mode=self.signing_mode, aggregation=self.aggregation,
                                      strategy=NeighborStrategy())


class Resample(NamedTuple):
    matrix: ResponseMatrix
    labels: ItemLabelSet
    rows: np.ndarray
    cols: np.ndarray


def _draw(matrix, labels, n_sub, p_sub, min_bad, replacement, rng):
    n, p = matrix.n, matrix.p
    if p_sub > p or p_sub < 2:
        raise ConfigurationError(f"p_sub={p_sub} must be in [2, p={p}]")
    if n_sub < 2:
        raise ConfigurationError("n_sub must be >= 2")
    if replacement == "without" and n_sub > n:
        raise ConfigurationError(f"n_sub={n_sub} exceeds n={n} without replacement")
    bad = labels.vector(matrix.item_ids).astype(bool)
    if min_bad > min(int(bad.sum()), p_sub):
        raise ConfigurationError(f"min_bad={min_bad} unsatisfiable: {int(bad.sum())} bad items, p_sub={p_sub}")
    for _ in range(MAX_ATTEMPTS):
        cols = np.sort(rng.choice(p, size=p_sub, replace=False))
        if bad[cols].sum() >= min_bad:
            break
    else:
        raise SamplingError(f"no item sample with >= {min_bad} bad items in {MAX_ATTEMPTS} attempts")
    if replacement == "with":
        rows = rng.integers(0, n, size=n_sub)
    else:
        rows = rng.choice(n, size=n_sub, replace=False)
    return rows, cols


def resample(matrix: ResponseMatrix, labels: ItemLabelSet, n_sub: int, p_sub: int, min_bad: int = 2,
             replacement: str = "without", seed: int = 0, *, cell: int = 0, trial: int = 0) -> Resample:
    """Draw items (always without replacement) until at least ``min_bad`` are bad,
    then draw respondents with or without replacement."""
    rows, cols = _draw(matrix, labels, n_sub, p_sub, min_bad, replacement, _rng(seed, cell, trial))
    sub = matrix.select(rows, cols)
    return Resample(sub, labels.restrict(sub.item_ids), rows, cols)


@dataclass(frozen=True)
class TrialRecord:
    trial: int
    cell: int
    p: int
    n: int
    method: str
    auc: float
    defined: bool
    reason: str = ""


@dataclass
class ExperimentResult:
    spec: ExperimentSpec
    trials: list
    resamples: dict  # (cell, trial) -> (rows, cols)
    cells: list  # (cell index, p, n_fraction or None)
    summary: dict = field(default_factory=dict)

    @property
    def provenance(self) -> dict:
        return {"seed": self.spec.seed, "spec_hash": self.spec.hash()}

    def table(self, by_cell: bool = False) -> np.ndarray:
        """AUC array of shape (rows, methods); rows are trials, or cells when
        ``by_cell`` is set (then each entry is the mean over valid trials)."""
        methods = list(self.spec.methods)
        keys = sorted({(r.cell, r.trial) for r in self.trials})
        if by_cell:
            cells = [c[0] for c in self.cells]
            out = np.full((len(cells), len(methods)), np.nan)
            for ci, c in enumerate(cells):
                for mi, m in enumerate(methods):
                    v = [r.auc for r in self.trials if r.cell == c and r.method == m and r.defined]
                    if v:
                        out[ci, mi] = float(np.mean(v))
            return out
        index = {k: t for t, k in enumerate(keys)}
        out = np.full((len(keys), len(methods)), np.nan)
        for r in self.trials:
            if r.defined:
                out[index[(r.cell, r.trial)], methods.index(r.method)] = r.auc
        return out

    def accounting(self) -> dict:
        out = {}
        for m in self.spec.methods:
            rows = [r for r in self.trials if r.method == m]
            valid = sum(r.defined for r in rows)
            out[m] = {"trials_total": len(rows), "trials_valid": valid, "trials_dropped": len(rows) - valid}
        return out

    def all_cells_valid(self) -> bool:
        for c in self.cells:
            for m in self.spec.methods:
                if not any(r.defined for r in self.trials if r.cell == c[0] and r.method == m):
                    return False
        return True

    def write(self, out_dir) -> None:
        os.makedirs(out_dir, exist_ok=True)
        head = f"# spec_hash={self.spec.hash()} seed={self.spec.seed}\n"
        with open(os.path.join(out_dir, "trials.csv"), "w", newline="", encoding="utf-8") as fh:
            fh.write(head)
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "cell", "p", "n", "method", "auc", "defined", "reason"])
            for r in self.trials:
                w.writerow([r.trial, r.cell, r.p, r.n, r.method, repr(r.auc) if r.defined else "",
                            int(r.defined), r.reason])
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(_jsonable({"provenance": self.provenance, "spec": self.spec.to_dict(), **self.summary}),
                      fh, indent=2, sort_keys=True)
            fh.write("\n")
        with open(os.path.join(out_dir, "resamples.json"), "w", encoding="utf-8") as fh:
            recs = [{"cell": c, "trial": t, "rows": rows.tolist(), "cols": cols.tolist()}
                    for (c, t), (rows, cols) in sorted(self.resamples.items())]
            json.dump({"provenance": self.provenance, "resamples": recs}, fh, separators=(",", ":"))
            fh.write("\n")


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def evaluate_method(name: str, matrix: ResponseMatrix, labels: ItemLabelSet,
                    options: _methods.MethodOptions | None = None):
    """AUC of one method on one matrix, or ``(nan, reason)`` when the cell is dropped."""
    lab = labels.vector(matrix.item_ids)
    if lab.min() == lab.max():
        return math.nan, DROP_SINGLE_CLASS
    try:
        scores = _methods.compute(name, matrix, options)
    except IsoscaleError as exc:
        return math.nan, f"error: {exc}"
    ok = scores.defined
    if not ok.any():
        return math.nan, DROP_UNDEFINED
    s = scores.scores[ok]
    if np.all(s == s[0]):
        return math.nan, DROP_CONSTANT
    try:
        return auc(scores, labels).auc, ""
    except DegenerateEvaluationError:
        return math.nan, DROP_SINGLE_CLASS


def _run_trial(spec, matrix, labels, cell, trial, n_sub, p_sub):
    rs = resample(matrix, labels, n_sub, p_sub, spec.min_bad, spec.replacement, spec.seed, cell=cell, trial=trial)
    opts = spec.options()
    recs = []
    for m in spec.methods:
        value, reason = evaluate_method(m, rs.matrix, rs.labels, opts)
        recs.append(TrialRecord(trial, cell, p_sub, n_sub, m, float(value), not reason, reason))
    return recs, (rs.rows, rs.cols)


def _run_jobs(spec, matrix, labels, jobs):
    def one(job):
        return _run_trial(spec, matrix, labels, *job)

    if spec.workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=spec.workers) as pool:
            outs = list(pool.map(one, jobs))
    else:
        outs = [one(j) for j in jobs]
    trials, resamples = [], {}
    for job, (recs, idx) in zip(jobs, outs):
        trials.extend(recs)
        resamples[(job[0], job[1])] = idx
    return trials, resamples


def _rank_summary(table, methods):
    ranks = average_rank(table)
    return {m: float(ranks.values[k]) for k, m in enumerate(methods)}


def _mean_auc(result):
    out = {}
    for m in result.spec.methods:
        v = [r.auc for r in result.trials if r.method == m and r.defined]
        out[m] = float(np.mean(v)) if v else None
    return out


def run_full(matrix: ResponseMatrix, labels: ItemLabelSet, methods: Sequence[str],
             spec: ExperimentSpec | None = None) -> ExperimentResult:
    """One AUC per method on the complete data."""
    spec = spec or ExperimentSpec(mode="full", methods=tuple(methods))
    opts = spec.options()
    trials = []
    for m in methods:
        value, reason = evaluate_method(m, matrix, labels, opts)
        trials.append(TrialRecord(0, 0, matrix.p, matrix.n, m, float(value), not reason, reason))
    res = ExperimentResult(spec, trials, {(0, 0): (np.arange(matrix.n), np.arange(matrix.p))},
                           [(0, matrix.p, None)])
    res.summary = {"auc": {r.method: (r.auc if r.defined else None) for r in trials},
                   "reasons": {r.method: r.reason for r in trials if not r.defined},
                   "accounting": res.accounting()}
    return res


def run_subsample_stress(spec: ExperimentSpec, matrix: ResponseMatrix, labels: ItemLabelSet) -> ExperimentResult:
    """B trials of (n_sub respondents, p_sub items), each evaluated for every method."""
    if spec.mode != "subsample_stress":
        raise ConfigurationError("spec.mode must be 'subsample_stress'")
    jobs = [(0, t, spec.n_sub, spec.p_sub) for t in range(spec.B)]
    trials, resamples = _run_jobs(spec, matrix, labels, jobs)
    res = ExperimentResult(spec, trials, resamples, [(0, spec.p_sub, None)])
    res.summary = {"mean_auc": _mean_auc(res),
                   "average_rank": _rank_summary(res.table(), spec.methods),
                   "accounting": res.accounting()}
    return res


def grid_cells(spec: ExperimentSpec, n: int) -> list:
    cells = []
    for p_val in spec.p_grid:
        for frac in spec.n_fractions:
            cells.append((len(cells), p_val, frac, int(math.ceil(round(frac * n, 9)))))
    return cells


def run_np_grid(spec: ExperimentSpec, matrix: ResponseMatrix, labels: ItemLabelSet) -> ExperimentResult:
    """``resamples`` draws per (p, n-fraction) cell; cell-mean AUCs feed a Borda count."""
    if spec.mode != "np_grid":
        raise ConfigurationError("spec.mode must be 'np_grid'")
    too_big = [p for p in spec.p_grid if p > matrix.p]
    if too_big:
        raise ConfigurationError(f"p_grid values {too_big} exceed the matrix's {matrix.p} items")
    cells = grid_cells(spec, matrix.n)
    jobs = [(c, t, n_sub, p_val) for c, p_val, _, n_sub in cells for t in range(spec.resamples)]
    trials, resamples = _run_jobs(spec, matrix, labels, jobs)
    res = ExperimentResult(spec, trials, resamples, [(c, p_val, frac) for c, p_val, frac, _ in cells])
    cell_table = res.table(by_cell=True)
    totals = borda(cell_table)
    per_cell = []
    for ci, (c, p_val, frac, n_sub) in enumerate(cells):
        per_cell.append({"cell": c, "p": p_val, "n_fraction": frac, "n": n_sub,
                         "mean_auc": {m: cell_table[ci, k] for k, m in enumerate(spec.methods)}})
    res.summary = {"per_cell": per_cell,
                   "borda": {m: float(totals.values[k]) for k, m in enumerate(spec.methods)},
                   "average_rank": _rank_summary(res.table(), spec.methods),
                   "accounting": res.accounting()}
    return res


def run(spec: ExperimentSpec, matrix: ResponseMatrix, labels: ItemLabelSet) -> ExperimentResult:
    if spec.mode == "full":
        return run_full(matrix, labels, spec.methods, spec)
    if spec.mode == "subsample_stress":
        return run_subsample_stress(spec, matrix, labels)
    return run_np_grid(spec, matrix, labels)


def recompute_trial(result: ExperimentResult, matrix: ResponseMatrix, labels: ItemLabelSet,
                    cell: int, trial: int, method: str) -> float:
    """Re-evaluate one stored trial from its persisted row and column indices."""
    rows, cols = result.resamples[(cell, trial)]
    sub = matrix.select(rows, cols)
    value, _ = evaluate_method(method, sub, labels.restrict(sub.item_ids), result.spec.options())
    return value
