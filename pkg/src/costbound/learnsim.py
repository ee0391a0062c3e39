"""Cost-sensitive error, Bayes classifiers, exact regret, reference learners
and the Monte Carlo harness that runs learners against the hard-instance family.

Sign convention: ``sign(0) = +1``, so the Bayes rule predicts +1 exactly when
``eta(x) >= c``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bounds import BoundReport, cost_theorem_bound
from .dist import BitString, ClassifierTable, JointLabelDistribution
from .errors import CapacityError, DimensionError, DomainError
from .hardinstance import (
    FiniteFunctionClass,
    HardInstanceFamily,
    bayes_for,
    full_class,
    joint_for,
)

__all__ = [
    "ClassifierTable",
    "Sample",
    "SimReport",
    "BitStats",
    "cost_error",
    "generalization_error",
    "bayes_classifier",
    "regret",
    "sample",
    "plugin_learner",
    "erm_learner",
    "estimate_minimax_risk",
]

MAX_HYPERCUBE = 256
LEARNERS = ("plugin", "erm")


def _check_c(c: float) -> None:
    if not (0.0 < c < 1.0):
        raise DomainError(f"c must lie in (0, 1), got {c}")


def cost_error(y: int, yhat: int, c: float) -> float:
    """Loss of predicting ``yhat`` when the label is ``y``: 1-c for a missed positive, c for a false positive."""
    _check_c(c)
    if y not in (-1, 1) or yhat not in (-1, 1):
        raise DomainError(f"labels must be -1 or +1, got {y}, {yhat}")
    if y == yhat:
        return 0.0
    return 1.0 - c if y == 1 else c


def _aligned_values(f: ClassifierTable, j: JointLabelDistribution) -> np.ndarray:
    if f.domain == j.atoms:
        return f.array
    if set(f.domain) != set(j.atoms) or len(f.domain) != len(j.atoms):
        raise DimensionError("classifier domain does not match the distribution's atoms")
    return np.array([f(a) for a in j.atoms], dtype=np.int8)


def generalization_error(f: ClassifierTable, j: JointLabelDistribution, c: float) -> float:
    """Exact expected cost-sensitive error of ``f`` under ``j``."""
    _check_c(c)
    vals = _aligned_values(f, j)
    m, eta = j.marginal.p, j.eta_array
    terms = m * np.where(vals == 1, c * (1.0 - eta), (1.0 - c) * eta)
    return math.fsum(terms.tolist())


def bayes_classifier(j: JointLabelDistribution, c: float) -> ClassifierTable:
    _check_c(c)
    return ClassifierTable(j.atoms, np.where(j.eta_array >= c, 1, -1).tolist())


def _regret_values(vals: np.ndarray, m: np.ndarray, eta: np.ndarray, c: float) -> float:
    best = np.where(eta >= c, 1, -1)
    return math.fsum((m * np.abs(eta - c) * (vals != best)).tolist())


def regret(f: ClassifierTable, j: JointLabelDistribution, c: float) -> float:
    """Excess error over the Bayes rule: ``sum_x M(x) |eta(x) - c| [f(x) != f*(x)]``."""
    _check_c(c)
    return _regret_values(_aligned_values(f, j), j.marginal.p, j.eta_array, c)


# ---------------------------------------------------------------------------
# Sampling


@dataclass(frozen=True, eq=False)
class Sample:
    """``n`` labelled draws stored as indices into ``support`` plus +/-1 labels."""

    support: tuple[str, ...]
    indices: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        lab = np.asarray(self.labels, dtype=np.int8)
        if idx.shape != lab.shape or idx.ndim != 1:
            raise DimensionError("indices and labels must be 1-d arrays of equal length")
        if idx.size and (idx.min() < 0 or idx.max() >= len(self.support)):
            raise DomainError("sample index outside the support")
        if lab.size and not np.all(np.abs(lab) == 1):
            raise DomainError("labels must be -1 or +1")
        idx.setflags(write=False)
        lab.setflags(write=False)
        object.__setattr__(self, "support", tuple(self.support))
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "labels", lab)

    def __len__(self) -> int:
        return int(self.indices.size)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Sample):
            return NotImplemented
        return (
            self.support == other.support
            and np.array_equal(self.indices, other.indices)
            and np.array_equal(self.labels, other.labels)
        )

    @property
    def items(self) -> list[tuple[str, int]]:
        return [(self.support[i], int(y)) for i, y in zip(self.indices.tolist(), self.labels.tolist())]

    @classmethod
    def from_items(cls, items: Sequence[tuple[str, int]], support: Sequence[str]) -> Sample:
        support = tuple(support)
        pos = {a: i for i, a in enumerate(support)}
        try:
            idx = [pos[a] for a, _ in items]
        except KeyError as exc:
            raise DomainError(f"atom {exc.args[0]!r} is not in the support") from None
        return cls(support, np.asarray(idx, dtype=np.int64), np.asarray([y for _, y in items], dtype=np.int8))

    def counts(self, size: int | None = None) -> tuple[np.ndarray, np.ndarray]:
        """Positive and negative label counts per support atom."""
        size = len(self.support) if size is None else size
        pos = np.bincount(self.indices[self.labels == 1], minlength=size)
        neg = np.bincount(self.indices[self.labels == -1], minlength=size)
        return pos, neg


def _rng(seed) -> np.random.Generator:
    entropy = [seed] if isinstance(seed, (int, np.integer)) else list(seed)
    if any(int(s) < 0 for s in entropy):
        raise DomainError(f"seed entropy must be non-negative, got {entropy}")
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(s) for s in entropy])))


def _draw(rng: np.random.Generator, table: tuple[np.ndarray, np.ndarray], eta: np.ndarray, n: int):
    cdf, atoms = table
    pick = np.searchsorted(cdf, rng.random(n), side="right")
    np.minimum(pick, cdf.size - 1, out=pick)
    idx = atoms[pick]
    labels = np.where(rng.random(n) < eta[idx], 1, -1).astype(np.int8)
    return idx, labels


def _cdf(m: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # zero-mass atoms are left out entirely so rounding can never select them
    atoms = np.flatnonzero(m > 0)
    cdf = np.cumsum(m[atoms])
    return cdf / cdf[-1], atoms


def sample(j: JointLabelDistribution, n: int, seed) -> Sample:
    """Draw ``n`` i.i.d. pairs from ``j``.

    ``seed`` is a non-negative integer or a sequence of them; the stream is
    Philox keyed by ``SeedSequence(seed)``, so the result depends on nothing
    else.
    """
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    idx, labels = _draw(_rng(seed), _cdf(j.marginal.p), j.eta_array, n)
    return Sample(j.atoms, idx, labels)


# ---------------------------------------------------------------------------
# Learners


def _plugin_values(pos: np.ndarray, neg: np.ndarray, c: float) -> np.ndarray:
    seen = pos + neg
    with np.errstate(invalid="ignore", divide="ignore"):
        eta_hat = pos / seen
    return np.where((seen > 0) & (eta_hat >= c), 1, -1).astype(np.int8)


def _counts_on(s: Sample, domain: Sequence[str]) -> tuple[np.ndarray, np.ndarray]:
    domain = tuple(domain)
    if domain == s.support:
        return s.counts()
    pos_of = {a: i for i, a in enumerate(domain)}
    remap = np.array([pos_of.get(a, -1) for a in s.support], dtype=np.int64)
    # only atoms that actually occur need to be in the domain
    missing = [s.support[i] for i in np.unique(s.indices) if remap[i] < 0]
    if missing:
        raise DomainError(f"sample atoms {missing} are outside the learner's domain")
    keep = remap >= 0
    remap = remap[keep]
    pos, neg = s.counts()
    out_pos = np.zeros(len(domain), dtype=np.int64)
    out_neg = np.zeros(len(domain), dtype=np.int64)
    np.add.at(out_pos, remap, pos[keep])
    np.add.at(out_neg, remap, neg[keep])
    return out_pos, out_neg


def plugin_learner(s: Sample, support: Sequence[str], c: float) -> ClassifierTable:
    """Threshold the empirical conditional frequency at ``c``; unseen atoms get -1."""
    _check_c(c)
    pos, neg = _counts_on(s, support)
    return ClassifierTable(tuple(support), _plugin_values(pos, neg, c).tolist())


def _erm_index(mat: np.ndarray, pos: np.ndarray, neg: np.ndarray, c: float) -> int:
    # empirical cost is ((1-c) * missed positives + c * false positives) / n;
    # integer counts first so equal (missed, false) pairs give identical floats
    missed = (mat == -1).astype(np.int64) @ pos
    false_pos = (mat == 1).astype(np.int64) @ neg
    return int(np.argmin((1.0 - c) * missed + c * false_pos))


def erm_learner(s: Sample, fc: FiniteFunctionClass, c: float) -> ClassifierTable:
    """Empirical cost-sensitive risk minimiser over ``fc``; ties go to the lowest index."""
    _check_c(c)
    if len(fc) == 0:
        raise DomainError("ERM over an empty function class")
    pos, neg = _counts_on(s, fc.domain)
    return fc.table(_erm_index(fc.matrix, pos, neg, c))


# ---------------------------------------------------------------------------
# Minimax-risk estimation


@dataclass(frozen=True)
class BitStats:
    mean_regret: float
    std_err: float
    trials: int


@dataclass(frozen=True)
class SimReport:
    """Per-member regret statistics and the comparison against the lower bound."""

    family: HardInstanceFamily
    learner: str
    seed: int
    per_b: dict[BitString, BitStats]
    max_mean_regret: float
    argmax_b: BitString
    bound: BoundReport
    dominance_margin: float

    def dominates(self, sigmas: float = 3.0) -> bool:
        """Whether the worst mean regret plus ``sigmas`` standard errors reaches the bound."""
        worst = self.per_b[self.argmax_b]
        return self.max_mean_regret + sigmas * worst.std_err >= self.bound.value

    def to_dict(self) -> dict:
        return {
            "family": self.family.to_dict(),
            "learner": self.learner,
            "seed": self.seed,
            "per_b": [
                {"b": str(b), "mean_regret": s.mean_regret, "std_err": s.std_err, "trials": s.trials}
                for b, s in self.per_b.items()
            ],
            "max_mean_regret": self.max_mean_regret,
            "argmax_b": str(self.argmax_b),
            "bound": self.bound.to_dict(),
            "dominance_margin": self.dominance_margin,
            "dominates": self.dominates(),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def to_csv(self) -> str:
        rows = ["b,mean_regret,std_err,trials"]
        for b, s in self.per_b.items():
            rows.append(f"{b},{s.mean_regret:.9g},{s.std_err:.9g},{s.trials}")
        return "\n".join(rows) + "\n"


class _Trials:
    """Runs the trials for one member; each trial owns the stream (seed, b index, t)."""

    def __init__(self, fam: HardInstanceFamily, learner: str, fc: FiniteFunctionClass | None):
        self.fam = fam
        self.c = fam.spec.c
        self.learner = learner
        self.m = fam.marginal.p
        self.cdf = _cdf(self.m)
        if learner == "erm":
            if tuple(fc.domain) != fam.support:
                raise DimensionError("function class domain must be the family's support")
            self.mat = fc.matrix

    def run(self, b_index: int, b: BitString, seed: int, trials: int) -> np.ndarray:
        eta = joint_for(self.fam, b).eta_array
        best = bayes_for(self.fam, b).array
        weights = self.m * np.abs(eta - self.c)
        size = self.m.size
        out = np.empty(trials)
        for t in range(trials):
            rng = _rng((seed, b_index, t))
            idx, labels = _draw(rng, self.cdf, eta, self.fam.n)
            pos = np.bincount(idx[labels == 1], minlength=size)
            neg = np.bincount(idx[labels == -1], minlength=size)
            if self.learner == "plugin":
                vals = _plugin_values(pos, neg, self.c)
            else:
                vals = self.mat[_erm_index(self.mat, pos, neg, self.c)]
            out[t] = math.fsum(weights[vals != best].tolist())
        return out


def _stats(regrets: np.ndarray) -> BitStats:
    trials = regrets.size
    mean = float(np.sum(regrets) / trials)
    se = float(np.std(regrets, ddof=1) / math.sqrt(trials)) if trials > 1 else 0.0
    return BitStats(mean, se, trials)


def estimate_minimax_risk(
    fam: HardInstanceFamily,
    learner: str = "plugin",
    trials: int = 200,
    seed: int = 0,
    fc: FiniteFunctionClass | None = None,
    workers: int = 1,
) -> SimReport:
    """Mean exact regret of ``learner`` on every member of ``fam``.

    Parameters
    ----------
    fam
        Hard-instance family; one member per bit string of length ``V - 1``.
    learner
        ``"plugin"`` or ``"erm"``. ERM defaults to the exhaustive class on the
        family's support.
    trials
        Independent sample-learn-evaluate rounds per member.
    seed
        Master seed. Trial ``t`` of member ``i`` uses the stream ``(seed, i, t)``,
        so results do not depend on ``workers``.
    workers
        Threads used to run members concurrently.
    """
    if learner not in LEARNERS:
        raise DomainError(f"learner must be one of {LEARNERS}, got {learner!r}")
    if trials < 1:
        raise DomainError(f"trials must be positive, got {trials}")
    if workers < 1:
        raise DomainError(f"workers must be positive, got {workers}")
    if seed < 0:
        raise DomainError(f"seed must be non-negative, got {seed}")
    if 2 ** (fam.V - 1) > MAX_HYPERCUBE:
        raise CapacityError(f"2^(V-1) = {2 ** (fam.V - 1)} members exceeds {MAX_HYPERCUBE}")
    if learner == "erm" and fc is None:
        fc = full_class(fam.support)
    if learner == "erm" and len(fc) == 0:
        raise DomainError("ERM over an empty function class")

    runner = _Trials(fam, learner, fc)
    members = fam.bitstrings()
    jobs = [(i, b, seed, trials) for i, b in enumerate(members)]
    if workers == 1:
        results = [runner.run(*job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda job: runner.run(*job), jobs))

    per_b = {b: _stats(r) for b, r in zip(members, results)}
    # first maximiser in hypercube order
    argmax_b = max(members, key=lambda b: per_b[b].mean_regret)
    worst = per_b[argmax_b].mean_regret
    bound = cost_theorem_bound(fam.spec, fam.V, fam.n)
    return SimReport(
        family=fam,
        learner=learner,
        seed=seed,
        per_b=per_b,
        max_mean_regret=worst,
        argmax_b=argmax_b,
        bound=bound,
        dominance_margin=worst - bound.value,
    )
