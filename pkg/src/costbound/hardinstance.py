"""Worst-case instance family over a shattered set, plus brute-force VC utilities.

The family lives on synthetic atoms ``x1 .. xV``. Each ``b`` in {-1,1}^(V-1)
puts mass ``p`` on ``x1 .. x(V-1)`` with ``eta = c + h b_i`` there, and the
remaining mass on ``xV`` with ``eta = 0``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .bounds import CostSpec, hellinger_alpha, margin_threshold
from .dist import (
    BitString,
    ClassifierTable,
    DiscreteDistribution,
    JointLabelDistribution,
    hamming,
    hypercube,
)
from .errors import CapacityError, DimensionError, DomainError

VC_DOMAIN_LIMIT = 24
P_TOL = 1e-12


@dataclass(frozen=True)
class HardInstanceFamily:
    """Parameters of the worst-case family.

    ``spec`` keeps the requested margin; ``effective_h`` is the margin the
    distributions actually use (raised to the small-margin threshold when the
    requested one is below it). ``substituted`` and ``clipped`` flag those
    adjustments; ``margin_capped`` flags the rare case where the threshold
    itself exceeds ``min(c, 1-c)`` and had to be capped.
    """

    V: int
    n: int
    spec: CostSpec
    p: float
    effective_h: float
    substituted: bool = False
    clipped: bool = False
    margin_capped: bool = False

    def __post_init__(self):
        if self.V < 2:
            raise DomainError(f"V must be at least 2, got {self.V}")
        if self.n < 1:
            raise DomainError(f"n must be positive, got {self.n}")
        p_max = 1.0 / (self.V - 1)
        if not (0.0 <= self.p <= p_max + P_TOL):
            raise DomainError(f"p must lie in [0, 1/(V-1)] = [0, {p_max}], got {self.p}")
        if not (0.0 <= self.effective_h <= self.spec.cmin):
            raise DomainError(f"effective margin {self.effective_h} outside [0, {self.spec.cmin}]")

    @property
    def support(self) -> tuple[str, ...]:
        return tuple(f"x{i}" for i in range(1, self.V + 1))

    @property
    def effective_spec(self) -> CostSpec:
        return CostSpec(self.spec.c, self.effective_h)

    @cached_property
    def marginal(self) -> DiscreteDistribution:
        last = max(1.0 - (self.V - 1) * self.p, 0.0)
        return DiscreteDistribution(self.support, (self.p,) * (self.V - 1) + (last,))

    def bitstrings(self) -> list[BitString]:
        return hypercube(self.V - 1)

    def to_dict(self) -> dict:
        return {
            "V": self.V,
            "n": self.n,
            "c": self.spec.c,
            "h": self.spec.h,
            "effective_h": self.effective_h,
            "p": self.p,
            "substituted": self.substituted,
            "clipped": self.clipped,
            "margin_capped": self.margin_capped,
            "support": list(self.support),
            "marginal": list(self.marginal.probs),
            "alpha": hellinger_alpha(self.effective_spec, self.p),
            "adjacent_hellinger_sq": adjacent_unit_hellinger_sq(self),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def build_family(V: int, n: int, spec: CostSpec, p_override: float | None = None) -> HardInstanceFamily:
    """Construct the family for VC dimension ``V`` and sample size ``n``.

    The default per-point mass is ``min(c, 1-c) / (9 n h^2)``, clipped to the
    feasible ``1/(V-1)``. Margins below ``sqrt(min(c,1-c)(V-1)/(9n))`` are
    replaced by that threshold first.
    """
    if V < 2:
        raise DomainError(f"V must be at least 2, got {V}")
    if n < V:
        raise DomainError(f"n={n} must be at least V={V}")
    p_max = 1.0 / (V - 1)
    cmin = spec.cmin
    h = spec.h
    h_tilde = margin_threshold(spec.c, V, n)
    substituted = margin_capped = False
    if h < h_tilde:
        h, substituted = h_tilde, True
        if h > cmin:
            h, margin_capped = cmin, True

    clipped = False
    if p_override is not None:
        if not (0.0 <= p_override <= p_max):
            raise DomainError(f"p_override must lie in [0, {p_max}], got {p_override}")
        p = float(p_override)
    else:
        p = cmin / (9.0 * n * h * h)
        if p > p_max:
            clipped = p > p_max * (1.0 + P_TOL)
            p = p_max
    return HardInstanceFamily(V, n, spec, p, h, substituted, clipped, margin_capped)


def _check_b(fam: HardInstanceFamily, b: BitString) -> None:
    if len(b) != fam.V - 1:
        raise DimensionError(f"bit string has length {len(b)}, family needs {fam.V - 1}")


def joint_for(fam: HardInstanceFamily, b: BitString) -> JointLabelDistribution:
    _check_b(fam, b)
    c, h = fam.spec.c, fam.effective_h
    eta = tuple(c + h * bi for bi in b.bits) + (0.0,)
    return JointLabelDistribution(fam.marginal, eta)


def bayes_for(fam: HardInstanceFamily, b: BitString) -> ClassifierTable:
    _check_b(fam, b)
    return ClassifierTable(fam.support, b.bits + (-1,))


def adjacent_unit_hellinger_sq(fam: HardInstanceFamily) -> float:
    """Squared Hellinger distance between two members differing in one bit."""
    c, h = fam.spec.c, fam.effective_h
    cbar = 1.0 - c
    # factored differences of squares stay accurate as h approaches min(c, 1-c)
    return 2.0 * fam.p * (
        1.0 - math.sqrt(max((c - h) * (c + h), 0.0)) - math.sqrt(max((cbar - h) * (cbar + h), 0.0))
    )


def adjacent_hellinger_sq(fam: HardInstanceFamily, b: BitString, b2: BitString) -> float:
    """Closed-form He^2 between the members for ``b`` and ``b2``: unit distance times Hamming distance."""
    _check_b(fam, b)
    _check_b(fam, b2)
    return adjacent_unit_hellinger_sq(fam) * hamming(b, b2)


# ---------------------------------------------------------------------------
# VC dimension by enumeration


@dataclass(frozen=True)
class FiniteFunctionClass:
    """Distinct +/-1 tables over a common finite domain, in first-seen order."""

    domain: tuple[str, ...]
    functions: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        domain = tuple(str(a) for a in self.domain)
        if len(set(domain)) != len(domain):
            raise DomainError("domain atoms must be distinct")
        seen: dict[tuple[int, ...], None] = {}
        for f in self.functions:
            f = tuple(int(v) for v in f)
            if len(f) != len(domain):
                raise DimensionError(f"function table of length {len(f)} on a domain of {len(domain)}")
            if any(v not in (-1, 1) for v in f):
                raise DomainError(f"function values must be -1 or +1: {f}")
            seen.setdefault(f, None)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "functions", tuple(seen))

    def __len__(self) -> int:
        return len(self.functions)

    @cached_property
    def matrix(self) -> np.ndarray:
        mat = np.asarray(self.functions, dtype=np.int8).reshape(len(self.functions), len(self.domain))
        mat.setflags(write=False)
        return mat

    def table(self, i: int) -> ClassifierTable:
        return ClassifierTable(self.domain, self.functions[i])

    def to_dict(self) -> dict:
        return {"domain": list(self.domain), "functions": [list(f) for f in self.functions]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> FiniteFunctionClass:
        return cls(tuple(data["domain"]), tuple(tuple(f) for f in data["functions"]))

    @classmethod
    def from_json(cls, text: str) -> FiniteFunctionClass:
        return cls.from_dict(json.loads(text))


def full_class(domain) -> FiniteFunctionClass:
    domain = tuple(domain)
    return FiniteFunctionClass(domain, tuple(itertools.product((-1, 1), repeat=len(domain))))


def threshold_class(m: int) -> FiniteFunctionClass:
    """``x -> sign(x - t)`` on points ``0 .. m-1`` for every distinct cut."""
    funcs = [tuple(1 if x >= t else -1 for x in range(m)) for t in range(m + 1)]
    return FiniteFunctionClass(tuple(f"t{x}" for x in range(m)), tuple(funcs))


def interval_class(m: int) -> FiniteFunctionClass:
    """+1 on a contiguous run of points ``0 .. m-1`` (possibly empty), -1 elsewhere."""
    funcs = [tuple([-1] * m)]
    for lo in range(m):
        for hi in range(lo, m):
            funcs.append(tuple(1 if lo <= x <= hi else -1 for x in range(m)))
    return FiniteFunctionClass(tuple(f"t{x}" for x in range(m)), tuple(funcs))


def _restriction_count(mat: np.ndarray, subset: tuple[int, ...]) -> int:
    if not subset:
        return 1 if len(mat) else 0
    weights = 1 << np.arange(len(subset), dtype=np.int64)
    codes = (mat[:, subset] > 0).astype(np.int64) @ weights
    return len(np.unique(codes))


def _check_capacity(fc: FiniteFunctionClass) -> None:
    if len(fc.domain) > VC_DOMAIN_LIMIT:
        raise CapacityError(f"domain of {len(fc.domain)} atoms exceeds {VC_DOMAIN_LIMIT}")


def shatter_coefficient(fc: FiniteFunctionClass, m: int) -> int:
    """Largest number of distinct restrictions of ``fc`` to ``m`` domain points."""
    _check_capacity(fc)
    if not (1 <= m <= len(fc.domain)):
        raise DomainError(f"m must lie in [1, {len(fc.domain)}], got {m}")
    best = 0
    cap = min(len(fc), 2**m)
    for subset in itertools.combinations(range(len(fc.domain)), m):
        best = max(best, _restriction_count(fc.matrix, subset))
        if best == cap:
            break
    return best


def vc_dimension(fc: FiniteFunctionClass) -> int:
    """Size of the largest shattered subset of the domain; 0 if no single point is."""
    _check_capacity(fc)
    if len(fc) == 0:
        raise DomainError("VC dimension of an empty class")
    # shattering m points needs 2^m distinct functions
    limit = min(len(fc.domain), int(math.floor(math.log2(len(fc)))))
    dim = 0
    for m in range(1, limit + 1):
        if shatter_coefficient(fc, m) == 2**m:
            dim = m
        else:
            break
    return dim
