"""Finite discrete distributions, joint label distributions and bit strings.

Every object here is immutable. Probability vectors are stored as tuples and
exposed as read-only numpy arrays through ``.p`` for vectorised work.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import CapacityError, DimensionError, DomainError

PROB_ATOL = 1e-12
PRODUCT_CAPACITY = 10**6
_EPS = np.finfo(float).eps


def _readonly(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DiscreteDistribution:
    """Probability vector over an ordered list of opaque atom identifiers.

    Inputs whose total mass is within ``PROB_ATOL`` of one are renormalised;
    anything further off is rejected rather than silently repaired.
    Zero-probability atoms are kept.
    """

    atoms: tuple[str, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        atoms = tuple(str(a) for a in self.atoms)
        probs = tuple(float(x) for x in self.probs)
        if not atoms:
            raise DomainError("distribution needs at least one atom")
        if len(atoms) != len(probs):
            raise DimensionError(f"{len(atoms)} atoms but {len(probs)} probabilities")
        if len(set(atoms)) != len(atoms):
            raise DomainError("atom identifiers must be distinct")
        if any(not math.isfinite(x) or x < 0 for x in probs):
            raise DomainError(f"probabilities must be finite and non-negative: {probs}")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_ATOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        # below float residue, leave the vector alone so construction is idempotent
        if abs(total - 1.0) > len(probs) * _EPS:
            probs = tuple(x / total for x in probs)
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)

    @classmethod
    def from_probs(cls, probs: Iterable[float], prefix: str = "a") -> DiscreteDistribution:
        """Build a distribution with auto-generated atoms ``a0, a1, ...``."""
        probs = [float(x) for x in probs]
        return cls(tuple(f"{prefix}{i}" for i in range(len(probs))), tuple(probs))

    @cached_property
    def p(self) -> np.ndarray:
        return _readonly(self.probs)

    def __len__(self) -> int:
        return len(self.atoms)

    def to_dict(self) -> dict:
        return {"atoms": list(self.atoms), "probs": list(self.probs)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> DiscreteDistribution:
        return cls(tuple(data["atoms"]), tuple(data["probs"]))

    @classmethod
    def from_json(cls, text: str) -> DiscreteDistribution:
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class JointLabelDistribution:
    """Distribution over (x, y) pairs factored as marginal M(x) times eta(x) = P(y=+1 | x)."""

    marginal: DiscreteDistribution
    eta: tuple[float, ...]

    def __post_init__(self):
        eta = tuple(float(e) for e in self.eta)
        if len(eta) != len(self.marginal):
            raise DimensionError(
                f"eta has {len(eta)} entries for {len(self.marginal)} atoms"
            )
        if any(not (0.0 <= e <= 1.0) for e in eta):
            raise DomainError(f"eta values must lie in [0, 1]: {eta}")
        object.__setattr__(self, "eta", eta)

    @property
    def atoms(self) -> tuple[str, ...]:
        return self.marginal.atoms

    @cached_property
    def eta_array(self) -> np.ndarray:
        return _readonly(self.eta)

    def to_dict(self) -> dict:
        return {
            "atoms": list(self.marginal.atoms),
            "marginal": list(self.marginal.probs),
            "eta": list(self.eta),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> JointLabelDistribution:
        marginal = DiscreteDistribution(tuple(data["atoms"]), tuple(data["marginal"]))
        return cls(marginal, tuple(data["eta"]))

    @classmethod
    def from_json(cls, text: str) -> JointLabelDistribution:
        return cls.from_dict(json.loads(text))


def pair_atom(x: str, y: int) -> str:
    return f"({x},{'+1' if y > 0 else '-1'})"


def flatten(j: JointLabelDistribution) -> DiscreteDistribution:
    """Materialise the joint over pairs ``(x,+1), (x,-1)`` in atom order."""
    m = j.marginal.p
    eta = j.eta_array
    atoms: list[str] = []
    probs: list[float] = []
    for x, mx, ex in zip(j.atoms, m, eta):
        atoms += [pair_atom(x, 1), pair_atom(x, -1)]
        probs += [mx * ex, mx * (1.0 - ex)]
    return DiscreteDistribution(tuple(atoms), tuple(probs))


@dataclass(frozen=True)
class BitString:
    """A non-empty vector with entries in {-1, +1}."""

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if not bits:
            raise DomainError("bit string must be non-empty")
        if any(b not in (-1, 1) for b in bits):
            raise DomainError(f"bit string entries must be -1 or +1: {bits}")
        object.__setattr__(self, "bits", bits)

    def __len__(self) -> int:
        return len(self.bits)

    def __iter__(self):
        return iter(self.bits)

    def __getitem__(self, i):
        return self.bits[i]

    def __str__(self) -> str:
        return "".join("+" if b > 0 else "-" for b in self.bits)

    @classmethod
    def parse(cls, text: str) -> BitString:
        """Parse either the compact ``+-+`` form or a comma list ``1,-1,1``."""
        text = text.strip()
        if "," in text:
            return cls(tuple(int(t) for t in text.split(",")))
        mapping = {"+": 1, "-": -1}
        try:
            return cls(tuple(mapping[ch] for ch in text))
        except KeyError as exc:
            raise DomainError(f"cannot parse bit string {text!r}") from exc

    def flip(self, i: int) -> BitString:
        bits = list(self.bits)
        bits[i] = -bits[i]
        return BitString(tuple(bits))


def hypercube(d: int) -> list[BitString]:
    """All of {-1, +1}^d in lexicographic order (-1 before +1)."""
    return [BitString(bits) for bits in itertools.product((-1, 1), repeat=d)]


def hamming(a: BitString, b: BitString) -> int:
    if len(a) != len(b):
        raise DimensionError(f"bit strings of length {len(a)} and {len(b)}")
    return sum(x != y for x, y in zip(a.bits, b.bits))


def product_hellinger_sq(h2_single: float, n: int) -> float:
    """Squared Hellinger distance between n-fold products of a pair at distance ``h2_single``."""
    if not (-PROB_ATOL <= h2_single <= 2.0 + PROB_ATOL):
        raise DomainError(f"squared Hellinger distance must lie in [0, 2], got {h2_single}")
    if n < 1:
        raise DomainError(f"n must be positive, got {n}")
    h2 = min(max(h2_single, 0.0), 2.0)
    return 2.0 * (1.0 - (1.0 - h2 / 2.0) ** n)


def product_probs(factors: Sequence[np.ndarray], capacity: int = PRODUCT_CAPACITY) -> np.ndarray:
    """Flattened probability vector of the product of ``factors`` (C order)."""
    size = 1
    for f in factors:
        size *= len(f)
    if size > capacity:
        raise CapacityError(f"product support {size} exceeds capacity {capacity}")
    out = np.ones(1)
    for f in factors:
        out = np.multiply.outer(out, np.asarray(f, dtype=float)).ravel()
    return out


def product(dists: Sequence[DiscreteDistribution], capacity: int = PRODUCT_CAPACITY) -> DiscreteDistribution:
    """Explicit product distribution with atoms joined by ``&``."""
    probs = product_probs([d.p for d in dists], capacity)
    atoms = tuple("&".join(combo) for combo in itertools.product(*(d.atoms for d in dists)))
    return DiscreteDistribution(atoms, tuple(probs))


@dataclass(frozen=True)
class ClassifierTable:
    """A +/-1 valued function tabulated over a finite domain."""

    domain: tuple[str, ...]
    values: tuple[int, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        domain = tuple(str(a) for a in self.domain)
        values = tuple(int(v) for v in self.values)
        if len(domain) != len(values):
            raise DimensionError(f"{len(domain)} domain atoms but {len(values)} values")
        if any(v not in (-1, 1) for v in values):
            raise DomainError(f"classifier values must be -1 or +1: {values}")
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "_index", {a: i for i, a in enumerate(domain)})

    def __call__(self, x: str) -> int:
        return self.values[self._index[x]]

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.asarray(self.values, dtype=np.int8)
        arr.setflags(write=False)
        return arr
