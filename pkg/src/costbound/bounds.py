"""Minimax lower-bound calculators with a cost parameter.

Two-point (Le Cam) bounds, their coupled-prior average, the hypercube
(Assouad) bound and its Hellinger-based corollary, and the closed-form
regret bound for cost-sensitive classification over a VC class.

Every calculator returns a :class:`BoundReport` whose ``value`` is floored at
zero; the unfloored number is kept in ``constants["raw"]``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any, Hashable, Sequence

import numpy as np

from .dist import (
    PRODUCT_CAPACITY,
    BitString,
    DiscreteDistribution,
    hamming,
    product_hellinger_sq,
    product_probs,
)
from .divergence import HELLINGER2, divergence
from .errors import CapacityError, DomainError
from .jointrange import Certificate

RHO_TOL = 1e-12
MARGINAL_TOL = 1e-9
TRIANGLE_CHECK_LIMIT = 64
ASSOUAD_MAX_DIM = 16
THEOREM_K = 1.0 / 54.0


@dataclass(frozen=True)
class CostSpec:
    """Cost ``c`` in (0, 1) and margin ``h`` in [0, min(c, 1-c)]."""

    c: float
    h: float = 0.0

    def __post_init__(self):
        c, h = float(self.c), float(self.h)
        if not (0.0 < c < 1.0):
            raise DomainError(f"c must lie in (0, 1), got {c}")
        if not (0.0 <= h <= min(c, 1.0 - c)):
            raise DomainError(f"h must lie in [0, min(c, 1-c)] = [0, {min(c, 1 - c)}], got {h}")
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "h", h)

    @property
    def cbar(self) -> float:
        return 1.0 - self.c

    @property
    def cmin(self) -> float:
        return min(self.c, 1.0 - self.c)


def _param_key(param) -> str:
    return str(param)


@dataclass(frozen=True)
class FiniteFamily:
    """Finitely many parameters, each with a distribution, observed through ``n`` i.i.d. draws."""

    members: tuple[tuple[Hashable, DiscreteDistribution], ...]
    n: int = 1

    def __post_init__(self):
        members = tuple((param, dist) for param, dist in self.members)
        if not members:
            raise DomainError("family needs at least one member")
        if self.n < 1:
            raise DomainError(f"sample size must be positive, got {self.n}")
        atoms = members[0][1].atoms
        if any(d.atoms != atoms for _, d in members):
            raise DomainError("all member distributions must share atoms")
        keys = [_param_key(p) for p, _ in members]
        if len(set(keys)) != len(keys):
            raise DomainError("member parameters must be distinct")
        object.__setattr__(self, "members", members)

    @property
    def params(self) -> list:
        return [p for p, _ in self.members]

    def index(self, param) -> int:
        key = _param_key(param)
        for i, (p, _) in enumerate(self.members):
            if _param_key(p) == key:
                return i
        raise DomainError(f"parameter {param} is not in the family")

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "members": [
                {"param": _param_key(p), "atoms": list(d.atoms), "probs": list(d.probs)}
                for p, d in self.members
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> FiniteFamily:
        members = []
        for m in data["members"]:
            param = m["param"]
            if isinstance(param, str) and param and set(param) <= {"+", "-"}:
                param = BitString.parse(param)
            members.append((param, DiscreteDistribution(tuple(m["atoms"]), tuple(m["probs"]))))
        return cls(tuple(members), int(data.get("n", 1)))


@dataclass(frozen=True)
class Coupling:
    """A joint law on pairs of parameters; both marginals must agree."""

    pairs: tuple[tuple[tuple[Hashable, Hashable], float], ...]

    def __post_init__(self):
        pairs = tuple(((a, b), float(w)) for (a, b), w in self.pairs)
        if not pairs:
            raise DomainError("coupling needs at least one pair")
        if any(w < 0 for _, w in pairs):
            raise DomainError("coupling weights must be non-negative")
        total = math.fsum(w for _, w in pairs)
        if abs(total - 1.0) > 1e-12:
            raise DomainError(f"coupling weights sum to {total!r}, not 1")
        object.__setattr__(self, "pairs", pairs)


class Regime(str, enum.Enum):
    LE_CAM_PAIR = "LeCamPair"
    LE_CAM_COUPLED = "LeCamCoupled"
    ASSOUAD = "Assouad"
    ASSOUAD_PRACTICAL = "AssouadPractical"
    LARGE_MARGIN = "CostTheorem_LargeMargin"
    SMALL_MARGIN = "CostTheorem_SmallMargin"


@dataclass(frozen=True)
class BoundReport:
    value: float
    regime: Regime
    constants: dict[str, Any] = field(default_factory=dict)
    inputs: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "regime": self.regime.value,
            "constants": dict(self.constants),
            "inputs": dict(self.inputs),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


def _report(raw: float, regime: Regime, constants: dict, inputs: dict) -> BoundReport:
    constants = {"raw": raw, **constants}
    return BoundReport(max(raw, 0.0), regime, constants, inputs)


def _check_c(c: float) -> None:
    if not (0.0 < c < 1.0):
        raise DomainError(f"c must lie in (0, 1), got {c}")


# ---------------------------------------------------------------------------
# loss tables


def rho_matrix(fam: FiniteFamily, rho) -> np.ndarray:
    """Materialise ``rho`` as a square array in member order.

    ``rho`` may be an array-like indexed by member position or a callable
    taking two parameters.
    """
    k = len(fam.members)
    if callable(rho):
        params = fam.params
        mat = np.array([[float(rho(a, b)) for b in params] for a in params])
    else:
        mat = np.asarray(rho, dtype=float)
    if mat.shape != (k, k):
        raise DomainError(f"loss table must be {k}x{k}, got {mat.shape}")
    return mat


def validate_rho(mat: np.ndarray, tol: float = RHO_TOL) -> None:
    """Check non-negativity, symmetry and (for up to 64 parameters) the triangle inequality.

    Distinct parameters at distance zero are allowed.
    """
    if not np.all(np.isfinite(mat)):
        raise DomainError("loss table entries must be finite")
    if np.any(mat < -tol):
        raise DomainError("loss table must be non-negative")
    if np.max(np.abs(mat - mat.T), initial=0.0) > tol:
        raise DomainError("loss table must be symmetric")
    k = len(mat)
    if k <= TRIANGLE_CHECK_LIMIT:
        # via[i, j, l] = rho(i, l) + rho(l, j)
        via = mat[:, None, :] + mat.T[None, :, :]
        if np.any(mat - via.min(axis=2) > tol):
            raise DomainError("loss table violates the triangle inequality")


def hamming_rho(a: BitString, b: BitString) -> float:
    return float(hamming(a, b))


def discrete_rho(a, b) -> float:
    return 0.0 if _param_key(a) == _param_key(b) else 1.0


# ---------------------------------------------------------------------------
# primitive divergence between n-fold products


class _ProductPrimitive:
    """Evaluates ``I_{f_c}(P_i^n, P_j^n)`` for members of a family, exactly or by a Hellinger bound."""

    def __init__(self, fam: FiniteFamily, c: float, mode: str, capacity: int = PRODUCT_CAPACITY):
        if mode not in ("auto", "exact", "bounded"):
            raise DomainError(f"mode must be auto, exact or bounded, got {mode!r}")
        size = len(fam.members[0][1]) ** fam.n
        if mode == "auto":
            mode = "exact" if size <= capacity else "bounded"
        if mode == "exact" and size > capacity:
            raise CapacityError(
                f"exact product over {len(fam.members[0][1])}^{fam.n} = {size} atoms "
                f"exceeds capacity {capacity}"
            )
        self.fam = fam
        self.c = c
        self.cmin = min(c, 1.0 - c)
        self.mode = mode
        self.capacity = capacity
        self._products: dict[int, np.ndarray] = {}

    def _product(self, i: int) -> np.ndarray:
        if i not in self._products:
            dist = self.fam.members[i][1]
            self._products[i] = product_probs([dist.p] * self.fam.n, self.capacity)
        return self._products[i]

    def __call__(self, i: int, j: int) -> float:
        if self.mode == "exact":
            pn, qn = self._product(i), self._product(j)
            return self.cmin - math.fsum(np.minimum((1.0 - self.c) * qn, self.c * pn))
        p, q = self.fam.members[i][1], self.fam.members[j][1]
        h2n = product_hellinger_sq(divergence(HELLINGER2, p, q), self.fam.n)
        return self.cmin * math.sqrt(h2n)


def _echo_family(fam: FiniteFamily) -> dict:
    return {"n": fam.n, "params": [_param_key(p) for p in fam.params]}


def lecam_pair_bound(
    fam: FiniteFamily, rho, c: float, mode: str = "auto"
) -> BoundReport:
    """Two-point bound ``sup rho(a, b) (min(c,1-c) - I_{f_c}(P_a^n, P_b^n))``.

    The supremum runs over ordered pairs of distinct members, since the
    primitive divergence is not symmetric in its arguments. ``mode="bounded"``
    replaces the divergence by ``min(c,1-c) He(P_a^n, P_b^n)``, which gives a
    weaker but still valid bound without enumerating the product space.
    """
    _check_c(c)
    mat = rho_matrix(fam, rho)
    validate_rho(mat)
    if len(fam.members) < 2:
        raise DomainError("two-point bound needs at least two members")
    div = _ProductPrimitive(fam, c, mode)
    best, best_pair, best_div = -math.inf, (0, 1), math.nan
    k = len(fam.members)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            d = div(i, j)
            val = mat[i, j] * (div.cmin - d)
            if val > best:
                best, best_pair, best_div = val, (i, j), d
    constants = {
        "cmin": div.cmin,
        "divergence": best_div,
        "pair": [_param_key(fam.params[best_pair[0]]), _param_key(fam.params[best_pair[1]])],
    }
    inputs = {"c": c, "mode": div.mode, **_echo_family(fam), "rho": mat.tolist()}
    return _report(best, Regime.LE_CAM_PAIR, constants, inputs)


def coupling_marginals(fam: FiniteFamily, mu: Coupling) -> tuple[np.ndarray, np.ndarray]:
    k = len(fam.members)
    left, right = np.zeros(k), np.zeros(k)
    for (a, b), w in mu.pairs:
        left[fam.index(a)] += w
        right[fam.index(b)] += w
    return left, right


def lecam_coupled_bound(
    fam: FiniteFamily, rho, mu: Coupling, c: float, mode: str = "auto"
) -> BoundReport:
    """Coupled-prior bound ``E_mu[rho(a, b) (min(c,1-c) - I_{f_c}(P_a^n, P_b^n))]``."""
    _check_c(c)
    mat = rho_matrix(fam, rho)
    validate_rho(mat)
    left, right = coupling_marginals(fam, mu)
    if np.max(np.abs(left - right)) > MARGINAL_TOL:
        raise DomainError("coupling marginals differ")
    div = _ProductPrimitive(fam, c, mode)
    terms = []
    for (a, b), w in mu.pairs:
        i, j = fam.index(a), fam.index(b)
        terms.append(w * mat[i, j] * (div.cmin - div(i, j)))
    raw = math.fsum(terms)
    inputs = {
        "c": c,
        "mode": div.mode,
        **_echo_family(fam),
        "rho": mat.tolist(),
        "coupling": [[_param_key(a), _param_key(b), w] for (a, b), w in mu.pairs],
    }
    return _report(raw, Regime.LE_CAM_COUPLED, {"cmin": div.cmin}, inputs)


def _hypercube_dimension(fam: FiniteFamily) -> int:
    params = fam.params
    if not all(isinstance(p, BitString) for p in params):
        raise DomainError("hypercube bound needs bit-string parameters")
    d = len(params[0])
    if any(len(p) != d for p in params):
        raise DomainError("bit-string parameters must share a length")
    if d > ASSOUAD_MAX_DIM:
        raise CapacityError(f"hypercube dimension {d} exceeds {ASSOUAD_MAX_DIM}")
    if len({p.bits for p in params}) != 2**d:
        raise DomainError(f"family must contain all of {{-1,1}}^{d}")
    return d


def assouad_coupling(params: Sequence[BitString], coord: int) -> Coupling:
    """Uniform prior paired with the neighbour that differs in ``coord`` only."""
    w = 1.0 / len(params)
    return Coupling(tuple(((p, p.flip(coord)), w) for p in params))


def assouad_bound(fam: FiniteFamily, c: float, mode: str = "auto") -> BoundReport:
    """Hypercube bound ``d (min(c,1-c) - max over neighbours I_{f_c}(P_a^n, P_b^n))``.

    Ties in the maximum go to the smallest flipped coordinate.
    """
    _check_c(c)
    d = _hypercube_dimension(fam)
    div = _ProductPrimitive(fam, c, mode)
    lookup = {p.bits: i for i, p in enumerate(fam.params)}
    worst, worst_bit = -math.inf, 0
    for coord in range(d):
        for i, p in enumerate(fam.params):
            val = div(i, lookup[p.flip(coord).bits])
            if val > worst:
                worst, worst_bit = val, coord
    raw = d * (div.cmin - worst)
    constants = {"cmin": div.cmin, "max_adjacent_divergence": worst, "argmax_bit": worst_bit, "d": d}
    inputs = {"c": c, "mode": div.mode, **_echo_family(fam)}
    return _report(raw, Regime.ASSOUAD, constants, inputs)


def assouad_practical_bound(d: int, c: float, alpha: float, n: int) -> BoundReport:
    """``d min(c,1-c) (1 - sqrt(alpha n))`` given neighbour Hellinger distances at most ``alpha``."""
    _check_c(c)
    if d < 1 or n < 1:
        raise DomainError("d and n must be positive")
    if alpha < 0:
        raise DomainError(f"alpha must be non-negative, got {alpha}")
    cmin = min(c, 1.0 - c)
    raw = d * cmin * (1.0 - math.sqrt(alpha * n))
    constants = {"cmin": cmin, "floored": raw < 0}
    return _report(raw, Regime.ASSOUAD_PRACTICAL, constants, {"d": d, "c": c, "alpha": alpha, "n": n})


def margin_threshold(c: float, V: int, n: int) -> float:
    """Margin above which the large-margin branch of the classification bound applies."""
    return math.sqrt(min(c, 1.0 - c) * (V - 1) / (9.0 * n))


def large_margin_value(c: float, V: int, n: int, h: float) -> float:
    cmin = min(c, 1.0 - c)
    return cmin**2 * (V - 1) / (54.0 * n * h)


def small_margin_value(c: float, V: int, n: int) -> float:
    cmin = min(c, 1.0 - c)
    return cmin**1.5 / 18.0 * math.sqrt((V - 1) / n)


def cost_theorem_bound(spec: CostSpec, V: int, n: int) -> BoundReport:
    """Minimax regret lower bound for cost-sensitive classification over a VC class.

    Parameters
    ----------
    spec : CostSpec
        Cost ``c`` and Massart-type margin ``h``.
    V : int
        VC dimension of the class, at least 2.
    n : int
        Sample size, at least ``V``.

    Returns
    -------
    BoundReport
        ``(c^2)(V-1)/(54 n h)`` when ``h >= h*`` and ``c^1.5/18 sqrt((V-1)/n)``
        otherwise (``c`` meaning ``min(c, 1-c)`` throughout), with
        ``h* = sqrt(c (V-1) / (9n))``. The constants also carry the rate-form
        value ``K c min(sqrt(c V / n), c V / (n h))`` with ``K = 1/54``.
    """
    if V < 2:
        raise DomainError(f"VC dimension must be at least 2, got {V}")
    if n < V:
        raise DomainError(f"sample size n={n} must be at least V={V}")
    c, h, cmin = spec.c, spec.h, spec.cmin
    h_star = margin_threshold(c, V, n)
    small = small_margin_value(c, V, n)
    if h >= h_star:
        regime = Regime.LARGE_MARGIN
        raw = large_margin_value(c, V, n, h)
    else:
        regime = Regime.SMALL_MARGIN
        raw = small
    rate = math.sqrt(cmin * V / n) if h == 0 else min(math.sqrt(cmin * V / n), cmin * V / (n * h))
    constants = {
        "cmin": cmin,
        "h_star": h_star,
        "small_margin_value": small,
        "K": THEOREM_K,
        "min_form": THEOREM_K * cmin * rate,
    }
    if h > 0:
        constants["large_margin_value"] = large_margin_value(c, V, n, h)
    inputs = {"c": c, "h": h, "V": V, "n": n}
    return _report(raw, regime, constants, inputs)


def aux_lemma_gap(c: float, h: float) -> float:
    """``2h^2/min(c,1-c) - (1 - sqrt(c^2-h^2) - sqrt((1-c)^2-h^2))``; never negative."""
    _check_c(c)
    cmin = min(c, 1.0 - c)
    if h < 0 or h > cmin:
        raise DomainError(f"h must lie in [0, {cmin}], got {h}")
    cbar = 1.0 - c
    lhs = 1.0 - math.sqrt(max((c - h) * (c + h), 0.0)) - math.sqrt(max((cbar - h) * (cbar + h), 0.0))
    return 2.0 * h * h / cmin - lhs


def hellinger_alpha(spec: CostSpec, p: float) -> float:
    """Neighbour Hellinger budget ``4 p h^2 / min(c, 1-c)`` for the hard instance."""
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"p must lie in [0, 1], got {p}")
    return 4.0 * p * spec.h**2 / spec.cmin



def certify_aux_lemma(grid: int) -> Certificate:
    """Largest negative part of :func:`aux_lemma_gap` on a ``grid x grid`` lattice.

    ``c`` runs over ``grid`` interior points of (0, 1) and ``h`` over ``grid``
    evenly spaced values of [0, min(c, 1-c)], both endpoints included.
    """
    if grid < 2:
        raise DomainError(f"grid must be at least 2, got {grid}")
    cs = np.linspace(0.0, 1.0, grid + 2)[1:-1]
    cmin = np.minimum(cs, 1.0 - cs)
    cc = np.repeat(cs, grid)
    hh = (cmin[:, None] * np.linspace(0.0, 1.0, grid)[None, :]).ravel()
    mm = np.repeat(cmin, grid)
    lhs = (
        1.0
        - np.sqrt(np.maximum((cc - hh) * (cc + hh), 0.0))
        - np.sqrt(np.maximum((1.0 - cc - hh) * (1.0 - cc + hh), 0.0))
    )
    viol = lhs - 2.0 * hh * hh / mm
    i = int(np.argmax(viol))
    return Certificate(float(viol[i]), (float(cc[i]), float(hh[i])))
