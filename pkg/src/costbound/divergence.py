"""f-divergences between finite discrete distributions.

Four named generators are supported (KL, total variation, chi-square and
squared Hellinger) together with the c-primitive divergence, whose tent
generator ``f_c(t) = min(1-c, c) - min(1-c, c*t)`` is the building block of
every other f-divergence through a weighted integral over ``c``.

Conventions: ``0 log 0 = 0`` and ``0/0 = 0``; KL and chi-square are ``inf``
when P puts mass where Q has none. ``divergence(TV, ...)`` is the unhalved
``sum |p - q|`` in ``[0, 2]``; :func:`tv_halved` gives the version in ``[0, 1]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .dist import PRODUCT_CAPACITY, DiscreteDistribution, product_probs
from .errors import CapacityError, DimensionError, DomainError
from .quadrature import integrate

_TAGS = ("KL", "TV", "ChiSq", "HellingerSq", "Primitive")
_CLI_NAMES = {"kl": "KL", "tv": "TV", "chi2": "ChiSq", "hellinger2": "HellingerSq"}


@dataclass(frozen=True)
class DivergenceKind:
    tag: str
    c: float | None = None

    def __post_init__(self):
        if self.tag not in _TAGS:
            raise DomainError(f"unknown divergence kind {self.tag!r}")
        if self.tag == "Primitive":
            if self.c is None or not (0.0 < self.c < 1.0):
                raise DomainError(f"primitive divergence needs c in (0, 1), got {self.c}")
            object.__setattr__(self, "c", float(self.c))
        elif self.c is not None:
            raise DomainError(f"{self.tag} takes no cost parameter")

    @property
    def name(self) -> str:
        """Command-line spelling, e.g. ``kl`` or ``primitive:0.7``."""
        if self.tag == "Primitive":
            return f"primitive:{self.c!r}"
        return {v: k for k, v in _CLI_NAMES.items()}[self.tag]

    @classmethod
    def parse(cls, text: str) -> DivergenceKind:
        text = text.strip().lower()
        if text in _CLI_NAMES:
            return cls(_CLI_NAMES[text])
        if text.startswith("primitive:"):
            try:
                c = float(text.split(":", 1)[1])
            except ValueError as exc:
                raise DomainError(f"bad primitive cost in {text!r}") from exc
            return cls("Primitive", c)
        raise DomainError(f"unknown divergence kind {text!r}")


KL = DivergenceKind("KL")
TV = DivergenceKind("TV")
CHI2 = DivergenceKind("ChiSq")
HELLINGER2 = DivergenceKind("HellingerSq")


def primitive_kind(c: float) -> DivergenceKind:
    return DivergenceKind("Primitive", c)


def _check_c(c: float) -> None:
    if not (0.0 < c < 1.0):
        raise DomainError(f"cost parameter c must lie in (0, 1), got {c}")


def _shared(p: DiscreteDistribution, q: DiscreteDistribution) -> tuple[np.ndarray, np.ndarray]:
    if p.atoms != q.atoms:
        raise DomainError("distributions must share the same atom list")
    return p.p, q.p


def _kl(p, q):
    # generator t log t - t + 1: same divergence, but every term is non-negative
    # and p (d - log1p(d)) with d = q/p - 1 keeps full accuracy when p is close to q
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        safe_p = np.where(p > 0, p, 1.0)
        d = (q - p) / safe_p
        near = p * (d - np.log1p(d))
        far = p * (np.log(safe_p) - np.log(q)) + (q - p)
        terms = np.where(p > 0, np.where(np.abs(d) < 0.5, near, far), q)
    out = terms.sum(axis=-1)
    escaped = ((p > 0) & (q == 0)).any(axis=-1)
    return np.where(escaped, np.inf, out)


def _chi2(p, q):
    # values past the float range overflow to +inf, which is the honest answer
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        terms = np.where(q > 0, (p - q) ** 2 / np.where(q > 0, q, 1.0), 0.0)
    out = terms.sum(axis=-1)
    escaped = ((p > 0) & (q == 0)).any(axis=-1)
    return np.where(escaped, np.inf, out)


def _tv(p, q):
    return np.abs(p - q).sum(axis=-1)


def _hellinger2(p, q):
    return ((np.sqrt(p) - np.sqrt(q)) ** 2).sum(axis=-1)


def _primitive_generator(c, p, q):
    m = min(c, 1.0 - c)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        ratio = np.where(q > 0, p / np.where(q > 0, q, 1.0), 0.0)
    f = m - np.minimum(1.0 - c, c * ratio)
    # q = 0 atoms contribute p * f'(inf) = 0 since f_c is bounded
    return np.where(q > 0, q * f, 0.0).sum(axis=-1)


def _primitive_min(c, p, q):
    return min(c, 1.0 - c) - np.minimum((1.0 - c) * q, c * p).sum(axis=-1)


def _primitive_abs(c, p, q):
    return min(c, 1.0 - c) - 0.5 + 0.5 * np.abs(c * p - (1.0 - c) * q).sum(axis=-1)


def _primitive_tv(c, p, q):
    return 0.5 * np.abs(c * p - (1.0 - c) * q).sum(axis=-1) - 0.5 * abs(1.0 - 2.0 * c)


def _exact_at_equality(form):
    # identical inputs give exactly zero rather than cancellation residue
    def wrapped(c, p, q):
        return np.where(np.all(p == q, axis=-1), 0.0, form(c, p, q))

    return wrapped


_PRIMITIVE_FORMS = {
    k: _exact_at_equality(f)
    for k, f in {1: _primitive_generator, 2: _primitive_min, 3: _primitive_abs, 4: _primitive_tv}.items()
}


def divergence_values(kind: DivergenceKind, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Vectorised divergence over the last axis of two probability arrays."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    if p.shape != q.shape:
        raise DimensionError(f"shapes {p.shape} and {q.shape} differ")
    if kind.tag == "KL":
        return _kl(p, q)
    if kind.tag == "TV":
        return _tv(p, q)
    if kind.tag == "ChiSq":
        return _chi2(p, q)
    if kind.tag == "HellingerSq":
        return _hellinger2(p, q)
    return _PRIMITIVE_FORMS[2](kind.c, p, q)


def divergence(kind: DivergenceKind, p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """I_f(P, Q) for the generator named by ``kind``; may be ``math.inf``."""
    pa, qa = _shared(p, q)
    return float(divergence_values(kind, pa, qa))


def tv_halved(p: DiscreteDistribution, q: DiscreteDistribution) -> float:
    """Total variation in the ``[0, 1]`` convention, ``0.5 * sum |p - q|``."""
    return 0.5 * divergence(TV, p, q)


def primitive(c: float, p: DiscreteDistribution, q: DiscreteDistribution, form: int = 2) -> float:
    """c-primitive divergence evaluated through one of its four equivalent expressions.

    1. generator form ``sum q_i f_c(p_i / q_i)``
    2. ``min(c, 1-c) - sum min((1-c) q_i, c p_i)``
    3. ``min(c, 1-c) - 1/2 + 1/2 sum |c p_i - (1-c) q_i|``
    4. ``1/2 d_TV(cP, (1-c)Q) - 1/2 |1 - 2c|``
    """
    _check_c(c)
    if form not in _PRIMITIVE_FORMS:
        raise DomainError(f"form must be one of 1, 2, 3, 4, got {form}")
    pa, qa = _shared(p, q)
    return float(_PRIMITIVE_FORMS[form](c, pa, qa))


# Second derivatives of the smooth generators.
_SECOND_DERIVATIVE = {
    "KL": lambda u: 1.0 / u,
    "ChiSq": lambda u: 2.0 + 0.0 * u,
    "HellingerSq": lambda u: 0.5 * u ** -1.5,
}


def weight(kind: DivergenceKind, c):
    """Weight ``c**-3 * f''((1-c)/c)`` of the primitive at cost ``c``.

    Accepts a scalar or an array of costs. Only generators with a classical
    second derivative are supported.
    """
    if kind.tag not in _SECOND_DERIVATIVE:
        raise DomainError(f"{kind.tag} has no classical second derivative")
    c_arr = np.asarray(c, dtype=float)
    if np.any((c_arr <= 0) | (c_arr >= 1)):
        raise DomainError("weight is defined for c in (0, 1)")
    with np.errstate(over="ignore"):
        out = _SECOND_DERIVATIVE[kind.tag]((1.0 - c_arr) / c_arr) / c_arr**3
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class QuadratureConfig:
    """Controls for the integral-representation check.

    ``endpoint_margin`` is the width, in the substituted variable, of the two
    end panels that are split off before adaptive refinement starts.
    """

    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 2000
    endpoint_margin: float = 0.05

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise DomainError("quadrature tolerances must be positive")
        if self.max_subdivisions < 1:
            raise DomainError("max_subdivisions must be positive")
        if not (0.0 < self.endpoint_margin < 0.5):
            raise DomainError("endpoint_margin must lie in (0, 0.5)")


class IntegralCheck(NamedTuple):
    lhs: float
    rhs: float
    rel_err: float
    subdivisions: int

    def to_dict(self) -> dict:
        return {"lhs": self.lhs, "rhs": self.rhs, "rel_err": self.rel_err,
                "subdivisions": self.subdivisions}


def primitive_curve(cs: np.ndarray, p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Primitive divergence for an array of costs at once."""
    cs = np.asarray(cs, dtype=float)[:, None]
    return np.minimum(cs, 1.0 - cs)[:, 0] - np.minimum((1.0 - cs) * q, cs * p).sum(axis=1)


def verify_integral_representation(
    kind: DivergenceKind,
    p: DiscreteDistribution,
    q: DiscreteDistribution,
    cfg: QuadratureConfig = QuadratureConfig(),
) -> IntegralCheck:
    """Compare a closed-form divergence against the weighted integral of primitives.

    The integral over ``c`` is taken after substituting ``c = sin(pi t / 2)**2``,
    which flattens the weight's poles at both ends. The primitive has kinks at
    ``c = q_i / (p_i + q_i)`` and at ``c = 1/2``; those are passed to the
    integrator as breakpoints.
    Below the smallest kink and above the largest one the primitive vanishes
    identically, so the integrand is set to exactly zero there instead of
    multiplying rounding residue by a huge weight.
    """
    if kind.tag not in _SECOND_DERIVATIVE:
        raise DomainError(f"integral check supports KL, ChiSq, HellingerSq; got {kind.tag}")
    pa, qa = _shared(p, q)
    if np.any(pa <= 0) or np.any(qa <= 0):
        raise DomainError("integral check needs full-support distributions")

    lhs = divergence(kind, p, q)

    kinks = qa / (pa + qa)
    c_lo, c_hi = float(kinks.min()), float(kinks.max())

    def integrand(t: np.ndarray) -> np.ndarray:
        s = np.sin(0.5 * np.pi * t)
        cs = s * s
        inside = (cs > c_lo) & (cs < c_hi)
        out = np.zeros_like(t)
        if not inside.any():
            return out
        ci = cs[inside]
        prim = np.maximum(primitive_curve(ci, pa, qa), 0.0)
        vals = np.zeros_like(ci)
        nz = prim != 0
        if nz.any():
            jac = 0.5 * np.pi * np.sin(np.pi * t[inside][nz])
            vals[nz] = prim[nz] * np.asarray(weight(kind, ci[nz])) * jac
        out[inside] = vals
        return out

    breaks = [cfg.endpoint_margin, 0.5, 1.0 - cfg.endpoint_margin]
    breaks += [float(2.0 / np.pi * np.arcsin(np.sqrt(k))) for k in kinks]
    res = integrate(
        integrand, 0.0, 1.0,
        rel_tol=cfg.rel_tol, abs_tol=cfg.abs_tol,
        max_subdivisions=cfg.max_subdivisions, breakpoints=breaks,
    )
    rel_err = abs(lhs - res.value) / max(abs(lhs), cfg.abs_tol)
    return IntegralCheck(lhs, res.value, rel_err, res.subdivisions)


def subadditivity_gap(
    kind: DivergenceKind,
    pairs: Sequence[tuple[DiscreteDistribution, DiscreteDistribution]],
    capacity: int = PRODUCT_CAPACITY,
) -> float:
    """``sum_i D(P_i, Q_i) - D(prod P_i, prod Q_i)``, non-negative for TV and He^2.

    The Hellinger side uses exact tensorisation; the TV side enumerates the
    product support explicitly and so is capped at ``capacity`` atoms.
    """
    if kind.tag not in ("TV", "HellingerSq"):
        raise DomainError(f"sub-additivity is checked for TV and HellingerSq, not {kind.tag}")
    if not pairs:
        raise DomainError("need at least one pair")
    singles = [divergence(kind, p, q) for p, q in pairs]
    if kind.tag == "HellingerSq":
        affinity = math.prod(1.0 - min(max(h2, 0.0), 2.0) / 2.0 for h2 in singles)
        joint = 2.0 * (1.0 - affinity)
    else:
        size = math.prod(len(p) for p, _ in pairs)
        if size > capacity:
            raise CapacityError(f"product support {size} exceeds capacity {capacity}")
        pp = product_probs([p.p for p, _ in pairs], capacity)
        qq = product_probs([q.p for _, q in pairs], capacity)
        joint = float(_tv(pp, qq))
    return math.fsum(singles) - joint
