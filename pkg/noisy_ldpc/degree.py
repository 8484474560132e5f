"""
Edge-perspective degree distributions of irregular LDPC codes.
"""

import math
from dataclasses import dataclass
from typing import Any, Dict, Iterable, List, Mapping, Tuple, Union

NORMALIZATION_TOLERANCE = 1e-9

Terms = Tuple[Tuple[int, float], ...]
TermsLike = Union[Mapping[int, float], Iterable[Tuple[int, float]], Iterable[List[float]]]


def _as_terms(terms: TermsLike) -> Terms:
    """Normalise a mapping or a sequence of (degree, fraction) pairs into sorted tuples."""
    items = terms.items() if isinstance(terms, Mapping) else terms
    merged: Dict[int, float] = {}
    for entry in items:
        degree, fraction = entry
        if float(degree) != int(degree):
            raise ValueError(f"Degree must be an integer, got {degree!r}")
        merged[int(degree)] = merged.get(int(degree), 0.0) + float(fraction)
    return tuple(sorted(merged.items()))


@dataclass(frozen=True)
class DegreeDistribution:
    """
    Edge-perspective pair (lambda, rho).

    ``lam`` holds (i, lambda_i) where lambda_i is the fraction of edges attached to variable
    nodes of degree i, i.e. the coefficient of x^(i-1) in lambda(x). ``rho`` is the same for
    check nodes.
    """

    lam: Terms
    rho: Terms

    def __post_init__(self) -> None:
        object.__setattr__(self, "lam", _as_terms(self.lam))
        object.__setattr__(self, "rho", _as_terms(self.rho))

    @property
    def dv_max(self) -> int:
        return max((i for i, w in self.lam if w > 0), default=0)

    @property
    def dc_max(self) -> int:
        return max((i for i, w in self.rho if w > 0), default=0)

    @property
    def variable_degrees(self) -> List[int]:
        return [i for i, w in self.lam if w > 0]

    @property
    def check_degrees(self) -> List[int]:
        return [i for i, w in self.rho if w > 0]

    @property
    def is_regular(self) -> bool:
        return len(self.variable_degrees) == 1 and len(self.check_degrees) == 1

    def lambda_dict(self) -> Dict[int, float]:
        return dict(self.lam)

    def rho_dict(self) -> Dict[int, float]:
        return dict(self.rho)

    def integral(self, side: str) -> float:
        """Integral over [0, 1] of lambda(x) or rho(x), i.e. sum of fraction_i / i."""
        return sum(w / i for i, w in self._side(side))

    def node_fractions(self, side: str) -> Dict[int, float]:
        """Fraction of *nodes* (not edges) of each degree on the given side."""
        total = self.integral(side)
        if total <= 0:
            raise ValueError(f"Cannot convert empty {side} distribution to node perspective")
        return {i: (w / i) / total for i, w in self._side(side) if w > 0}

    def renormalized(self) -> "DegreeDistribution":
        """Drop negative round-off, zero entries, and rescale both sides to sum to one."""

        def clean(terms: Terms) -> Terms:
            kept = [(i, max(w, 0.0)) for i, w in terms]
            total = sum(w for _, w in kept)
            if total <= 0:
                raise ValueError("Cannot renormalize a distribution with no positive mass")
            return tuple((i, w / total) for i, w in kept if w > 0)

        return DegreeDistribution(clean(self.lam), clean(self.rho))

    def to_dict(self) -> Dict[str, List[List[float]]]:
        return {
            "lambda": [[i, w] for i, w in self.lam],
            "rho": [[i, w] for i, w in self.rho],
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "DegreeDistribution":
        missing = [key for key in ("lambda", "rho") if key not in data]
        if missing:
            raise ValueError(f"Degree distribution is missing {', '.join(missing)}")
        try:
            return cls(_as_terms(data["lambda"]), _as_terms(data["rho"]))
        except (TypeError, ValueError) as e:
            raise ValueError(f"Malformed degree distribution: {e}")

    def describe(self) -> str:
        """Polynomial notation, e.g. ``lambda(x)=0.453x+0.547x^3``."""

        def poly(terms: Terms) -> str:
            parts = []
            for i, w in terms:
                power = i - 1
                monomial = "" if power == 0 else ("x" if power == 1 else f"x^{power}")
                parts.append(f"{w:.4g}{monomial}")
            return "+".join(parts) if parts else "0"

        return f"lambda(x)={poly(self.lam)}, rho(x)={poly(self.rho)}"

    def _side(self, side: str) -> Terms:
        if side in ("lambda", "variable"):
            return self.lam
        if side in ("rho", "check"):
            return self.rho
        raise ValueError(f"Unknown side: {side!r} (expected 'lambda' or 'rho')")


def regular(dv: int, dc: int) -> DegreeDistribution:
    """The (dv, dc) regular ensemble: lambda(x) = x^(dv-1), rho(x) = x^(dc-1)."""
    return DegreeDistribution(((dv, 1.0),), ((dc, 1.0),))


def rate(dist: DegreeDistribution) -> float:
    """Design rate 1 - (sum rho_i / i) / (sum lambda_i / i)."""
    denominator = dist.integral("lambda")
    if denominator <= 0 or not math.isfinite(denominator):
        raise ValueError("Degenerate degree distribution: lambda integral is zero")
    return 1.0 - dist.integral("rho") / denominator


def two_term_check(dc: int, alpha: float) -> Terms:
    """
    Check-side terms of rho(x) = alpha x^(dc-1) + (1 - alpha) x^dc.

    The two exponents correspond to check nodes of degree dc and dc + 1.
    """
    if dc < 3:
        raise ValueError(f"dc must be at least 3, got {dc}")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    terms = [(dc, float(alpha)), (dc + 1, 1.0 - float(alpha))]
    return tuple((i, w) for i, w in terms if w > 0)


def validate(dist: DegreeDistribution) -> List[str]:
    """Return every violated invariant; an empty list means the distribution is valid."""
    violations: List[str] = []
    for name, terms in (("lambda", dist.lam), ("rho", dist.rho)):
        if not terms:
            violations.append(f"{name} is empty")
            continue
        if abs(sum(w for _, w in terms) - 1.0) > NORMALIZATION_TOLERANCE:
            violations.append(f"{name} not normalized (sums to {sum(w for _, w in terms):.12g})")
        for degree, fraction in terms:
            if degree < 2:
                violations.append(f"{name} degree below 2: {degree}")
            if fraction < 0:
                violations.append(f"{name} negative fraction at degree {degree}: {fraction}")
            if fraction > 1:
                violations.append(f"{name} fraction above 1 at degree {degree}: {fraction}")
    return violations


# Rate-1/2 code optimised for a noiseless decoder (max variable degree 4, check degrees 5/6).
BENCHMARK_CODE = DegreeDistribution(
    ((2, 0.384), (3, 0.042), (4, 0.574)),
    two_term_check(5, 0.241),
)

# Rate-1/2 codes designed for decoder noise variance 0.5 and 1.
CODE_A = DegreeDistribution(((2, 0.453), (4, 0.547)), two_term_check(5, 0.451))
CODE_B = DegreeDistribution(((2, 0.4808), (4, 0.5192)), two_term_check(5, 0.553))

NAMED_CODES: Dict[str, DegreeDistribution] = {
    "benchmark": BENCHMARK_CODE,
    "code-a": CODE_A,
    "code-b": CODE_B,
}
