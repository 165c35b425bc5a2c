"""Mamdani classifier from predicted utilization to a four-valued load level.

Each of the four inputs is fuzzified into Low / Medium / High by triangular
memberships. The 81-rule base maps every combination of terms to a level,
consequents are clipped by the rule's firing strength (min of antecedents),
aggregated by max and defuzzified by centroid. The crisp value is finally
mapped to the level whose output peak is nearest.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .domain import LoadLevel

OUTPUT_DOMAIN = (-0.6, 0.4)
GRID_POINTS = 1001


class LinguisticTerm(enum.IntEnum):
    LOW = 0
    MEDIUM = 1
    HIGH = 2

    @property
    def token(self) -> str:
        return self.name.lower()


L, M, H = LinguisticTerm.LOW, LinguisticTerm.MEDIUM, LinguisticTerm.HIGH


@dataclass(frozen=True)
class MembershipFunction:
    a: float
    b: float
    c: float

    def __post_init__(self) -> None:
        if not self.a <= self.b <= self.c:
            raise ValueError(f"breakpoints must satisfy a <= b <= c, got {self.a}, {self.b}, {self.c}")

    def degree(self, v: float) -> float:
        if v == self.b:
            return 1.0
        if v < self.a or v > self.c:
            return 0.0
        if v < self.b:
            return (v - self.a) / (self.b - self.a)
        return (self.c - v) / (self.c - self.b)

    def degrees(self, grid: np.ndarray) -> np.ndarray:
        out = np.zeros_like(grid, dtype=float)
        if self.b > self.a:
            rising = (grid >= self.a) & (grid < self.b)
            out[rising] = (grid[rising] - self.a) / (self.b - self.a)
        if self.c > self.b:
            falling = (grid > self.b) & (grid <= self.c)
            out[falling] = (self.c - grid[falling]) / (self.c - self.b)
        out[grid == self.b] = 1.0
        return out


DEFAULT_INPUT_TERMS = {
    L: MembershipFunction(0.0, 0.0, 0.5),
    M: MembershipFunction(0.0, 0.5, 1.0),
    H: MembershipFunction(0.5, 1.0, 1.0),
}


def _default_output_terms() -> dict[LoadLevel, MembershipFunction]:
    lo, hi = OUTPUT_DOMAIN
    peaks = np.linspace(lo, hi, len(LoadLevel))
    terms = {}
    for k, level in enumerate(LoadLevel):
        left = peaks[max(k - 1, 0)]
        right = peaks[min(k + 1, len(peaks) - 1)]
        terms[level] = MembershipFunction(float(left), float(peaks[k]), float(right))
    return terms


@dataclass(frozen=True)
class FuzzyRule:
    antecedent: tuple[LinguisticTerm, LinguisticTerm, LinguisticTerm, LinguisticTerm]
    consequent: LoadLevel


def count_policy(antecedent: Sequence[LinguisticTerm]) -> LoadLevel:
    """Consequent chosen from the number of High and Medium terms."""
    highs = sum(1 for t in antecedent if t == H)
    mediums = sum(1 for t in antecedent if t == M)
    if highs >= 3:
        return LoadLevel.OVER
    if highs == 2:
        return LoadLevel.HIGHLY
    if highs == 1 or mediums >= 3:
        return LoadLevel.NORMAL
    return LoadLevel.UNDER


@dataclass(frozen=True)
class RuleBase:
    rules: tuple[FuzzyRule, ...]

    def __post_init__(self) -> None:
        seen = {r.antecedent for r in self.rules}
        if len(seen) != len(self.rules):
            raise ValueError("duplicate antecedent in rule base")
        if len(self.rules) != 81 or len(seen) != 81:
            raise ValueError(f"rule base must cover all 81 antecedents, got {len(seen)}")

    def consequent(self, antecedent: Sequence[LinguisticTerm]) -> LoadLevel:
        return self.lookup[tuple(antecedent)]

    @property
    def lookup(self) -> Mapping[tuple, LoadLevel]:
        return {r.antecedent: r.consequent for r in self.rules}


def build_rule_base() -> RuleBase:
    """All 81 antecedents, ordered lexicographically (x fastest-varying last)."""
    rules = tuple(
        FuzzyRule(ante, count_policy(ante))
        for ante in itertools.product(LinguisticTerm, repeat=4)
    )
    return RuleBase(rules)


def format_rule_table(rule_base: RuleBase) -> str:
    """Human-readable table: one row per rule."""
    lines = ["#\tcpu\tmem\tdisk\tbw\tlevel"]
    for n, rule in enumerate(rule_base.rules, start=1):
        terms = "\t".join(t.token for t in rule.antecedent)
        lines.append(f"{n}\t{terms}\t{rule.consequent.token}")
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class FuzzyResult:
    crisp: float
    level: LoadLevel
    strengths: Mapping[LoadLevel, float]


@dataclass
class FuzzyClassifier:
    input_terms: Sequence[Mapping[LinguisticTerm, MembershipFunction]] = field(
        default_factory=lambda: [DEFAULT_INPUT_TERMS] * 4
    )
    rule_base: RuleBase = field(default_factory=build_rule_base)
    output_terms: Mapping[LoadLevel, MembershipFunction] = field(default_factory=_default_output_terms)
    grid_points: int = GRID_POINTS

    def __post_init__(self) -> None:
        if len(self.input_terms) != 4:
            raise ValueError("need membership functions for exactly four inputs")
        self._grid = np.linspace(*OUTPUT_DOMAIN, self.grid_points)
        self._out = {level: mf.degrees(self._grid) for level, mf in self.output_terms.items()}
        self._peaks = {level: mf.b for level, mf in self.output_terms.items()}
        peaks = [self._peaks[level] for level in LoadLevel]
        if any(b <= a for a, b in zip(peaks, peaks[1:])):
            raise ValueError("output peaks must increase with load level")
        self._rules = [
            (tuple(int(t) for t in r.antecedent), r.consequent) for r in self.rule_base.rules
        ]

    def fuzzify(self, v: float, index: int = 0) -> dict[LinguisticTerm, float]:
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"input {v} outside [0, 1]")
        return {term: mf.degree(v) for term, mf in self.input_terms[index].items()}

    def infer(self, values: Iterable[float]) -> FuzzyResult:
        vals = tuple(values)
        if len(vals) != 4:
            raise ValueError(f"expected four inputs, got {len(vals)}")
        mu = [[self.fuzzify(v, k)[t] for t in LinguisticTerm] for k, v in enumerate(vals)]
        strength = {level: 0.0 for level in LoadLevel}
        for ante, level in self._rules:
            fire = min(mu[0][ante[0]], mu[1][ante[1]], mu[2][ante[2]], mu[3][ante[3]])
            if fire > strength[level]:
                strength[level] = fire
        aggregate = np.zeros_like(self._grid)
        for level, s in strength.items():
            if s > 0:
                np.maximum(aggregate, np.minimum(self._out[level], s), out=aggregate)
        area = aggregate.sum()
        if area == 0:
            raise ValueError(f"no rule fired for inputs {vals}")
        crisp = float((self._grid * aggregate).sum() / area)
        return FuzzyResult(crisp, self.nearest_level(crisp), strength)

    def nearest_level(self, crisp: float) -> LoadLevel:
        # ties resolve to the lower level because LoadLevel iterates upward
        return min(LoadLevel, key=lambda level: abs(crisp - self._peaks[level]))

    def classify(self, values: Iterable[float]) -> LoadLevel:
        return self.infer(values).level

    def classify_servers(self, forecasts: Mapping[int, Iterable[float] | None], powered_on: Iterable[int] | None = None) -> dict[int, LoadLevel]:
        """Level per powered-on server; ``powered_on`` defaults to every key."""
        ids = list(forecasts) if powered_on is None else list(powered_on)
        levels = {}
        for sid in ids:
            forecast = forecasts.get(sid)
            if forecast is None:
                raise KeyError(f"no forecast for server {sid}")
            levels[sid] = self.classify(forecast)
        return levels


def classifier_from_breakpoints(low, medium, high) -> FuzzyClassifier:
    terms = {L: MembershipFunction(*low), M: MembershipFunction(*medium), H: MembershipFunction(*high)}
    return FuzzyClassifier(input_terms=[terms] * 4)
