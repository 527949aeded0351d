from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .experiment import CaseStudyResult, ScatterCell, SummaryTable
from .strategies import StrategyKind

# Published results the full protocol is compared against.
#  - initial ASPL per model: (mean, std) over 30 instances, N=1000
#  - variation after 50 additions per (model, strategy): (mean %, std)

REFERENCE_INITIAL: Dict[str, Tuple[float, float]] = {
    "BA": (3.49, 0.03),
    "ER": (4.04, 0.04),
    "WS": (4.41, 0.02),
    "WAX": (4.03, 0.04),
}

# Allowed distance from the reference mean; the BA seed core and the Waxman space are not published
INITIAL_TOLERANCE: Dict[str, float] = {"BA": 0.15, "ER": 0.10, "WS": 0.10, "WAX": 0.25}

_S = StrategyKind
REFERENCE_VARIATION: Dict[Tuple[str, str], Tuple[float, float]] = {
    ("BA", _S.REGULAR_TOPOLOGY.value): (-0.16, 0.02),
    ("ER", _S.REGULAR_TOPOLOGY.value): (-0.43, 0.02),
    ("WS", _S.REGULAR_TOPOLOGY.value): (-0.60, 0.02),
    ("WAX", _S.REGULAR_TOPOLOGY.value): (-0.42, 0.02),
    ("BA", _S.DEGREE.value): (-0.78, 0.05),
    ("ER", _S.DEGREE.value): (-1.4, 0.1),
    ("WS", _S.DEGREE.value): (-1.38, 0.05),
    ("WAX", _S.DEGREE.value): (-1.48, 0.08),
    ("BA", _S.PREFERENTIAL_ATTACHMENT.value): (-0.40, 0.05),
    ("ER", _S.PREFERENTIAL_ATTACHMENT.value): (-0.83, 0.04),
    ("WS", _S.PREFERENTIAL_ATTACHMENT.value): (-1.31, 0.05),
    ("WAX", _S.PREFERENTIAL_ATTACHMENT.value): (-0.81, 0.05),
    ("BA", _S.BETWEENNESS.value): (-0.86, 0.06),
    ("ER", _S.BETWEENNESS.value): (-1.37, 0.08),
    ("WS", _S.BETWEENNESS.value): (-1.51, 0.06),
    ("WAX", _S.BETWEENNESS.value): (-1.51, 0.08),
    ("BA", _S.ACCESSIBILITY1.value): (-1.20, 0.07),
    ("ER", _S.ACCESSIBILITY1.value): (-1.5, 0.1),
    ("WS", _S.ACCESSIBILITY1.value): (-1.52, 0.05),
    ("WAX", _S.ACCESSIBILITY1.value): (-1.7, 0.1),
    ("BA", _S.ACCESSIBILITY2.value): (-0.30, 0.02),
    ("ER", _S.ACCESSIBILITY2.value): (-0.64, 0.04),
    ("WS", _S.ACCESSIBILITY2.value): (-1.06, 0.06),
    ("WAX", _S.ACCESSIBILITY2.value): (-0.64, 0.04),
    ("BA", _S.ACCESSIBILITY3.value): (-0.34, 0.08),
    ("ER", _S.ACCESSIBILITY3.value): (-0.97, 0.08),
    ("WS", _S.ACCESSIBILITY3.value): (-1.7, 0.1),
    ("WAX", _S.ACCESSIBILITY3.value): (-0.89, 0.09),
}

# Percentage points. Variation magnitudes depend on tie-breaks and measure refresh
# details that are not published, so their band is a soft check.
VARIATION_TOLERANCE = 0.5
SIMILAR_STRATEGIES_GAP = 0.3

# Initial ASPL vs |variation| should correlate positively in most of these cells
CORRELATION_STRATEGIES = (StrategyKind.DEGREE.value, StrategyKind.BETWEENNESS.value, StrategyKind.ACCESSIBILITY1.value)
CORRELATION_MIN_POSITIVE = 10

# Airport study: accessibility1 reduction at each checkpoint, with tolerance (pp)
REFERENCE_AIRPORT: Dict[int, Tuple[float, float]] = {50: (-2.43, 1.0), 100: (-3.86, 1.2)}


@dataclass(frozen=True, slots=True)
class ReferenceCheck:
    name: str
    observed: float
    expected: Optional[float]
    tolerance: Optional[float]
    passed: bool
    # Soft checks are reported but do not fail a reproduction
    soft: bool = False

    @property
    def delta(self) -> Optional[float]:
        if self.expected is None:
            return None
        return self.observed - self.expected


def _band(name: str, observed: float, expected: float, tol: float, *, soft: bool = False) -> ReferenceCheck:
    return ReferenceCheck(name, observed, expected, tol, abs(observed - expected) <= tol, soft)


def check_initial(table: SummaryTable) -> List[ReferenceCheck]:
    seen: Dict[str, float] = {}
    for r in table.rows:
        seen.setdefault(r.model, r.initial_mean)
    return [
        _band(f"initial {model}", seen[model], ref, INITIAL_TOLERANCE[model])
        for model, (ref, _) in REFERENCE_INITIAL.items()
        if model in seen
    ]


def check_variation(table: SummaryTable) -> List[ReferenceCheck]:
    out: List[ReferenceCheck] = []
    for r in table.rows:
        ref = REFERENCE_VARIATION.get((r.model, r.strategy))
        if ref is None:
            continue
        out.append(_band(f"variation {r.model}/{r.strategy}", r.variation_pct_mean, ref[0], VARIATION_TOLERANCE, soft=True))
    return out


def _by_model(table: SummaryTable) -> Mapping[str, Dict[str, float]]:
    out: Dict[str, Dict[str, float]] = {}
    for r in table.rows:
        out.setdefault(r.model, {})[r.strategy] = r.variation_pct_mean
    return out


def check_ordering(table: SummaryTable) -> List[ReferenceCheck]:
    """
    Hard ordering criteria on the mean variations of a full run:

    - regular topology gives the smallest reduction on every model
    - accessibility1 gives the largest on BA, ER and WAX; accessibility3 on WS
    - degree and betweenness stay within SIMILAR_STRATEGIES_GAP of each other
    """
    out: List[ReferenceCheck] = []
    for model, var in _by_model(table).items():
        if len(var) < len(StrategyKind):
            continue
        weakest = max(var, key=lambda s: var[s])
        strongest = min(var, key=lambda s: var[s])
        regular = var[StrategyKind.REGULAR_TOPOLOGY.value]
        out.append(
            ReferenceCheck(
                f"weakest {model} is regular-topology", regular, None, None,
                weakest == StrategyKind.REGULAR_TOPOLOGY.value,
            )
        )

        expected = StrategyKind.ACCESSIBILITY3 if model == "WS" else StrategyKind.ACCESSIBILITY1
        out.append(
            ReferenceCheck(
                f"strongest {model} is {expected.value}", var[strongest], None, None,
                strongest == expected.value,
            )
        )

        gap = abs(var[StrategyKind.DEGREE.value] - var[StrategyKind.BETWEENNESS.value])
        out.append(
            ReferenceCheck(
                f"degree ~ betweenness on {model}", gap, 0.0, SIMILAR_STRATEGIES_GAP,
                gap < SIMILAR_STRATEGIES_GAP,
            )
        )
    return out


def check_airport(result: CaseStudyResult) -> List[ReferenceCheck]:
    acc1 = StrategyKind.ACCESSIBILITY1.value
    out: List[ReferenceCheck] = []
    for cp in result.checkpoints:
        if cp in REFERENCE_AIRPORT:
            ref, tol = REFERENCE_AIRPORT[cp]
            out.append(_band(f"airport {acc1} @ {cp}", result.variation_at(acc1, cp), ref, tol))
        best = result.best_at(cp)
        out.append(
            ReferenceCheck(
                f"airport best @ {cp} is {acc1}", result.variation_at(best, cp), None, None, best == acc1
            )
        )
    return out


def check_correlation(cells: Sequence[ScatterCell]) -> ReferenceCheck:
    picked = [c for c in cells if c.strategy in CORRELATION_STRATEGIES]
    positive = sum(1 for c in picked if not math.isnan(c.pearson_r) and c.pearson_r > 0)
    need = min(CORRELATION_MIN_POSITIVE, len(picked))
    return ReferenceCheck(
        f"positive correlation in >= {need} of {len(picked)} cells", float(positive), float(need), None,
        len(picked) > 0 and positive >= need,
    )


def hard_failures(checks: Sequence[ReferenceCheck]) -> List[ReferenceCheck]:
    return [c for c in checks if not c.passed and not c.soft]
