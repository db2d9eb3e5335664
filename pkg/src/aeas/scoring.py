"""Feature aggregation, exploit actionability and vulnerability severity."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

from .analyzer.features import (
    COMPLEXITY_SUBFEATURES,
    IMPACT_SUBFEATURES,
    MATURITY_SUBFEATURES,
    FeatureVector,
    PopularityInputs,
    Privilege,
    SubFeature,
)

NO_EVIDENCE = "no supporting evidence; conservative default"


class AttackVector(str, Enum):
    REMOTE = "Remote"
    NOT_REMOTE = "NotRemote"


class Level(str, Enum):
    LOW = "Low"
    HIGH = "High"


class Impact(str, Enum):
    CODE_EXEC = "CodeExec"
    PRIV_ESC = "PrivEsc"
    INFO_LEAK = "InfoLeak"
    BYPASS = "Bypass"
    NONE = "None"


class ExploitMaturity(str, Enum):
    NONE = "None"
    POC = "PoC"
    EXPLOIT = "Exploit"


# Numeric images of the categorical levels.
AV_VALUES = {AttackVector.REMOTE: 1.0, AttackVector.NOT_REMOTE: 0.2}
AC_VALUES = {Level.LOW: 1.0, Level.HIGH: 0.3}
IMPACT_VALUES = {Impact.CODE_EXEC: 1.0, Impact.PRIV_ESC: 0.8, Impact.INFO_LEAK: 0.6, Impact.BYPASS: 0.4,
                 Impact.NONE: 0.0}
DOS_FLOOR = 0.3
EM_VALUES = {ExploitMaturity.EXPLOIT: 1.0, ExploitMaturity.POC: 0.4, ExploitMaturity.NONE: 0.0}
POP_VALUES = {Level.HIGH: 1.0, Level.LOW: 0.5}
PRIVILEGE_FAVORABILITY = {Privilege.NONE: 1.0, Privilege.USER: 0.5, Privilege.ADMIN: 0.0}

_IMPACT_OF = dict(zip(IMPACT_SUBFEATURES, (Impact.CODE_EXEC, Impact.PRIV_ESC, Impact.INFO_LEAK, Impact.BYPASS)))


def _check_simplex(name: str, weights: Sequence[float], size: int) -> tuple[float, ...]:
    w = tuple(float(x) for x in weights)
    if len(w) != size:
        raise ValueError(f"{name} needs {size} weights, got {len(w)}")
    if any(x < 0 or math.isnan(x) for x in w):
        raise ValueError(f"{name} weights must be non-negative")
    if abs(math.fsum(w) - 1.0) > 1e-9:
        raise ValueError(f"{name} weights must sum to 1, got {math.fsum(w)}")
    return w


@dataclass(frozen=True)
class Weights:
    # info_dependency, attack_condition, probability_dep, user_interaction, privilege_required, evasion
    complexity_w: tuple[float, ...] = (1 / 6,) * 6
    # n_exploits, stars, forks
    popularity_w: tuple[float, ...] = (0.5, 0.003, 0.006)
    # attack vector, attack complexity, impact, maturity, popularity
    feature_alpha: tuple[float, ...] = (0.15, 0.20, 0.25, 0.30, 0.10)
    complexity_threshold: float = 0.5
    popularity_threshold: float = 5.0

    def __post_init__(self):
        object.__setattr__(self, "complexity_w", _check_simplex("complexity_w", self.complexity_w, 6))
        object.__setattr__(self, "feature_alpha", _check_simplex("feature_alpha", self.feature_alpha, 5))
        pw = tuple(float(x) for x in self.popularity_w)
        if len(pw) != 3 or any(x < 0 for x in pw):
            raise ValueError("popularity_w must be three non-negative reals")
        object.__setattr__(self, "popularity_w", pw)

    @classmethod
    def from_dict(cls, data: dict) -> "Weights":
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})

    def to_dict(self) -> dict:
        return {
            "complexity_w": list(self.complexity_w),
            "popularity_w": list(self.popularity_w),
            "feature_alpha": list(self.feature_alpha),
            "complexity_threshold": self.complexity_threshold,
            "popularity_threshold": self.popularity_threshold,
        }


DEFAULT_WEIGHTS = Weights()


@dataclass(frozen=True)
class AggregatedFeatures:
    attack_vector: AttackVector
    complexity_level: Level
    complexity_score: float
    primary_impact: Impact
    dos: bool
    maturity: ExploitMaturity
    popularity_level: Level
    popularity_score: float

    def to_dict(self) -> dict:
        return {
            "attack_vector": self.attack_vector.value,
            "complexity_level": self.complexity_level.value,
            "complexity_score": self.complexity_score,
            "primary_impact": self.primary_impact.value,
            "dos": self.dos,
            "maturity": self.maturity.value,
            "popularity_level": self.popularity_level.value,
            "popularity_score": self.popularity_score,
        }


def favorability(fv: FeatureVector) -> tuple[float, ...]:
    """Per complexity sub-feature: 1 when the prerequisite is absent, 0 when present."""
    out = []
    for sf in COMPLEXITY_SUBFEATURES:
        value = fv.value(sf)
        out.append(PRIVILEGE_FAVORABILITY[value] if sf is SubFeature.PRIVILEGE_REQUIRED else (0.0 if value else 1.0))
    return tuple(out)


def weighted_sum(weights: Sequence[float], values: Sequence[float]) -> float:
    if len(weights) != len(values):
        raise ValueError("weights and values differ in length")
    total = 0.0
    for w, v in zip(weights, values):
        total += w * v
    return total


def complexity_score(fv: FeatureVector, w: Weights = DEFAULT_WEIGHTS) -> float:
    return weighted_sum(w.complexity_w, favorability(fv))


def complexity_level(score: float, threshold: float) -> Level:
    return Level.LOW if score > threshold else Level.HIGH


def popularity_score(pop: PopularityInputs, w: Weights = DEFAULT_WEIGHTS) -> float:
    return weighted_sum(w.popularity_w, (pop.n_exploits, pop.stars, pop.forks))


def popularity_level(score: float, threshold: float) -> Level:
    return Level.HIGH if score > threshold else Level.LOW


def primary_impact(code_exec: bool, priv_escalation: bool, info_leak: bool, bypass: bool) -> Impact:
    for flag, impact in zip((code_exec, priv_escalation, info_leak, bypass), _IMPACT_OF.values()):
        if flag:
            return impact
    return Impact.NONE


def maturity(relevance: bool, availability: bool, flexibility: bool, functionality: bool) -> ExploitMaturity:
    if not relevance:
        return ExploitMaturity.NONE
    if (availability or flexibility) and functionality:
        return ExploitMaturity.EXPLOIT
    return ExploitMaturity.POC


def aggregate(fv: FeatureVector, pop: PopularityInputs, w: Weights = DEFAULT_WEIGHTS) -> AggregatedFeatures:
    c_score = complexity_score(fv, w)
    p_score = popularity_score(pop, w)
    return AggregatedFeatures(
        attack_vector=AttackVector.REMOTE if fv.value(SubFeature.IS_REMOTE) else AttackVector.NOT_REMOTE,
        complexity_level=complexity_level(c_score, w.complexity_threshold),
        complexity_score=c_score,
        primary_impact=primary_impact(*(fv.value(sf) for sf in IMPACT_SUBFEATURES)),
        dos=bool(fv.value(SubFeature.DOS)),
        maturity=maturity(*(fv.value(sf) for sf in MATURITY_SUBFEATURES)),
        popularity_level=popularity_level(p_score, w.popularity_threshold),
        popularity_score=p_score,
    )


def impact_value(impact: Impact, dos: bool) -> float:
    value = IMPACT_VALUES[impact]
    return max(value, DOS_FLOOR) if dos else value


def feature_encodings(agg: AggregatedFeatures) -> tuple[float, float, float, float, float]:
    """(AV, AC, I, EM, P), each in [0, 1]."""
    return (
        AV_VALUES[agg.attack_vector],
        AC_VALUES[agg.complexity_level],
        impact_value(agg.primary_impact, agg.dos),
        EM_VALUES[agg.maturity],
        POP_VALUES[agg.popularity_level],
    )


def actionability_from_encodings(encodings: Sequence[float], alpha: Sequence[float]) -> float:
    return min(1.0, max(0.0, weighted_sum(alpha, encodings)))


def actionability(agg: AggregatedFeatures, w: Weights = DEFAULT_WEIGHTS) -> float:
    return actionability_from_encodings(feature_encodings(agg), w.feature_alpha)


def vulnerability_severity(scores: Iterable[float]) -> float:
    """Maximum exploit score; 0.0 when a vulnerability has no exploits."""
    return max(scores, default=0.0)


# --- justifications and reports ----------------------------------------------

FEATURE_SOURCES = {
    "attack_vector": (SubFeature.IS_REMOTE,),
    "attack_complexity": COMPLEXITY_SUBFEATURES,
    "impact": IMPACT_SUBFEATURES + (SubFeature.DOS,),
    "exploit_maturity": MATURITY_SUBFEATURES,
}


def justify(fv: FeatureVector, pop: PopularityInputs) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    for feature, sources in FEATURE_SOURCES.items():
        lines = []
        for sf in sources:
            finding = fv[sf]
            value = finding.conclusion.value if isinstance(finding.conclusion, Privilege) else finding.conclusion
            for ev in finding.evidence:
                lines.append(f"{sf.value}={value}: {ev.cite()}")
        out[feature] = lines or [NO_EVIDENCE]
    out["popularity"] = [f"{pop.n_exploits} exploit repositories, {pop.stars} stars, {pop.forks} forks"]
    return out


@dataclass(frozen=True)
class ExploitScore:
    artifact_id: str
    actionability: float
    features: AggregatedFeatures
    justifications: dict

    def to_dict(self) -> dict:
        return {
            "artifact_id": self.artifact_id,
            "actionability": self.actionability,
            "features": self.features.to_dict(),
            "justifications": self.justifications,
        }


def score_exploit(fv: FeatureVector, pop: PopularityInputs, w: Weights = DEFAULT_WEIGHTS,
                  artifact_id: str = "") -> ExploitScore:
    agg = aggregate(fv, pop, w)
    return ExploitScore(artifact_id, actionability(agg, w), agg, justify(fv, pop))


@dataclass(frozen=True)
class RankedReport:
    cve_id: str
    severity: float
    exploits: tuple[ExploitScore, ...] = field(default_factory=tuple)

    @classmethod
    def build(cls, cve_id: str, scores: Iterable[ExploitScore]) -> "RankedReport":
        ranked = sorted(scores, key=lambda s: (-s.actionability, s.artifact_id))
        return cls(cve_id, vulnerability_severity(s.actionability for s in ranked), tuple(ranked))

    def ranking(self) -> list[str]:
        return [s.artifact_id for s in self.exploits]

    def to_dict(self) -> dict:
        return {
            "cve_id": self.cve_id,
            "severity": self.severity,
            "exploits": [s.to_dict() for s in self.exploits],
        }


_FEATURE_LABELS = (
    ("attack_vector", "Attack Vector"),
    ("attack_complexity", "Attack Complexity"),
    ("impact", "Impact"),
    ("exploit_maturity", "Exploit Maturity"),
    ("popularity", "Popularity"),
)


def _feature_value(feature: str, agg: AggregatedFeatures) -> str:
    if feature == "attack_vector":
        return agg.attack_vector.value
    if feature == "attack_complexity":
        return f"{agg.complexity_level.value} (score {agg.complexity_score:.4f})"
    if feature == "impact":
        return agg.primary_impact.value + (" + DoS" if agg.dos else "")
    if feature == "exploit_maturity":
        return agg.maturity.value
    return f"{agg.popularity_level.value} (score {agg.popularity_score:.4f})"


def render_markdown(reports: Sequence[RankedReport]) -> str:
    lines = ["# Exploit actionability report", ""]
    for rep in reports:
        lines += [f"## {rep.cve_id}", "", "### Severity Score", "",
                  f"The severity score of the vulnerability is: {rep.severity:.4f}", ""]
        lines += ["### Exploitability Scores", ""]
        if not rep.exploits:
            lines += ["No usable exploit artifacts.", ""]
            continue
        lines += [f"- {s.artifact_id}: {s.actionability:.4f}" for s in rep.exploits] + [""]
        lines += ["### Exploit Features", ""]
        for s in rep.exploits:
            lines += [f"#### {s.artifact_id}", ""]
            for key, label in _FEATURE_LABELS:
                lines.append(f"- {label}: {_feature_value(key, s.features)}")
                lines += [f"  - {j}" for j in s.justifications.get(key, [NO_EVIDENCE])]
            lines.append("")
    return "\n".join(lines).rstrip() + "\n"


def reports_to_json(reports: Sequence[RankedReport]) -> str:
    return json.dumps({"vulnerabilities": [r.to_dict() for r in reports]}, indent=2, ensure_ascii=False) + "\n"


def reports_from_json(text: str) -> list[RankedReport]:
    data = json.loads(text)
    out = []
    for rep in data["vulnerabilities"]:
        scores = []
        for s in rep["exploits"]:
            f = s["features"]
            agg = AggregatedFeatures(
                attack_vector=AttackVector(f["attack_vector"]),
                complexity_level=Level(f["complexity_level"]),
                complexity_score=f["complexity_score"],
                primary_impact=Impact(f["primary_impact"]),
                dos=f["dos"],
                maturity=ExploitMaturity(f["maturity"]),
                popularity_level=Level(f["popularity_level"]),
                popularity_score=f["popularity_score"],
            )
            scores.append(ExploitScore(s["artifact_id"], s["actionability"], agg, s["justifications"]))
        out.append(RankedReport(rep["cve_id"], rep["severity"], tuple(scores)))
    return out

