"""Sub-feature schema shared by the analyzer and scoring."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional, Union


class SubFeature(str, Enum):
    IS_REMOTE = "is_remote"
    INFO_DEPENDENCY = "info_dependency"
    ATTACK_CONDITION = "attack_condition"
    PROBABILITY_DEP = "probability_dep"
    USER_INTERACTION = "user_interaction"
    PRIVILEGE_REQUIRED = "privilege_required"
    EVASION = "evasion"
    CODE_EXEC = "code_exec"
    PRIV_ESCALATION = "priv_escalation"
    INFO_LEAK = "info_leak"
    BYPASS = "bypass"
    DOS = "dos"
    RELEVANCE = "relevance"
    AVAILABILITY = "availability"
    FLEXIBILITY = "flexibility"
    FUNCTIONALITY = "functionality"


class Privilege(str, Enum):
    NONE = "none"
    USER = "user"
    ADMIN = "admin"


COMPLEXITY_SUBFEATURES = (
    SubFeature.INFO_DEPENDENCY,
    SubFeature.ATTACK_CONDITION,
    SubFeature.PROBABILITY_DEP,
    SubFeature.USER_INTERACTION,
    SubFeature.PRIVILEGE_REQUIRED,
    SubFeature.EVASION,
)
# Highest severity first.
IMPACT_SUBFEATURES = (
    SubFeature.CODE_EXEC,
    SubFeature.PRIV_ESCALATION,
    SubFeature.INFO_LEAK,
    SubFeature.BYPASS,
)
MATURITY_SUBFEATURES = (
    SubFeature.RELEVANCE,
    SubFeature.AVAILABILITY,
    SubFeature.FLEXIBILITY,
    SubFeature.FUNCTIONALITY,
)

Conclusion = Union[bool, Privilege]


def conservative_value(sf: SubFeature) -> Conclusion:
    """The value assumed when extraction fails; never inflates actionability."""
    return Privilege.ADMIN if sf is SubFeature.PRIVILEGE_REQUIRED else False


@dataclass(frozen=True)
class Evidence:
    file: str
    line: Optional[int]
    note: str

    def cite(self) -> str:
        where = self.file if self.line is None else f"{self.file}:{self.line}"
        return f"{where} - {self.note}"


@dataclass(frozen=True)
class SubFeatureFinding:
    subfeature: SubFeature
    conclusion: Conclusion
    confidence: int
    evidence: tuple[Evidence, ...] = ()

    def __post_init__(self):
        if isinstance(self.confidence, bool) or not isinstance(self.confidence, int) or not 1 <= self.confidence <= 5:
            raise ValueError(f"confidence must be an integer in 1..5, got {self.confidence!r}")
        expected = Privilege if self.subfeature is SubFeature.PRIVILEGE_REQUIRED else bool
        if not isinstance(self.conclusion, expected):
            raise TypeError(f"{self.subfeature.value}: conclusion must be {expected.__name__}")

    def to_dict(self) -> dict:
        conclusion = self.conclusion.value if isinstance(self.conclusion, Privilege) else self.conclusion
        return {
            "subfeature": self.subfeature.value,
            "evidence": [{"file": e.file, "line": e.line, "note": e.note} for e in self.evidence],
            "conclusion": conclusion,
            "confidence": self.confidence,
        }


def default_finding(sf: SubFeature) -> SubFeatureFinding:
    return SubFeatureFinding(sf, conservative_value(sf), 1, ())


@dataclass(frozen=True)
class FeatureVector:
    """Exactly one finding per sub-feature."""

    findings: dict = field(default_factory=dict)

    def __post_init__(self):
        missing = [sf.value for sf in SubFeature if sf not in self.findings]
        if missing:
            raise ValueError(f"incomplete feature vector, missing {missing}")
        for sf, finding in self.findings.items():
            if finding.subfeature is not sf:
                raise ValueError(f"finding for {finding.subfeature.value} filed under {sf.value}")

    def __getitem__(self, sf: SubFeature) -> SubFeatureFinding:
        return self.findings[SubFeature(sf)]

    def value(self, sf: SubFeature) -> Conclusion:
        return self[sf].conclusion

    def __getattr__(self, name):
        # fv.is_remote -> bool conclusion
        try:
            sf = SubFeature(name)
        except ValueError:
            raise AttributeError(name) from None
        return self.findings[sf].conclusion

    @classmethod
    def from_values(cls, confidence: int = 3, **values) -> "FeatureVector":
        """Build from bare conclusions; unspecified sub-features take conservative values."""
        findings = {}
        for sf in SubFeature:
            raw = values.pop(sf.value, conservative_value(sf))
            if sf is SubFeature.PRIVILEGE_REQUIRED:
                raw = Privilege(raw)
            findings[sf] = SubFeatureFinding(sf, raw, confidence)
        if values:
            raise TypeError(f"unknown sub-features {sorted(values)}")
        return cls(findings)

    def to_dict(self) -> dict:
        return {sf.value: self.findings[sf].to_dict() for sf in SubFeature}

    @classmethod
    def from_dict(cls, data: dict) -> "FeatureVector":
        from .parsing import finding_from_obj

        return cls({SubFeature(k): finding_from_obj(v, SubFeature(k)) for k, v in data.items()})


@dataclass(frozen=True)
class PopularityInputs:
    n_exploits: int = 0
    stars: int = 0
    forks: int = 0

    def __post_init__(self):
        for name in ("n_exploits", "stars", "forks"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
