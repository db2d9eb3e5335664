"""Strict parsing of structured sub-feature responses.

Expected shape::

    {"subfeature": "info_dependency",            # optional, must match
     "evidence": [{"file": "x.py", "line": 47, "note": "Hardcoded credentials"}],
     "conclusion": true,
     "confidence": 5}

Every error raised here is a :class:`FindingError`; callers treat any of
them as a retry-eligible backend failure.
"""

from __future__ import annotations

import json
import re

from .features import Evidence, Privilege, SubFeature, SubFeatureFinding

REQUIRED_FIELDS = ("evidence", "conclusion", "confidence")
ALLOWED_FIELDS = frozenset(REQUIRED_FIELDS) | {"subfeature"}
EVIDENCE_FIELDS = frozenset({"file", "line", "note"})

_FENCE = re.compile(r"^```(?:json)?\s*\n(.*)\n```$", re.S)
_TRUE = {"true", "yes"}
_FALSE = {"false", "no"}


class FindingError(ValueError):
    pass


class ParseError(FindingError):
    """Response is not valid JSON."""


class SchemaError(FindingError):
    """JSON does not match the response schema."""


class RangeError(FindingError):
    """A field is well-typed but out of range."""


def _coerce_conclusion(value, sf: SubFeature):
    if sf is SubFeature.PRIVILEGE_REQUIRED:
        if isinstance(value, str) and value.strip().lower() in {p.value for p in Privilege}:
            return Privilege(value.strip().lower())
        raise SchemaError(f"{sf.value}: conclusion must be one of none/user/admin, got {value!r}")
    if isinstance(value, bool):
        return value
    if isinstance(value, str):
        low = value.strip().lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
    raise SchemaError(f"{sf.value}: conclusion must be a boolean, got {value!r}")


def _coerce_evidence(items) -> tuple[Evidence, ...]:
    if not isinstance(items, list):
        raise SchemaError("evidence must be a list")
    out = []
    for item in items:
        if not isinstance(item, dict):
            raise SchemaError("evidence entries must be objects")
        unknown = set(item) - EVIDENCE_FIELDS
        if unknown:
            raise SchemaError(f"unknown evidence fields {sorted(unknown)}")
        if "file" not in item or not isinstance(item["file"], str) or not item["file"]:
            raise SchemaError("evidence entry needs a non-empty string 'file'")
        line = item.get("line")
        if line is not None:
            if isinstance(line, bool) or not isinstance(line, int):
                raise SchemaError("evidence 'line' must be an integer or null")
            if line < 0:
                raise RangeError("evidence 'line' must be >= 0")
        note = item.get("note", "")
        if not isinstance(note, str):
            raise SchemaError("evidence 'note' must be a string")
        out.append(Evidence(item["file"], line, note))
    return tuple(out)


def finding_from_obj(obj, sf: SubFeature) -> SubFeatureFinding:
    sf = SubFeature(sf)
    if not isinstance(obj, dict):
        raise SchemaError("response must be a JSON object")
    unknown = set(obj) - ALLOWED_FIELDS
    if unknown:
        raise SchemaError(f"unknown fields {sorted(unknown)}")
    missing = [f for f in REQUIRED_FIELDS if f not in obj]
    if missing:
        raise SchemaError(f"missing fields {missing}")
    if "subfeature" in obj and obj["subfeature"] != sf.value:
        raise SchemaError(f"response is for {obj['subfeature']!r}, expected {sf.value!r}")
    confidence = obj["confidence"]
    if isinstance(confidence, float) and confidence.is_integer():
        confidence = int(confidence)
    if isinstance(confidence, bool) or not isinstance(confidence, int):
        raise SchemaError(f"confidence must be an integer, got {confidence!r}")
    if not 1 <= confidence <= 5:
        raise RangeError(f"confidence {confidence} outside 1..5")
    return SubFeatureFinding(
        subfeature=sf,
        conclusion=_coerce_conclusion(obj["conclusion"], sf),
        confidence=confidence,
        evidence=_coerce_evidence(obj["evidence"]),
    )


def parse_finding(raw: str, subfeature) -> SubFeatureFinding:
    if not isinstance(raw, str):
        raise ParseError(f"response must be text, got {type(raw).__name__}")
    text = raw.strip()
    fenced = _FENCE.match(text)
    if fenced:
        text = fenced.group(1)
    try:
        obj = json.loads(text)
    except (json.JSONDecodeError, RecursionError) as exc:
        raise ParseError(f"invalid JSON: {exc}") from None
    return finding_from_obj(obj, subfeature)


def serialize_finding(finding: SubFeatureFinding) -> str:
    return json.dumps(finding.to_dict(), ensure_ascii=False)
