"""Analyzer backends.

A backend turns one sub-feature request into raw response text, which the
extractor then parses strictly.  :class:`RuleBackend` answers from
keyword/pattern tables so the whole pipeline runs offline;
:class:`LiveBackend` sends the rendered prompt to a chat-completion API.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from typing import Optional, Protocol

from ..connectors import DEFAULT_MODEL, CompletionRequest, LLMClient
from ..corpus import SOURCE, ExploitArtifact
from .features import Privilege, SubFeature

MAX_EVIDENCE = 5


@dataclass(frozen=True)
class AnalysisRequest:
    subfeature: SubFeature
    artifact: ExploitArtifact
    prompt: str
    cve_id: str = ""
    application: str = ""


class Backend(Protocol):
    name: str

    def analyze(self, request: AnalysisRequest) -> str: ...

    def judge_document(self, text: str) -> str:
        """Return JSON ``{"keep": bool, "reason": str}``."""
        ...


# --- rule tables --------------------------------------------------------------

CODE, TEXT, ANY = "code", "text", "any"


@dataclass(frozen=True)
class Rule:
    pattern: re.Pattern
    note: str
    scope: str = ANY


def _r(pattern: str, note: str, scope: str = ANY) -> Rule:
    return Rule(re.compile(pattern, re.I), note, scope)


RULES: dict[SubFeature, tuple[Rule, ...]] = {
    SubFeature.IS_REMOTE: (
        _r(r"requests\.(get|post|put|patch|delete|request|session)\(", "HTTP request to the target", CODE),
        _r(r"\bsocket\.(socket|create_connection)\(", "raw network socket", CODE),
        _r(r"\b(urllib\.request|http\.client|httpx|aiohttp)\b", "HTTP client library", CODE),
        _r(r"['\"]https?://", "target addressed by URL", CODE),
        _r(r"\bremote(ly)? (code execution|attacker|unauthenticated|exploit)", "described as remotely exploitable", TEXT),
        _r(r"\bvia (https?|the network|network requests?)\b", "exploited over the network", TEXT),
    ),
    SubFeature.INFO_DEPENDENCY: (
        _r(r"\b\w*?(password|passwd|pwd|token|api[_-]?key|secret)\s*[:=]\s*['\"][^'\"\s]{2,}['\"]",
           "Hardcoded credentials", CODE),
        _r(r"add_argument\(\s*['\"]-{1,2}(u|p|user|username|password|pass|token|cookie|session)['\"]",
           "credentials supplied by the operator", CODE),
        _r(r"requires? (valid |existing )?(credentials|an? (api )?(token|key)|a valid session|a session cookie)",
           "documentation requires prior credentials", TEXT),
    ),
    SubFeature.ATTACK_CONDITION: (
        _r(r"(must|needs to|has to) be (enabled|configured|installed|running|exposed)",
           "target configuration prerequisite", TEXT),
        _r(r"\bnon-default (configuration|setting|install)", "non-default configuration required", TEXT),
        _r(r"only (works|affects|vulnerable) .{0,40}\b(when|if|with)\b", "conditional vulnerability", TEXT),
    ),
    SubFeature.PROBABILITY_DEP: (
        _r(r"race (condition|window)|\btoctou\b", "race condition", ANY),
        _r(r"brute[- ]?forc", "brute forcing", ANY),
        _r(r"(several|multiple|many) (attempts|tries|runs)", "success needs repeated attempts", TEXT),
        _r(r"heap (spray|groom)", "heap grooming", ANY),
    ),
    SubFeature.USER_INTERACTION: (
        _r(r"victim (must |needs to |has to )?(click|open|visit|view|browse|upload)", "victim action required", ANY),
        _r(r"user interaction (is )?required", "user interaction required", TEXT),
        _r(r"\b(social engineering|phishing)\b", "social engineering", TEXT),
        _r(r"trick(s|ing)? (a|the) (user|victim|admin)", "victim must be tricked", TEXT),
    ),
    SubFeature.EVASION: (
        _r(r"obfuscat", "obfuscation", ANY),
        _r(r"(bypass|evade|evading|evasion of) (the )?(waf|antivirus|av|edr|ids|ips|detection)\b",
           "detection evasion", ANY),
        _r(r"\bamsi\b", "AMSI evasion", ANY),
    ),
    SubFeature.CODE_EXEC: (
        _r(r"remote code execution|\brce\b|arbitrary (code|command) execution|execute arbitrary (code|commands)"
           r"|command injection|code injection", "code execution described", TEXT),
        _r(r"reverse shell|bind shell|web ?shell|bash -i >&|/dev/tcp/", "shell payload", ANY),
        _r(r"<\?php.{0,60}(system|exec|passthru|shell_exec)\(", "PHP webshell payload", CODE),
        _r(r"['\"][^'\"]*(;|\||`|\$\()\s*(id|whoami|uname|wget|curl|nc|bash|sh)\b", "injected OS command", CODE),
        _r(r"Runtime\.getRuntime\(\)\.exec|ProcessBuilder\(", "Java command execution payload", CODE),
    ),
    SubFeature.PRIV_ESCALATION: (
        _r(r"privilege escalation|escalat(e|es|ion of) privileges?|elevat(e|ion of) privileges?",
           "privilege escalation described", ANY),
        _r(r"(gain|gains|obtain|obtains|get|gets) root\b", "root obtained", ANY),
        _r(r"\bset(re)?s?uid\(\s*0", "setuid(0) call", CODE),
        _r(r"creat(e|es|ed|ing) (an? )?(new )?admin(istrator)? (user|account)", "admin account created", ANY),
        _r(r"['\"]role['\"]\s*:\s*['\"]admin", "role set to admin", CODE),
    ),
    SubFeature.INFO_LEAK: (
        _r(r"information (disclosure|leak)|sensitive (data|information) (exposure|disclosure)",
           "information disclosure described", TEXT),
        _r(r"(read|leak|disclose|dump)s? (arbitrary|sensitive) (files?|data|memory)", "arbitrary read", ANY),
        _r(r"/etc/(passwd|shadow)", "reads system credential files", ANY),
        _r(r"(path|directory) traversal|(\.\./){2,}", "path traversal", ANY),
        _r(r"dump(s|ing)? (the )?(database|credentials|hashes|memory)", "data dump", ANY),
    ),
    SubFeature.BYPASS: (
        _r(r"(authentication|auth|access control|authorization|login|2fa|mfa|csrf|sandbox) bypass",
           "security bypass described", ANY),
        _r(r"bypass(es|ing)? (the )?(authentication|auth|login|access control|authorization)",
           "security bypass described", ANY),
    ),
    SubFeature.DOS: (
        _r(r"denial[- ]of[- ]service|\bdos\b", "denial of service described", ANY),
        _r(r"crash(es|ing)? (the )?(server|service|daemon|process|target|device)", "target crash", ANY),
        _r(r"infinite loop|resource exhaustion|segmentation fault|\bsegfault\b", "availability impact", ANY),
    ),
    SubFeature.FLEXIBILITY: (
        _r(r"\bargparse\b|add_argument\(|sys\.argv|\bgetopt\b|click\.(option|argument)|\bflag\.(String|Int)\(",
           "target and options configurable from the command line", CODE),
        _r(r"\bargv\[\d\]", "command-line arguments", CODE),
        _r(r"\binput\(", "interactive target prompt", CODE),
    ),
}

_ADMIN_REQUIRED = (
    _r(r"requires? (an? )?(admin|administrator|root)( account| privileges?| access| credentials)",
       "administrative access required"),
    _r(r"(as|with) (an? )?(authenticated )?(admin|administrator) (account|user|session)", "runs as administrator"),
)
_USER_REQUIRED = (
    _r(r"\b(authenticated|low[- ]privileged?|logged[- ]in) (user|account|attacker)", "ordinary account required"),
    _r(r"requires? (a |an )?(valid )?(user )?account", "user account required"),
    _r(r"\blocal (user|account|access|shell)\b", "local user session required"),
)
_UNAUTH = (
    _r(r"\bunauthenticated\b|\bpre-auth|without (any )?authentication|no authentication", "no authentication needed"),
)
_CHECK_ONLY = re.compile(
    r"only checks?|detection only|does not exploit|check(s)? (if|whether) .{0,40}vulnerable|non-intrusive",
    re.I,
)


def _scopes(artifact: ExploitArtifact, scope: str):
    for f in artifact.textual_files():
        is_code = f.kind == SOURCE
        if scope == ANY or (scope == CODE) == is_code:
            yield f.path, f.text
    if scope in (TEXT, ANY):
        for d in artifact.docs:
            yield d.url, d.text


def _scan(artifact: ExploitArtifact, rules, limit: int = MAX_EVIDENCE) -> tuple[list[dict], bool]:
    """Evidence dicts for rule matches, plus whether any match was in code."""
    found, seen, in_code = [], set(), False
    code_paths = {f.path for f in artifact.files if f.kind == SOURCE}
    for rule in rules:
        for path, text in _scopes(artifact, rule.scope):
            for lineno, line in enumerate(text.splitlines(), 1):
                if rule.pattern.search(line) and (path, lineno) not in seen:
                    seen.add((path, lineno))
                    found.append({"file": path, "line": lineno, "note": rule.note})
                    in_code = in_code or path in code_paths
    found.sort(key=lambda e: (e["file"], e["line"]))
    return found[:limit], in_code


def _confidence(evidence: list, in_code: bool) -> int:
    if not evidence:
        return 2
    if in_code:
        return 5 if len(evidence) >= 3 else 4
    return 3


def _response(sf: SubFeature, conclusion, evidence: list, confidence: int) -> str:
    if isinstance(conclusion, Privilege):
        conclusion = conclusion.value
    return json.dumps({
        "subfeature": sf.value,
        "evidence": evidence,
        "conclusion": conclusion,
        "confidence": confidence,
    })


class RuleBackend:
    """Deterministic pattern-table backend; ignores the prompt text."""

    name = "rules"

    def analyze(self, request: AnalysisRequest) -> str:
        sf = SubFeature(request.subfeature)
        art = request.artifact
        handler = getattr(self, f"_{sf.value}", None)
        if handler is not None:
            return handler(request)
        evidence, in_code = _scan(art, RULES[sf])
        return _response(sf, bool(evidence), evidence, _confidence(evidence, in_code))

    def _privilege_required(self, request: AnalysisRequest) -> str:
        sf = SubFeature.PRIVILEGE_REQUIRED
        for level, rules in ((Privilege.ADMIN, _ADMIN_REQUIRED), (Privilege.USER, _USER_REQUIRED)):
            evidence, in_code = _scan(request.artifact, rules)
            if evidence:
                return _response(sf, level, evidence, _confidence(evidence, in_code))
        evidence, in_code = _scan(request.artifact, _UNAUTH)
        return _response(sf, Privilege.NONE, evidence, 4 if evidence else 2)

    def _relevance(self, request: AnalysisRequest) -> str:
        sf = SubFeature.RELEVANCE
        names = [n for n in (request.cve_id, request.application) if n]
        rules = tuple(_r(re.escape(n), f"mentions {n}") for n in names)
        evidence, in_code = _scan(request.artifact, rules) if rules else ([], False)
        return _response(sf, bool(evidence), evidence, _confidence(evidence, in_code))

    def _availability(self, request: AnalysisRequest) -> str:
        sf = SubFeature.AVAILABILITY
        evidence = [
            {"file": f.path, "line": None, "note": "exploit source code present"}
            for f in request.artifact.files
            if f.kind == SOURCE and f.text and f.text.strip()
        ][:MAX_EVIDENCE]
        return _response(sf, bool(evidence), evidence, 5 if evidence else 3)

    def _functionality(self, request: AnalysisRequest) -> str:
        sf = SubFeature.FUNCTIONALITY
        art = request.artifact
        rules = tuple(
            Rule(rule.pattern, rule.note, CODE)
            for impact in (SubFeature.CODE_EXEC, SubFeature.PRIV_ESCALATION, SubFeature.INFO_LEAK,
                           SubFeature.BYPASS, SubFeature.DOS)
            for rule in RULES[impact]
        )
        evidence, _ = _scan(art, rules)
        check_only = [
            {"file": path, "line": n, "note": "detection-only behaviour"}
            for path, text in _scopes(art, ANY)
            for n, line in enumerate(text.splitlines(), 1)
            if _CHECK_ONLY.search(line)
        ]
        if check_only:
            return _response(sf, False, check_only[:MAX_EVIDENCE], 4)
        return _response(sf, bool(evidence), evidence, _confidence(evidence, bool(evidence)))

    def judge_document(self, text: str) -> str:
        keep, reason = judge_document_rules(text)
        return json.dumps({"keep": keep, "reason": reason})


_CVE_ID = re.compile(r"\bCVE-\d{4}-\d{4,}\b", re.I)
_SUMMARY_MARKERS = re.compile(
    r"allows? (remote |local |unauthenticated |authenticated )?(attackers?|users?|an attacker)"
    r"|\bcvss\b|base score|\bnvd\b|\bcwe-\d+|published:?\s|last modified",
    re.I,
)
_SETUP_MARKERS = re.compile(
    r"pip3? install|git clone|usage:|^\s*\$ |python3? \S+\.py|docker (run|compose)|\bcurl -|"
    r"step \d|npm install|go run|\bmake\b",
    re.I | re.M,
)
_EXPLOIT_TERMS = frozenset({
    "payload", "exploit", "shell", "request", "endpoint", "parameter", "inject", "injection",
    "execute", "command", "bypass", "overflow", "traversal", "upload", "deserialization",
    "trigger", "poc", "reproduce",
})


def judge_document_rules(text: str) -> tuple[bool, str]:
    if not text or not text.strip():
        return False, "empty document"
    if _SETUP_MARKERS.search(text):
        return True, "contains setup or usage instructions"
    words = re.findall(r"[a-z]+", text.lower())
    if _CVE_ID.search(text) and _SUMMARY_MARKERS.search(text) and len(text) < 1500:
        return False, "CVE database summary"
    if sum(1 for w in words if w in _EXPLOIT_TERMS) >= 2:
        return True, "exploitation-relevant content"
    return False, "no exploitation-relevant signal"


FILTER_PROMPT = """## Role-play
You are a penetration tester triaging web pages collected while researching a vulnerability.

## Task
Decide whether the document below is useful for exploiting a vulnerability. Keep documents with
code snippets, setup or usage instructions, or technical exploitation details. Drop boilerplate
vulnerability-database summaries, generic explanations, and pages with no exploitation detail.

Example: "CVE-2024-0001: A flaw in Foo 1.2 allows remote attackers to execute code. CVSS 9.8."
-> {{"keep": false, "reason": "CVE database summary"}}
Example: "Send the following request to /api/upload with a PHP payload, then browse to ..."
-> {{"keep": true, "reason": "exploitation steps"}}

## Document
{document}

## Structured Output
Reply with one JSON object and nothing else, with the fields "keep" (boolean) and "reason" (string).
"""


class LiveBackend:
    """Sends rendered prompts to a chat-completion API through the caching client."""

    name = "live"

    def __init__(self, client: LLMClient, model_name: str = DEFAULT_MODEL, temperature: float = 0.0,
                 max_output_tokens: int = 1024, max_document_chars: int = 12000):
        self.client = client
        self.model_name = model_name
        self.temperature = temperature
        self.max_output_tokens = max_output_tokens
        self.max_document_chars = max_document_chars

    def _complete(self, prompt: str) -> str:
        return self.client.complete(CompletionRequest(
            prompt_text=prompt,
            model_name=self.model_name,
            max_output_tokens=self.max_output_tokens,
            temperature=self.temperature,
        ))

    def analyze(self, request: AnalysisRequest) -> str:
        return self._complete(request.prompt)

    def judge_document(self, text: str) -> str:
        return self._complete(FILTER_PROMPT.format(document=text[: self.max_document_chars]))


def make_backend(kind: str, client: Optional[LLMClient] = None, **kwargs):
    if kind == "rules":
        return RuleBackend()
    if kind == "live":
        if client is None:
            raise ValueError("the live backend needs an LLMClient")
        return LiveBackend(client, **kwargs)
    raise ValueError(f"unknown backend {kind!r} (expected 'live' or 'rules')")
