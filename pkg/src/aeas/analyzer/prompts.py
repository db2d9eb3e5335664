"""Prompt templates, one per sub-feature.

Each prompt has four sections in fixed order: role-play, analysis steps,
retrieved context, and the structured-output contract.  The step text is
original to this package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..corpus import ExploitArtifact
from .features import SubFeature
from .retrieval import Chunk

ROLE_PREAMBLE = "You are a senior penetration tester reviewing a public exploit before it is used in an assessment."
NO_CONTEXT = "(no additional context)"


@dataclass(frozen=True)
class TaskSpec:
    title: str
    question: str
    steps: tuple[str, ...]
    query: str
    conclusion_type: str  # "boolean" or "none | user | admin"


_BOOL = "boolean"

TASKS: dict[SubFeature, TaskSpec] = {
    SubFeature.IS_REMOTE: TaskSpec(
        "Attack Vector Analysis",
        "Can the exploit be launched against the target over a network, without local or physical access?",
        (
            "List the network operations the code performs (HTTP requests, sockets, remote protocols).",
            "Check whether the target is addressed by host, URL or port rather than a local path or process.",
            "Note any statement in the documentation that the attacker needs a local session.",
        ),
        "remote network http https request url socket target host port",
        _BOOL,
    ),
    SubFeature.INFO_DEPENDENCY: TaskSpec(
        "Information Dependency Analysis",
        "Does the exploit depend on prior knowledge the attacker must already hold, such as credentials, tokens or keys?",
        (
            "Search for hardcoded credentials, API tokens or secrets.",
            "Search for parameters that ask the operator for usernames, passwords, session cookies or keys.",
            "Decide whether the exploit works without any of this information.",
        ),
        "password username credential token session cookie api key secret login authenticated",
        _BOOL,
    ),
    SubFeature.ATTACK_CONDITION: TaskSpec(
        "Attack Condition Analysis",
        "Does the exploit require a specific, non-default target configuration or deployment to succeed?",
        (
            "Identify settings, plugins, versions or endpoints that must be enabled on the target.",
            "Separate requirements that hold in a default installation from ones that do not.",
            "Decide whether a non-default condition is required.",
        ),
        "configuration config enabled setting requires plugin version default endpoint module option",
        _BOOL,
    ),
    SubFeature.PROBABILITY_DEP: TaskSpec(
        "Probabilistic Analysis",
        "Does success depend on factors outside the attacker's control, such as races, timing, or guessing?",
        (
            "Look for race windows, retries until success, brute forcing, or heap grooming.",
            "Check whether randomness in the code actually affects whether the exploit succeeds.",
            "Decide whether the exploit is probabilistic.",
        ),
        "race condition timing retry attempts brute random probability spray luck window",
        _BOOL,
    ),
    SubFeature.USER_INTERACTION: TaskSpec(
        "User Interaction Analysis",
        "Must a victim user take some action (click, open, visit, upload) for the exploit to succeed?",
        (
            "Find steps that involve a victim opening a file, visiting a link or performing an action.",
            "Distinguish actions by the attacker from actions by another user.",
            "Decide whether victim interaction is required.",
        ),
        "victim user click open visit link upload interaction phishing email browser",
        _BOOL,
    ),
    SubFeature.PRIVILEGE_REQUIRED: TaskSpec(
        "Privilege Requirement Analysis",
        "What level of access must the attacker already have on the target: none, an ordinary user account, or administrative access?",
        (
            "Find any login, session or account the exploit uses before the vulnerable step.",
            "Determine the role of that account (anonymous, ordinary user, administrator or root).",
            "Report the minimum level required.",
        ),
        "privilege admin administrator root user account authenticated login role unauthenticated",
        "none | user | admin",
    ),
    SubFeature.EVASION: TaskSpec(
        "Attack Evasion Analysis",
        "Does the exploit need to evade detection or protection mechanisms (WAF, antivirus, EDR, filters)?",
        (
            "Look for obfuscation, encoding tricks or filter bypass payloads.",
            "Check the documentation for mentions of security products that must be evaded.",
            "Decide whether evasion is part of the exploit's prerequisites.",
        ),
        "evade evasion obfuscate encode waf antivirus edr filter detection bypass signature",
        _BOOL,
    ),
    SubFeature.CODE_EXEC: TaskSpec(
        "Code Execution Analysis",
        "Does a successful run execute attacker-chosen code or commands on the target?",
        (
            "Trace the payload the exploit delivers.",
            "Check whether the payload runs commands, spawns a shell, or loads attacker code.",
            "Decide whether code execution is achieved.",
        ),
        "execute command shell rce code execution payload system exec reverse webshell",
        _BOOL,
    ),
    SubFeature.PRIV_ESCALATION: TaskSpec(
        "Privilege Escalation Analysis",
        "Does a successful run give the attacker higher privileges than they started with?",
        (
            "Compare the attacker's privileges before and after the exploit.",
            "Look for creation of admin accounts, setuid binaries, token theft or role changes.",
            "Decide whether privileges are escalated.",
        ),
        "privilege escalation root admin elevate setuid sudo token role account",
        _BOOL,
    ),
    SubFeature.INFO_LEAK: TaskSpec(
        "Information Leak Analysis",
        "Does a successful run disclose data the attacker should not be able to read?",
        (
            "Identify what the exploit reads or prints from the target.",
            "Check whether that data is normally protected (files, credentials, memory, records).",
            "Decide whether information is leaked.",
        ),
        "leak disclosure read file passwd dump memory traversal sensitive data exfiltrate",
        _BOOL,
    ),
    SubFeature.BYPASS: TaskSpec(
        "Security Bypass Analysis",
        "Does a successful run circumvent a security mechanism such as authentication or access control?",
        (
            "Identify the protection the exploit defeats, if any.",
            "Check whether the exploit reaches functionality that should require authorization.",
            "Decide whether a security mechanism is bypassed.",
        ),
        "bypass authentication authorization access control protection circumvent",
        _BOOL,
    ),
    SubFeature.DOS: TaskSpec(
        "Denial of Service Analysis",
        "Does a successful run make the target crash, hang, or otherwise become unavailable?",
        (
            "Look for crash triggers, resource exhaustion or infinite loops.",
            "Check the documentation for statements about service outage.",
            "Decide whether denial of service results.",
        ),
        "denial service dos crash hang exhaust loop flood unavailable segfault",
        _BOOL,
    ),
    SubFeature.RELEVANCE: TaskSpec(
        "Relevance Analysis",
        "Does the artifact target this specific vulnerability and at least allow its existence to be verified?",
        (
            "Check whether the artifact names the vulnerability or the affected application.",
            "Check whether it exercises the vulnerable component.",
            "Decide whether it is relevant to this vulnerability.",
        ),
        "cve vulnerability vulnerable exploit poc check verify affected version",
        _BOOL,
    ),
    SubFeature.AVAILABILITY: TaskSpec(
        "Availability Analysis",
        "Is runnable exploit source code actually present in the artifact?",
        (
            "List the source files and what they do.",
            "Distinguish runnable code from prose descriptions or screenshots.",
            "Decide whether exploit code is available.",
        ),
        "import def function main code script usage run python",
        _BOOL,
    ),
    SubFeature.FLEXIBILITY: TaskSpec(
        "Flexibility Analysis",
        "Can the operator change the exploit's target or goal without editing code (arguments, options, payload selection)?",
        (
            "Find command-line arguments, configuration options or interactive prompts.",
            "Check whether the target address and the payload or command are configurable.",
            "Decide whether the exploit is flexible.",
        ),
        "argparse argv usage option target payload command parameter url host port",
        _BOOL,
    ),
    SubFeature.FUNCTIONALITY: TaskSpec(
        "Functionality Analysis",
        "Does the exploit achieve an attack goal beyond verifying the vulnerability (execution, escalation, data access, bypass)?",
        (
            "Identify what the exploit does after triggering the vulnerability.",
            "Separate detection-only behaviour from a delivered payload.",
            "Decide whether the exploit is functional beyond verification.",
        ),
        "payload shell execute command dump upload write admin create exploit success",
        _BOOL,
    ),
}


def output_example(sf: SubFeature) -> dict:
    conclusion = "user" if sf is SubFeature.PRIVILEGE_REQUIRED else True
    return {
        "subfeature": sf.value,
        "evidence": [{"file": "exploit.py", "line": 12, "note": "short description of the observed technique"}],
        "conclusion": conclusion,
        "confidence": 4,
    }


def output_schema(sf: SubFeature) -> str:
    spec = TASKS[sf]
    return "\n".join([
        f'- "subfeature": the string "{sf.value}"',
        '- "evidence": list of objects {"file": path inside the artifact, "line": integer or null, '
        '"note": technique observed}',
        f'- "conclusion": {spec.conclusion_type}',
        '- "confidence": integer from 1 (guess) to 5 (certain)',
    ])


@dataclass(frozen=True)
class PromptSpec:
    role_preamble: str
    cot_steps: tuple[str, ...]
    rag_snippets: tuple[str, ...]
    output_schema: str
    output_example: str

    def render(self, header: str = "") -> str:
        steps = "\n".join(f"{n}. {s}" for n, s in enumerate(self.cot_steps, 1))
        rag = "\n\n".join(self.rag_snippets) if self.rag_snippets else NO_CONTEXT
        parts = [
            "## Role-play",
            self.role_preamble,
        ]
        if header:
            parts.append(header)
        parts += [
            "## CoT",
            f"Work through these steps before answering:\n{steps}",
            "## RAG",
            f"Excerpts retrieved from the artifact:\n{rag}",
            "## Structured Output",
            f"Reply with one JSON object and nothing else. Fields:\n{self.output_schema}",
            f"Example reply:\n{self.output_example}",
        ]
        return "\n\n".join(parts) + "\n"


def prompt_spec(task: SubFeature, snippets) -> PromptSpec:
    sf = SubFeature(task)
    spec = TASKS[sf]
    rendered = tuple(s.render() if isinstance(s, Chunk) else str(s) for s in snippets)
    return PromptSpec(
        role_preamble=ROLE_PREAMBLE,
        cot_steps=spec.steps + (f"Answer the question: {spec.question}",),
        rag_snippets=rendered,
        output_schema=output_schema(sf),
        output_example=json.dumps(output_example(sf)),
    )


def build_prompt(task: SubFeature, artifact: ExploitArtifact, snippets, cve_id: str = "",
                 application: str = "") -> str:
    sf = SubFeature(task)
    files = ", ".join(f"{f.path} ({f.kind})" for f in artifact.files) or "none"
    target = " ".join(x for x in (cve_id, f"in {application}" if application else "") if x)
    header = (
        f"Task: {TASKS[sf].title}.\n"
        f"Artifact: {artifact.artifact_id} (repository {artifact.repo.repo_id})"
        + (f" for {target}" if target else "")
        + f".\nFiles: {files}"
    )
    return prompt_spec(sf, snippets).render(header)


def retry_suffix(error: Exception) -> str:
    return (
        "\n## Correction\n"
        f"Your previous response was rejected: {error}\n"
        "Respond again with a single JSON object that follows the Structured Output fields exactly.\n"
    )
