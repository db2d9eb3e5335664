import json

import pytest

from aeas.analyzer.backends import AnalysisRequest, RuleBackend, judge_document_rules, make_backend
from aeas.analyzer.extract import (
    AnalyzerConfig,
    extract_features,
    extract_one,
    filter_document,
    load_findings,
    save_findings,
)
from aeas.analyzer.features import Privilege, SubFeature, default_finding
from aeas.corpus import WebDocument
from aeas.fixtures import load_fixture_config, load_fixture_corpus
from aeas.pipeline import prepare_artifact
from helpers import artifact

RULES = RuleBackend()


def fixture_artifact(aid):
    for rec in load_fixture_corpus():
        for art in rec.exploits:
            if art.artifact_id == aid:
                return rec, art
    raise KeyError(aid)


def features_of(aid):
    rec, art = fixture_artifact(aid)
    prepared = prepare_artifact(art, RULES, load_fixture_config().filter)
    return extract_features(prepared, RULES, AnalyzerConfig(), rec.cve_id, rec.application)


class Scripted:
    """Backend replaying a fixed list of responses (exceptions are raised)."""

    name = "scripted"

    def __init__(self, responses):
        self.responses = list(responses)
        self.prompts = []

    def analyze(self, request):
        self.prompts.append(request.prompt)
        r = self.responses.pop(0) if len(self.responses) > 1 else self.responses[0]
        if isinstance(r, Exception):
            raise r
        return r

    def judge_document(self, text):
        r = self.responses[0]
        if isinstance(r, Exception):
            raise r
        return r


GOOD = '{"evidence": [{"file": "exploit.py", "line": 1, "note": "n"}], "conclusion": true, "confidence": 4}'


# --- rules backend on fixtures ----------------------------------------------------

@pytest.mark.parametrize("aid", ["netgate-bypass", "dh-poc"])
def test_hardcoded_credentials_found(aid):
    f = features_of(aid)[SubFeature.INFO_DEPENDENCY]
    assert f.conclusion is True
    assert any(e.note == "Hardcoded credentials" for e in f.evidence)


def test_remote_code_execution_readme():
    fv = features_of("acme-rce")
    assert fv.is_remote and fv.code_exec and fv.relevance and fv.availability and fv.functionality
    assert any(e.file == "README.md" for e in fv[SubFeature.CODE_EXEC].evidence)


def test_admin_requirement_and_attack_condition():
    fv = features_of("dh-poc")
    assert fv.privilege_required is Privilege.ADMIN
    assert fv.attack_condition is True


def test_local_privilege_escalation():
    fv = features_of("fv-lpe")
    assert fv.priv_escalation and fv.probability_dep and not fv.is_remote


def test_check_only_is_not_functional():
    assert features_of("acme-check").functionality is False


def test_irrelevant_artifact():
    assert features_of("mr-lab").relevance is False


def test_binary_only_artifact_gets_defaults():
    fv = features_of("acme-binary")
    for sf in SubFeature:
        assert fv[sf] == default_finding(sf)
    assert fv.relevance is False and fv.privilege_required is Privilege.ADMIN


def test_extraction_is_deterministic():
    assert features_of("netgate-bypass") == features_of("netgate-bypass")


def test_rule_backend_ignores_prompt():
    _, art = fixture_artifact("acme-rce")
    a = RULES.analyze(AnalysisRequest(SubFeature.IS_REMOTE, art, "one", "CVE-2024-31001", "AcmeCMS"))
    b = RULES.analyze(AnalysisRequest(SubFeature.IS_REMOTE, art, "two", "CVE-2024-31001", "AcmeCMS"))
    assert a == b


def test_make_backend():
    assert make_backend("rules").name == "rules"
    with pytest.raises(ValueError):
        make_backend("live")
    with pytest.raises(ValueError):
        make_backend("gpt")


# --- retries -------------------------------------------------------------------------

def test_success_first_try():
    backend = Scripted([GOOD])
    f = extract_one(SubFeature.IS_REMOTE, artifact("a"), backend, "P")
    assert f.conclusion is True and len(backend.prompts) == 1


def test_retry_carries_error_then_succeeds():
    backend = Scripted(["nope", GOOD])
    f = extract_one(SubFeature.IS_REMOTE, artifact("a"), backend, "P")
    assert f.confidence == 4
    assert backend.prompts[0] == "P" and backend.prompts[1].startswith("P") and len(backend.prompts[1]) > 1


@pytest.mark.parametrize("failure", ["{}", "not json", '{"evidence": [], "conclusion": true, "confidence": 9}',
                                     RuntimeError("backend down")])
def test_retries_exhausted_gives_default(failure):
    backend = Scripted([failure])
    f = extract_one(SubFeature.PRIVILEGE_REQUIRED, artifact("a"), backend, "P", retries=2)
    assert f == default_finding(SubFeature.PRIVILEGE_REQUIRED)
    assert len(backend.prompts) == 3


def test_zero_retries():
    backend = Scripted(["bad", GOOD])
    assert extract_one(SubFeature.DOS, artifact("a"), backend, "P", retries=0) == default_finding(SubFeature.DOS)
    assert len(backend.prompts) == 1


def test_evidence_citing_unknown_files_dropped():
    raw = json.dumps({"evidence": [{"file": "exploit.py", "line": 1, "note": "ok"},
                                   {"file": "invented.py", "line": 3, "note": "hallucinated"}],
                      "conclusion": True, "confidence": 3})
    f = extract_one(SubFeature.IS_REMOTE, artifact("a"), Scripted([raw]), "P")
    assert [e.file for e in f.evidence] == ["exploit.py"]


def test_doc_url_is_valid_evidence():
    art = artifact("a", docs=[("https://blog.test/x", "send the payload")])
    raw = json.dumps({"evidence": [{"file": "https://blog.test/x", "line": None, "note": "steps"}],
                      "conclusion": True, "confidence": 3})
    assert len(extract_one(SubFeature.IS_REMOTE, art, Scripted([raw]), "P").evidence) == 1


def test_extract_features_complete_and_parallel_equal():
    _, art = fixture_artifact("netgate-bypass")
    serial = extract_features(art, RULES, AnalyzerConfig(), "CVE-2024-31002", "NetGate VPN")
    parallel = extract_features(art, RULES, AnalyzerConfig(max_workers=4), "CVE-2024-31002", "NetGate VPN")
    assert serial == parallel
    assert set(serial.findings) == set(SubFeature)


# --- document filtering -------------------------------------------------------------

def test_empty_document_dropped():
    assert filter_document("", Scripted([RuntimeError("never called")])) is False
    assert filter_document("   \n", RULES) is False


def test_code_block_kept_without_backend():
    doc = WebDocument("u", "Intro\n```\ncurl http://x\n```\n")
    assert filter_document(doc, Scripted([RuntimeError("never called")])) is True


def test_cve_summary_dropped():
    text = ("CVE-2024-0001: A flaw in Foo 1.2 allows remote attackers to execute arbitrary code. "
            "CVSS 9.8. Published: 2024-01-01.")
    assert judge_document_rules(text)[0] is False
    assert filter_document(text, RULES) is False


def test_exploit_walkthrough_kept():
    text = "Send the payload to the upload endpoint, then request the file to execute it."
    assert filter_document(text, RULES) is True


@pytest.mark.parametrize("reply", ["not json", '{"reason": "x"}', '{"keep": "yes"}', "[]", RuntimeError("x")])
def test_unusable_judgement_drops(reply):
    assert filter_document("some prose", Scripted([reply])) is False


def test_fixture_docs():
    cfg = load_fixture_config().filter
    _, writeup = fixture_artifact("acme-writeup")
    assert prepare_artifact(writeup, RULES, cfg).docs == ()
    _, trav = fixture_artifact("dh-traversal")
    kept = prepare_artifact(trav, RULES, cfg).docs
    assert [d.url for d in kept] == [d.url for d in trav.docs if "blog" in d.url]
    assert "Sponsored" not in kept[0].text


def test_binary_files_removed_before_analysis():
    _, art = fixture_artifact("acme-binary")
    assert prepare_artifact(art, RULES, load_fixture_config().filter).files == ()


# --- persistence ---------------------------------------------------------------------

def test_save_load_findings(tmp_path):
    fv = features_of("dh-traversal")
    path = tmp_path / "x" / "findings.json"
    save_findings(fv, path)
    assert load_findings(path) == fv
    save_findings(load_findings(path), tmp_path / "y.json")
    assert path.read_bytes() == (tmp_path / "y.json").read_bytes()
