import json
import os
from pathlib import Path

import pytest

from aeas.analyzer.features import SubFeature
from aeas.analyzer.parsing import parse_finding
from aeas.analyzer.prompts import NO_CONTEXT, TASKS, build_prompt, output_example, prompt_spec, retry_suffix
from aeas.analyzer.retrieval import LexicalIndex, chunk_documents
from aeas.fixtures import load_fixture_corpus
from helpers import artifact

GOLDEN = Path(__file__).parent / "golden" / "prompt_info_dependency.txt"
SECTIONS = ("## Role-play", "## CoT", "## RAG", "## Structured Output")


def fixture_artifact(cve, aid):
    rec = next(r for r in load_fixture_corpus() if r.cve_id == cve)
    return rec, next(a for a in rec.exploits if a.artifact_id == aid)


def golden_prompt():
    rec, art = fixture_artifact("CVE-2024-31004", "dh-poc")
    docs = [(f.path, f.text) for f in art.textual_files()]
    snippets = LexicalIndex(chunk_documents(docs)).search(TASKS[SubFeature.INFO_DEPENDENCY].query, 4)
    return build_prompt(SubFeature.INFO_DEPENDENCY, art, snippets, rec.cve_id, rec.application)


def test_golden_prompt_byte_identical():
    text = golden_prompt()
    if os.environ.get("AEAS_UPDATE_GOLDEN") == "1":
        GOLDEN.write_text(text, encoding="utf-8")
    assert text == GOLDEN.read_text(encoding="utf-8")


@pytest.mark.parametrize("sf", list(SubFeature))
def test_sections_in_order_and_schema_fields(sf):
    text = build_prompt(sf, artifact(), ["[x.py from line 1]\nimport os"], "CVE-2024-0001", "Foo")
    positions = [text.index(s) for s in SECTIONS]
    assert positions == sorted(positions)
    for field in ('"conclusion"', '"confidence"', '"evidence"'):
        assert field in text
    assert "Reply with one JSON object" in text


@pytest.mark.parametrize("sf", list(SubFeature))
def test_example_in_prompt_parses(sf):
    example = json.dumps(output_example(sf))
    assert example in build_prompt(sf, artifact(), [])
    assert parse_finding(example, sf).confidence == 4


def test_empty_snippets_say_no_additional_context():
    text = build_prompt(SubFeature.IS_REMOTE, artifact(), [])
    rag = text[text.index("## RAG"):text.index("## Structured Output")]
    assert NO_CONTEXT in rag and "no additional context" in NO_CONTEXT


@pytest.mark.parametrize("sf", list(SubFeature))
def test_spec_sections_non_empty(sf):
    spec = prompt_spec(sf, ["snippet"])
    assert spec.role_preamble and spec.cot_steps and spec.rag_snippets and spec.output_schema and spec.output_example


def test_retry_suffix_carries_error():
    assert "missing fields ['confidence']" in retry_suffix(ValueError("missing fields ['confidence']"))


def test_every_subfeature_has_a_task():
    assert set(TASKS) == set(SubFeature)
