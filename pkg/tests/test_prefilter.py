from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from aeas.corpus import load_corpus
from aeas.fixtures import CORPUS_DIR
from aeas.prefilter import (
    FilterConfig,
    RepoSignals,
    confidence_score,
    eliminate,
    extract_main_content,
    file_filter,
    looks_like_html,
    prioritize,
    quality_score,
    repo_signals,
    within_size_bounds,
)
from helpers import T0, repo

unit = st.floats(0, 1, allow_nan=False)
THIRDS = FilterConfig(confidence_weights=(1 / 3, 1 / 3, 1 / 3))


# --- signals and confidence -----------------------------------------------------

def test_zero_penalty_signals():
    assert repo_signals(repo(description_len=0, issue_count=0)) == RepoSignals(1.0, 1.0, 1.0)


def test_description_at_max_gives_zero():
    assert repo_signals(repo(description_len=2000)).d == 0.0
    assert repo_signals(repo(description_len=5000)).d == 0.0


def test_hand_example_signals():
    meta = repo(description_len=500, issue_count=25, topic_labels=("cve", "exploit", "games", "misc"))
    assert repo_signals(meta, {"cve", "exploit"}) == RepoSignals(0.75, 0.75, 0.5)


def test_topics_case_insensitive():
    assert repo_signals(repo(topic_labels=("CVE",)), {"cve"}).t == 1.0


def test_confidence_hand_values():
    assert confidence_score(RepoSignals(1, 1, 1), THIRDS) == pytest.approx(1.0, abs=1e-12)
    assert confidence_score(RepoSignals(0.75, 0.75, 0.5), THIRDS) == pytest.approx(0.6666666667, abs=1e-9)
    assert confidence_score(RepoSignals(0, 0, 0), THIRDS) == 0.0


@given(st.tuples(unit, unit, unit).filter(lambda w: sum(w) > 1e-6))
def test_all_ones_scores_one_under_normalized_weights(w):
    cfg = FilterConfig(confidence_weights=w).normalized()
    assert confidence_score(RepoSignals(1, 1, 1), cfg) == pytest.approx(1.0, abs=1e-12)


@given(unit, unit, unit, unit, st.integers(0, 2), st.tuples(unit, unit, unit).filter(lambda w: sum(w) > 0))
def test_confidence_monotone(d, i, t, bump, which, w):
    cfg = FilterConfig(confidence_weights=w)
    base = [d, i, t]
    up = list(base)
    up[which] = max(up[which], bump)
    assert confidence_score(RepoSignals(*up), cfg) >= confidence_score(RepoSignals(*base), cfg)


def test_signals_validated():
    with pytest.raises(ValueError):
        RepoSignals(1.1, 0, 0)


def test_config_validation():
    with pytest.raises(ValueError):
        FilterConfig(confidence_weights=(-1, 1, 1))
    with pytest.raises(ValueError):
        FilterConfig(confidence_weights=(0, 0, 0))
    with pytest.raises(ValueError):
        FilterConfig(quality_lambda=0)


def test_config_round_trip():
    cfg = FilterConfig(confidence_weights=(0.2, 0.3, 0.5), top_n=3, drop_extensions={".txt"})
    assert FilterConfig.from_dict(cfg.to_dict()) == cfg


# --- quality ---------------------------------------------------------------------

def test_quality_hand_example():
    meta = repo(stars=100, forks=4, created_at=T0)
    assert quality_score(meta, T0 + timedelta(days=365)) == pytest.approx(25.0, abs=1e-12)


def test_quality_zero_stars():
    assert quality_score(repo(stars=0, forks=9), T0 + timedelta(days=900)) == 0.0


def test_quality_zero_forks_floored():
    assert quality_score(repo(stars=10, forks=0), T0 + timedelta(days=365)) == pytest.approx(10.0)


def test_quality_rejects_future_reference():
    with pytest.raises(ValueError):
        quality_score(repo(), T0 - timedelta(days=1))


@given(st.integers(0, 10_000), st.integers(1, 100), st.integers(0, 1000), st.integers(1, 5000), st.integers(1, 50))
def test_quality_monotonicity(stars, more, forks, days, extra):
    now = T0 + timedelta(days=days)
    q = quality_score(repo(stars=stars, forks=forks), now)
    assert quality_score(repo(stars=stars + more, forks=forks), now) > q
    assert quality_score(repo(stars=stars, forks=forks + extra), now) <= q
    if stars > 0:
        assert quality_score(repo(stars=stars, forks=forks), now + timedelta(days=extra)) > q


# --- eliminate / prioritize -----------------------------------------------------

def _repos():
    return [
        repo("a/x", stars=10, forks=1, description_len=100),
        repo("b/y", stars=5, forks=1, description_len=100),
        repo("c/z", stars=50, forks=50, description_len=1900, issue_count=95, topic_labels=("games",)),
    ]


def test_threshold_zero_keeps_all():
    assert eliminate(_repos(), FilterConfig(confidence_threshold=0)) == _repos()


def test_threshold_above_max_drops_all():
    assert eliminate(_repos(), FilterConfig(confidence_threshold=1.1)) == []


def test_tie_broken_by_stars_then_id():
    now = T0 + timedelta(days=100)
    # equal quality: 10*100/2 == 5*100/1
    a = repo("z/a", stars=10, forks=2)
    b = repo("a/b", stars=5, forks=1)
    c = repo("a/a", stars=5, forks=1)
    assert quality_score(a, now) == quality_score(b, now)
    assert [r.repo_id for r in prioritize([c, b, a], now)] == ["z/a", "a/a", "a/b"]


def test_fixture_order_matches_hand_sort():
    # CVE-2024-31001 repos at the pinned reference time, quality computed by hand:
    #   acme-rce     240 stars, 30 forks, created 2024-04-10T08:00 -> 416 2/3 days -> 240*(416+2/3)/365/30
    #   acme-writeup   8 stars,  1 fork,  created 2024-05-01 -> 396 days ->   8*396/365
    #   acme-check    35 stars, 12 forks, created 2024-04-02T12:00 -> 424.5 days -> 35*424.5/365/12
    #   acme-binary    2 stars,  0 forks, created 2024-04-20 -> 407 days ->   2*407/365
    now = datetime(2025, 6, 1, tzinfo=timezone.utc)
    hand = {"acme-rce": 240 * (416 + 2 / 3) / 365 / 30, "acme-writeup": 8 * 396 / 365,
            "acme-check": 35 * 424.5 / 365 / 12, "acme-binary": 2 * 407 / 365}
    rec = next(r for r in load_corpus(CORPUS_DIR) if r.cve_id == "CVE-2024-31001")
    by_repo = {a.repo.repo_id: a.artifact_id for a in rec.exploits}
    for a in rec.exploits:
        assert quality_score(a.repo, now) == pytest.approx(hand[a.artifact_id], rel=1e-12)
    order = [by_repo[r.repo_id] for r in prioritize([a.repo for a in rec.exploits], now, relevant_topics={"cve"})]
    assert order == sorted(hand, key=lambda k: -hand[k])


def test_prioritize_top_n():
    now = T0 + timedelta(days=10)
    assert len(prioritize(_repos(), now, FilterConfig(confidence_threshold=0), top_n=2)) == 2


repo_strategy = st.builds(
    lambda i, d, n, s, f, days: repo(f"o/r{i}", description_len=d, issue_count=n, stars=s, forks=f,
                                     created_at=T0 - timedelta(days=days)),
    st.integers(0, 10_000), st.integers(0, 3000), st.integers(0, 200), st.integers(0, 500),
    st.integers(0, 100), st.integers(0, 2000),
)


@given(st.lists(repo_strategy, max_size=8, unique_by=lambda r: r.repo_id), unit,
       st.one_of(st.none(), st.integers(0, 8)))
def test_eliminate_idempotent_and_prioritize_permutation(repos, threshold, top_n):
    cfg = FilterConfig(confidence_threshold=threshold)
    kept = eliminate(repos, cfg)
    assert eliminate(kept, cfg) == kept
    ordered = prioritize(repos, T0, cfg, top_n=top_n)
    full = prioritize(repos, T0, cfg)
    assert sorted(r.repo_id for r in full) == sorted(r.repo_id for r in kept)
    assert ordered == (full if top_n is None else full[:top_n])


@given(st.lists(repo_strategy, max_size=8), st.tuples(unit, unit, unit).filter(lambda w: sum(w) > 1e-3),
       unit, st.floats(1e-3, 10))
def test_joint_scaling_keeps_decisions(repos, w, threshold, c):
    base = FilterConfig(confidence_weights=w, confidence_threshold=threshold)
    scaled = FilterConfig(confidence_weights=tuple(c * x for x in w), confidence_threshold=c * threshold)
    assume(all(abs(confidence_score(repo_signals(r, None, base), base) - threshold) > 1e-9 for r in repos))
    assert eliminate(repos, base) == eliminate(repos, scaled)


def test_size_bounds():
    assert not within_size_bounds(repo(size_bytes=512))
    assert within_size_bounds(repo(size_bytes=1024))
    assert within_size_bounds(repo(size_bytes=50 * 1024 * 1024))
    assert not within_size_bounds(repo(size_bytes=50 * 1024 * 1024 + 1))


# --- file filter ---------------------------------------------------------------

@pytest.mark.parametrize("path,keep", [
    ("exploit.py", True), ("README.md", True), ("notes.txt", True), ("src/x.go", True),
    ("payload.bin", False), ("pom.xml", False), ("shot.png", False), ("config.yml", False),
])
def test_file_filter(path, keep):
    assert file_filter(path) is keep


def test_file_filter_overrides():
    cfg = FilterConfig(keep_extensions={".xml"}, drop_extensions={".txt"})
    assert file_filter("pom.xml", cfg=cfg)
    assert not file_filter("notes.txt", cfg=cfg)


def test_file_filter_uses_kind():
    assert not file_filter("data", "binary")
    assert file_filter("data", "doc")


# --- main-content extraction ----------------------------------------------------

PAGE = """<!DOCTYPE html><html><head><title>t</title><script>var x = 1;</script></head>
<body>
<nav><a href="/">Home</a> <a href="/about">About us</a></nav>
<div class="sidebar"><p>Buy our premium firewall today with a huge discount for all readers.</p></div>
<div id="main-content">
  <h1>Exploiting Foo</h1>
  <p>First, send a request to the upload endpoint, then wait for the callback.</p>
  <pre>import os

    os.system("id")  # keep   spacing</pre>
  <p>Done.</p>
</div>
<footer>Copyright 2024</footer>
</body></html>"""


def test_plain_text_passthrough():
    text = "Step 1: run exploit.py\n\n  indented line  \nvalue a<b and c>d"
    assert not looks_like_html(text)
    assert extract_main_content(text) == text


def test_article_kept_sidebar_dropped():
    out = extract_main_content(PAGE)
    assert "Exploiting Foo" in out and "upload endpoint" in out and "Done." in out
    for noise in ("premium firewall", "About us", "Copyright", "var x"):
        assert noise not in out


def test_pre_block_verbatim_and_in_order():
    out = extract_main_content(PAGE)
    block = 'import os\n\n    os.system("id")  # keep   spacing'
    assert block in out
    assert out.index("Exploiting Foo") < out.index("upload endpoint") < out.index(block) < out.index("Done.")


def test_entities_decoded_inside_pre():
    out = extract_main_content("<article><p>x</p><pre>if a &lt; b &amp;&amp; c:</pre></article>")
    assert "if a < b && c:" in out


def test_fixture_blog_page():
    rec = next(r for r in load_corpus(CORPUS_DIR) if r.cve_id == "CVE-2024-31004")
    art = next(a for a in rec.exploits if a.artifact_id == "dh-traversal")
    blog = next(d for d in art.docs if "blog" in d.url)
    out = extract_main_content(blog.text)
    assert "curl -s 'http://target:8080/download?file=../../../../../etc/passwd'" in out
    assert "Sponsored" not in out and "firewall" not in out and "RSS" not in out and "tracking" not in out


def test_broken_html_never_raises():
    for text in ("<div><p>unclosed", "<<<>>>", "<pre>", "</div></div>text", "<p>" * 500):
        assert isinstance(extract_main_content(text), str)
