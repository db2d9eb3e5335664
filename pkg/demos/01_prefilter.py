"""Repository elimination and prioritization on the bundled corpus.

Every repository gets a confidence score from its description length, open
issue count and topic labels.  Anything below the threshold is dropped, and
the survivors are ordered by a quality score that rewards stars and age and
penalizes forks.

    python3 demos/01_prefilter.py
"""

from aeas.fixtures import load_fixture_config, load_fixture_corpus
from aeas.pipeline import relevant_topics
from aeas.prefilter import confidence_score, quality_score, repo_signals, within_size_bounds

cfg = load_fixture_config()
now = cfg.reference_time()
print(f"reference time {now:%Y-%m-%d}, threshold {cfg.filter.confidence_threshold}\n")

for rec in load_fixture_corpus():
    topics = relevant_topics(rec, cfg.filter)
    print(f"{rec.cve_id}  {rec.application}")
    if not rec.exploits:
        print("  (no public repositories)\n")
        continue
    rows = []
    for art in rec.exploits:
        sig = repo_signals(art.repo, topics, cfg.filter)
        conf = confidence_score(sig, cfg.filter)
        rows.append((quality_score(art.repo, now, cfg.filter), conf, sig, art))
    # same order the filter stage uses: quality, then stars, then id
    rows.sort(key=lambda r: (-r[0], -r[3].repo.stars, r[3].repo.repo_id))
    for q, conf, sig, art in rows:
        keep = conf >= cfg.filter.confidence_threshold and within_size_bounds(art.repo, cfg.filter)
        print(f"  {'keep' if keep else 'drop'}  {art.artifact_id:<16} conf {conf:.3f} "
              f"(d={sig.d:.2f} i={sig.i:.2f} t={sig.t:.2f})  quality {q:8.2f}")
    print()
