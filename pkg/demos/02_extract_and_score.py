"""Run the whole pipeline offline and look at one exploit closely.

The rules backend answers each sub-feature question from pattern tables,
so no model or network is needed.  Swapping in the live backend with the
bundled cache (see the README) gives the same numbers.

    python3 demos/02_extract_and_score.py [ARTIFACT_ID]
"""

import sys

from aeas.analyzer.backends import RuleBackend
from aeas.analyzer.features import SubFeature
from aeas.fixtures import load_fixture_config, load_fixture_corpus
from aeas.pipeline import run_all

focus = sys.argv[1] if len(sys.argv) > 1 else "netgate-bypass"
cfg = load_fixture_config()
manifest, findings, reports = run_all(load_fixture_corpus(), cfg, backend=RuleBackend())

print("Severity by CVE (max actionability over its exploits)")
for rep in sorted(reports, key=lambda r: (-r.severity, r.cve_id)):
    ranking = ", ".join(f"{s.artifact_id} {s.actionability:.3f}" for s in rep.exploits) or "no exploits"
    print(f"  {rep.cve_id}  {rep.severity:.3f}   {ranking}")

key = next((k for k in findings if k[1] == focus), None)
if key is None:
    sys.exit(f"{focus} was not kept by the filter stage")
fv = findings[key]
score = next(s for r in reports for s in r.exploits if s.artifact_id == focus)

print(f"\nSub-feature findings for {focus}")
for sf in SubFeature:
    f = fv[sf]
    value = getattr(f.conclusion, "value", f.conclusion)
    where = "; ".join(e.cite() for e in f.evidence[:2])
    print(f"  {sf.value:<19} {str(value):<6} conf {f.confidence}  {where}")

agg = score.features
print(f"\nAggregated: {agg.attack_vector.value}, complexity {agg.complexity_level.value} "
      f"({agg.complexity_score:.3f}), impact {agg.primary_impact.value}{' + DoS' if agg.dos else ''}, "
      f"maturity {agg.maturity.value}, popularity {agg.popularity_level.value} ({agg.popularity_score:.2f})")
print(f"Actionability {score.actionability:.3f}")
