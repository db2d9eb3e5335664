"""Compare the ranking with manual execution labels and the severity with
EPSS and CVSS.

Top-k success asks whether a working exploit is among the first k
recommendations.  The agreement table is a Bland-Altman style summary of
tool minus baseline, with correlations alongside.

    python3 demos/03_evaluate.py
"""

from aeas.analyzer.backends import RuleBackend
from aeas.cli import format_agreement_table, format_ranking_table
from aeas.corpus import load_labels
from aeas.evalkit import bland_altman_plot_data, load_baseline_csv
from aeas.fixtures import CVSS_PATH, EPSS_PATH, LABELS_PATH, load_fixture_config, load_fixture_corpus
from aeas.pipeline import evaluate, run_all

corpus = load_fixture_corpus()
manifest, _, reports = run_all(corpus, load_fixture_config(), backend=RuleBackend())
labels = load_labels(LABELS_PATH, corpus)
baselines = {"epss": load_baseline_csv(EPSS_PATH), "cvss": load_baseline_csv(CVSS_PATH, scale=10)}

metrics = evaluate(reports, manifest, labels, baselines, ks=(1, 2, 3))
print(format_ranking_table(metrics))
print()
print(format_agreement_table(metrics))

# points for an external Bland-Altman plot
severity = {r.cve_id: r.severity for r in reports}
cves = sorted(severity)
plot = bland_altman_plot_data([baselines["cvss"][c] for c in cves], [severity[c] for c in cves])
print("\nCVSS vs tool, (mean, difference) per CVE")
for cve, x, y in zip(cves, plot["x"], plot["y"]):
    print(f"  {cve}  {x:.3f}  {y:+.3f}")
print(f"  limits [{plot['lower_limit']:.3f}, {plot['upper_limit']:.3f}]")
