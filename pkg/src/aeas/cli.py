"""Command-line entry point.

    aeas filter  --corpus DIR --out RUN     -> RUN/manifest.json
    aeas extract --corpus DIR --out RUN     -> RUN/findings/
    aeas score   --corpus DIR --out RUN     -> RUN/scores.json, RUN/report.md
    aeas rank    --out RUN [--top-k N]      prints the per-CVE ranking
    aeas eval    --out RUN --labels FILE [--baseline NAME=PATH[@SCALE]] -> RUN/metrics.json
    aeas report  --out RUN                  re-renders RUN/report.md from scores.json

Flags override values from ``--config``.  Exit status is 0 on success, 1 on
errors and 2 on bad usage.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional

from .config import RunConfig, load_config
from .connectors import ConnectorError
from .corpus import CorpusError, load_corpus, load_labels
from .evalkit import load_baseline_csv
from .pipeline import (
    FINDINGS_DIR,
    MANIFEST_FILE,
    METRICS_FILE,
    REPORT_FILE,
    SCORES_FILE,
    StageError,
    evaluate,
    extract_corpus,
    filter_corpus,
    make_run_backend,
    read_findings,
    read_manifest,
    score_corpus,
    write_findings,
    write_json,
    write_reports,
)
from .scoring import render_markdown, reports_from_json

logger = logging.getLogger("aeas")

# baselines whose CSV scores are on a 0-10 scale unless a scale is given
_TEN_POINT = ("cvss",)


class CliError(Exception):
    pass


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    cfg = cfg.with_overrides(
        corpus_root=Path(args.corpus) if getattr(args, "corpus", None) else None,
        cache_dir=Path(args.cache_dir) if getattr(args, "cache_dir", None) else None,
        backend=getattr(args, "backend", None),
        concurrency_cap=getattr(args, "concurrency", None),
    )
    if getattr(args, "offline", False):
        cfg = replace(cfg, connectors=replace(cfg.connectors, offline=True))
    return cfg


def _corpus(cfg: RunConfig):
    if cfg.corpus_root is None:
        raise CliError("no corpus given; pass --corpus or set corpus_root in the config")
    if not Path(cfg.corpus_root).is_dir():
        raise CliError(f"corpus directory {cfg.corpus_root} not found or unreadable")
    return load_corpus(cfg.corpus_root)


def _read_scores(out: Path):
    path = out / SCORES_FILE
    if not path.exists():
        raise CliError(f"{path} not found; run `aeas score` first")
    return reports_from_json(path.read_text(encoding="utf-8"))


def cmd_filter(args) -> int:
    cfg = _config(args)
    corpus = _corpus(cfg)
    manifest = filter_corpus(corpus, cfg.filter, cfg.reference_time())
    write_json(args.out / MANIFEST_FILE, manifest)
    kept = sum(len(v["kept"]) for v in manifest["vulnerabilities"])
    dropped = sum(len(v["dropped"]) for v in manifest["vulnerabilities"])
    print(f"{len(corpus)} CVEs: kept {kept} repositories, dropped {dropped} -> {args.out / MANIFEST_FILE}")
    return 0


def cmd_extract(args) -> int:
    cfg = _config(args)
    corpus = _corpus(cfg)
    manifest = read_manifest(args.out)
    backend = make_run_backend(cfg)
    findings = extract_corpus(corpus, manifest, backend, cfg.filter, cfg.analyzer, cfg.concurrency_cap)
    write_findings(args.out, findings)
    print(f"wrote findings for {len(findings)} artifacts -> {args.out / FINDINGS_DIR}")
    return 0


def cmd_score(args) -> int:
    cfg = _config(args)
    corpus = _corpus(cfg)
    manifest = read_manifest(args.out)
    findings = read_findings(args.out, corpus, manifest)
    reports = score_corpus(corpus, manifest, findings, cfg.weights)
    write_reports(args.out, reports)
    print(f"scored {len(reports)} CVEs -> {args.out / SCORES_FILE}, {args.out / REPORT_FILE}")
    return 0


def cmd_rank(args) -> int:
    reports = _read_scores(args.out)
    for rep in sorted(reports, key=lambda r: (-r.severity, r.cve_id)):
        print(f"{rep.cve_id}  severity {rep.severity:.4f}")
        for i, s in enumerate(rep.exploits[: args.top_k], 1):
            print(f"  {i}. {s.artifact_id}  {s.actionability:.4f}  {s.features.maturity.value}")
    return 0


def cmd_report(args) -> int:
    reports = _read_scores(args.out)
    text = render_markdown(reports)
    (args.out / REPORT_FILE).write_text(text, encoding="utf-8")
    sys.stdout.write(text)
    return 0


def parse_baseline(spec: str) -> tuple[str, Path, float]:
    """``NAME=PATH`` or ``NAME=PATH@SCALE``."""
    name, sep, rest = spec.partition("=")
    if not sep or not name or not rest:
        raise CliError(f"bad --baseline {spec!r}; expected NAME=PATH[@SCALE]")
    path, at, scale = rest.rpartition("@") if "@" in rest else (rest, "", "")
    if at:
        try:
            factor = float(scale)
        except ValueError:
            raise CliError(f"bad scale in --baseline {spec!r}") from None
    else:
        factor = 10.0 if name.lower().startswith(_TEN_POINT) else 1.0
    if factor <= 0:
        raise CliError(f"scale must be positive in --baseline {spec!r}")
    return name, Path(path), factor


def _fmt(x) -> str:
    return "-" if x is None else f"{x:.4f}"


def format_ranking_table(metrics: dict) -> str:
    r = metrics["ranking"]
    lines = [f"Ranking ({r['n_cases']} CVEs, {r['n_with_functional']} with a functional exploit)",
             f"{'k':>3}  {'top-k success':>13}  {'random':>8}  {'precision@k':>11}  {'recall@k':>9}"]
    for k, row in r["by_k"].items():
        lines.append(f"{k:>3}  {_fmt(row['top_k_success']):>13}  {_fmt(row['random_select']):>8}  "
                     f"{_fmt(row['precision_at_k']):>11}  {_fmt(row['recall_k_top_j']):>9}")
    return "\n".join(lines)


def format_agreement_table(metrics: dict) -> str:
    lines = ["Agreement (difference = tool - baseline)",
             f"{'baseline':<10} {'n':>3} {'mean diff':>9} {'sd':>7} {'limits':>17} {'% out':>6} "
             f"{'pearson':>8} {'spearman':>8} {'mae':>7} {'rmse':>7}"]
    for name, a in metrics["agreement"].items():
        if "mean_diff" not in a:
            lines.append(f"{name:<10} {a['n']:>3}  (fewer than two paired CVEs)")
            continue
        lim = f"[{a['limits'][0]:.3f}, {a['limits'][1]:.3f}]"
        lines.append(f"{name:<10} {a['n']:>3} {a['mean_diff']:>9.4f} {a['sd_diff']:>7.4f} {lim:>17} "
                     f"{a['pct_outside']:>6.1f} {_fmt(a['pearson']):>8} {_fmt(a['spearman']):>8} "
                     f"{a['mae']:>7.4f} {a['rmse']:>7.4f}")
    return "\n".join(lines)


def cmd_eval(args) -> int:
    reports = _read_scores(args.out)
    manifest = read_manifest(args.out)
    if args.labels is None:
        raise CliError("eval needs --labels FILE (JSONL of manual execution labels)")
    labels = load_labels(args.labels)
    baselines = {}
    for spec in args.baseline or []:
        name, path, scale = parse_baseline(spec)
        if name in baselines:
            raise CliError(f"baseline {name!r} given twice")
        baselines[name] = load_baseline_csv(path, scale)
    ks = sorted({1, 3, args.top_k}) if args.top_k else [1, 3]
    metrics = evaluate(reports, manifest, labels, baselines, ks)
    write_json(args.out / METRICS_FILE, metrics)
    print(format_ranking_table(metrics))
    if baselines:
        print()
        print(format_agreement_table(metrics))
    return 0


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run config")
    common.add_argument("--out", type=Path, default=Path("aeas-run"), help="run directory (default: aeas-run)")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings")

    corpus = argparse.ArgumentParser(add_help=False)
    corpus.add_argument("--corpus", help="corpus root directory")
    corpus.add_argument("--offline", action="store_true", help="never touch the network; cache misses fail")
    corpus.add_argument("--backend", choices=["live", "rules"], help="analyzer backend")
    corpus.add_argument("--cache-dir", help="completion cache directory")
    corpus.add_argument("--concurrency", type=_positive_int, help="max artifacts processed at once")

    parser = argparse.ArgumentParser(prog="aeas", description="Rank public exploits by actionability.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("filter", parents=[common, corpus], help="eliminate and prioritize repositories")
    sub.add_parser("extract", parents=[common, corpus], help="extract sub-feature findings")
    sub.add_parser("score", parents=[common, corpus], help="aggregate findings into scores and a report")
    p = sub.add_parser("rank", parents=[common], help="print per-CVE rankings")
    p.add_argument("--top-k", type=_positive_int, default=3)
    p = sub.add_parser("eval", parents=[common], help="ranking metrics and baseline agreement")
    p.add_argument("--labels", type=Path, help="manual labels (JSONL)")
    p.add_argument("--baseline", action="append", metavar="NAME=PATH[@SCALE]",
                   help="cve_id,score CSV; names starting with 'cvss' default to scale 10")
    p.add_argument("--top-k", type=_positive_int, help="extra k to report besides 1 and 3")
    sub.add_parser("report", parents=[common], help="re-render report.md from scores.json")
    return parser


COMMANDS = {
    "filter": cmd_filter,
    "extract": cmd_extract,
    "score": cmd_score,
    "rank": cmd_rank,
    "eval": cmd_eval,
    "report": cmd_report,
}


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (CliError, StageError, CorpusError, ConnectorError, ValueError, OSError) as exc:
        print(f"aeas {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
