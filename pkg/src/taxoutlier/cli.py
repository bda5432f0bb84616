"""Command line front end: generate, evaluate, stats, prune-report.

Settings come from an optional JSON config file (flat keys matching
PipelineConfig fields) with command line flags taking precedence; the
TAXOUTLIER_THREADS environment variable sits between the two for the
thread count. Dataset files stay pure data; run metadata (tool version,
config digest, seed) goes into sidecar JSON reports.

Exit codes: 0 success, 1 input error, 2 empty result.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from collections import Counter
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

from . import __version__, evaluate, formats, generator, graph, refine

EXIT_OK = 0
EXIT_INPUT_ERROR = 1
EXIT_EMPTY = 2

THREADS_ENV_VAR = "TAXOUTLIER_THREADS"


@dataclass(slots=True)
class PipelineConfig:
    """Everything a pipeline run needs, mergeable from file and flags."""

    dump: str | None = None
    dump_format: str = "simple"
    anchors: str | None = None
    output: str | None = None
    language: str = "en"
    seed: int = 0
    threads: int = 1
    # generation
    mu: int = 7
    cluster_size: int = 8
    cluster_min: int = 7
    per_tier_outliers: int = 2
    min_outlier_sitelinks: int = 10
    min_instances: int = 2
    o3_retry_budget: int = 10_000
    o2_exclude_parent_overlap: bool = False
    # pruning
    prune_root: str | None = graph.DEFAULT_ROOT
    prune_depth: int = graph.DEFAULT_PRUNE_DEPTH
    stop_classes: tuple[str, ...] = ()
    disambiguation_class: str = formats.DEFAULT_DISAMBIGUATION_CLASS
    # filter profile overrides (None means use the language preset)
    stop_prefixes: tuple[str, ...] | None = None
    stop_suffixes: tuple[str, ...] | None = None
    # embedding lookup
    phrase_mode: str = "greedy"
    tokenizer: str = "whitespace"
    case_fold: bool = False

    def digest(self) -> str:
        """Stable hash of the effective configuration."""
        payload = json.dumps(asdict(self), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()

    def generator_config(self) -> generator.GeneratorConfig:
        return generator.GeneratorConfig(
            language=self.language,
            mu=self.mu,
            cluster_size=self.cluster_size,
            cluster_min=self.cluster_min,
            per_tier_outliers=self.per_tier_outliers,
            min_outlier_sitelinks=self.min_outlier_sitelinks,
            min_instances=self.min_instances,
            rng_seed=self.seed,
            o3_retry_budget=self.o3_retry_budget,
            o2_exclude_parent_overlap=self.o2_exclude_parent_overlap,
        )

    def lookup_policy(self) -> evaluate.LookupPolicy:
        return evaluate.LookupPolicy(
            phrase_mode=self.phrase_mode,  # type: ignore[arg-type]
            tokenizer=self.tokenizer,  # type: ignore[arg-type]
            case_fold=self.case_fold,
        )

    def language_profile(self) -> refine.LanguageProfile:
        overrides = {}
        if self.stop_prefixes is not None:
            overrides["stop_prefixes"] = tuple(self.stop_prefixes)
        if self.stop_suffixes is not None:
            overrides["stop_suffixes"] = tuple(self.stop_suffixes)
        return refine.profile_for_language(self.language, **overrides)


class CliError(Exception):
    """User-facing input problem; maps to exit code 1."""


def load_config(path: str | None) -> PipelineConfig:
    cfg = PipelineConfig()
    if path is None:
        return cfg
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as e:
        raise CliError(f"cannot read config {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise CliError(f"config {path} is not valid JSON: {e.msg} (line {e.lineno})") from None
    if not isinstance(data, dict):
        raise CliError(f"config {path} must be a JSON object")
    known = {f.name for f in fields(PipelineConfig)}
    for key, value in data.items():
        if key not in known:
            raise CliError(f"config {path}: unknown key {key!r}")
        if isinstance(value, list):
            value = tuple(value)
        setattr(cfg, key, value)
    return cfg


def _apply_env(cfg: PipelineConfig) -> None:
    raw = os.environ.get(THREADS_ENV_VAR)
    if raw is None:
        return
    try:
        cfg.threads = int(raw)
    except ValueError:
        raise CliError(f"{THREADS_ENV_VAR} must be an integer, got {raw!r}") from None


def _apply_flags(cfg: PipelineConfig, args: argparse.Namespace, names: Sequence[str]) -> None:
    for name in names:
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)


def _require_file(path: str, what: str) -> None:
    if not Path(path).is_file():
        raise CliError(f"{what} does not exist: {path}")


def _metadata(cfg: PipelineConfig) -> dict:
    return {
        "tool": "taxoutlier",
        "version": __version__,
        "seed": cfg.seed,
        "language": cfg.language,
        "config_digest": cfg.digest(),
    }


def _print_header(cfg: PipelineConfig) -> None:
    print(f"# taxoutlier {__version__} seed={cfg.seed} config={cfg.digest()[:12]}")


ALL_VIOLATION_CODES = (
    refine.VIOLATION_DIGIT_DUPLICATES,
    refine.VIOLATION_AFFIX_OVERLAP,
    refine.VIOLATION_STOP_AFFIX,
    refine.VIOLATION_SINGLE_CHAR,
    refine.VIOLATION_TOO_FEW,
)


def _write_json(path: str, obj: dict) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(obj, f, ensure_ascii=False, indent=2, sort_keys=True)
        f.write("\n")


def _read_dump(cfg: PipelineConfig):
    if cfg.dump_format == "wikidata":
        return formats.read_wikidata_dump(cfg.dump, cfg.disambiguation_class)
    if cfg.dump_format == "simple":
        return formats.read_entity_records(cfg.dump)
    raise CliError(f"unknown dump format {cfg.dump_format!r}")


def _build_pruned_graph(cfg: PipelineConfig):
    try:
        loaded = graph.build_graph(_read_dump(cfg))
    except formats.ParseError as e:
        raise CliError(f"{cfg.dump}: {e}") from None
    pruned, stats = graph.prune_graph(
        loaded,
        root=cfg.prune_root,
        depth=cfg.prune_depth,
        stop_classes=frozenset(cfg.stop_classes),
    )
    return loaded, pruned, stats


# ---------------------------------------------------------------------------
# generate
# ---------------------------------------------------------------------------

def cmd_generate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _apply_env(cfg)
    _apply_flags(
        cfg,
        args,
        ("dump", "dump_format", "anchors", "output", "seed", "language", "mu", "threads"),
    )
    if not cfg.dump:
        raise CliError("generate needs an entity dump (--dump or config key 'dump')")
    if not cfg.output:
        raise CliError("generate needs an output path (--output or config key 'output')")
    _require_file(cfg.dump, "entity dump")
    if cfg.anchors:
        _require_file(cfg.anchors, "anchor file")

    loaded, pruned, prune_stats = _build_pruned_graph(cfg)
    if cfg.anchors:
        idx = refine.build_anchor_index(formats.read_anchor_file(cfg.anchors), cfg.language)
    else:
        idx = refine.AnchorIndex(language=cfg.language)
    gen_cfg = cfg.generator_config()
    profile = cfg.language_profile()

    dataset: list[formats.DatasetRecord] = []
    rejects: Counter[str] = Counter()
    violation_counts: Counter[str] = Counter()
    tier_counts: Counter[str] = Counter()
    considered = 0
    for _class_id, result in generator.generate_results(pruned, gen_cfg, threads=cfg.threads):
        considered += 1
        if isinstance(result, generator.Reject):
            rejects[f"generate:{result.reason}"] += 1
            continue
        refined = refine.refine_group(result, idx, pruned, profile, gen_cfg)
        if isinstance(refined, refine.Reject):
            rejects[f"refine:{refined.reason}"] += 1
            for violation in refined.violations:
                violation_counts[violation.code] += 1
            continue
        dataset.append(refined)
        for tier, _surface in refined.outliers:
            tier_counts[tier] += 1

    formats.write_dataset(
        dataset, cfg.output, min_cluster=gen_cfg.cluster_min, max_cluster=gen_cfg.cluster_size
    )
    cases = sum(tier_counts.values())
    report = {
        "metadata": _metadata(cfg),
        "classes_considered": considered,
        "groups": len(dataset),
        "test_cases": cases,
        "outliers_by_tier": {t: tier_counts.get(t, 0) for t in formats.TIERS},
        "rejects": dict(sorted(rejects.items())),
        "rejects_by_violation": {c: violation_counts.get(c, 0) for c in ALL_VIOLATION_CODES},
        "prune": asdict(prune_stats),
        "entities_loaded": len(loaded),
        "entities_after_prune": len(pruned),
        "dangling_edges": loaded.dangling_edges,
    }
    report_path = f"{cfg.output}.report.json"
    _write_json(report_path, report)

    _print_header(cfg)
    print(f"classes considered: {considered}  groups: {len(dataset)}  test cases: {cases}")
    tiers = "  ".join(f"{t}={tier_counts.get(t, 0)}" for t in formats.TIERS)
    print(f"outliers by tier: {tiers}")
    if rejects:
        print("rejects: " + "  ".join(f"{k}={v}" for k, v in sorted(rejects.items())))
    print(
        f"pruned: {prune_stats.removed_total} entities "
        f"(disambiguation={prune_stats.disambiguation}, near_root={prune_stats.near_root}, "
        f"stop_class={prune_stats.stop_class})"
    )
    print(f"wrote {cfg.output} (report: {report_path})")
    return EXIT_OK if dataset else EXIT_EMPTY


# ---------------------------------------------------------------------------
# evaluate
# ---------------------------------------------------------------------------

def _fmt(value: float | None) -> str:
    return f"{value:.2f}" if value is not None else "-"


def cmd_evaluate(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    if args.lookup is not None:
        cfg.phrase_mode = args.lookup
    if args.case_fold is not None:
        cfg.case_fold = args.case_fold
    _require_file(args.dataset, "dataset")
    for path in args.embeddings:
        _require_file(path, "embedding")
    if args.intersect and len(args.embeddings) < 2:
        raise CliError("--intersect needs at least two embeddings")

    try:
        records = formats.read_dataset(
            args.dataset, min_cluster=cfg.cluster_min, max_cluster=cfg.cluster_size
        )
    except formats.ParseError as e:
        raise CliError(f"{args.dataset}: {e}") from None
    if not records:
        raise CliError(f"dataset {args.dataset} contains no groups")
    policy = cfg.lookup_policy()
    embeddings = []
    for path in args.embeddings:
        try:
            embeddings.append(
                formats.load_embedding(path, header_mode=args.header, supports_phrases=True)
            )
        except formats.ParseError as e:
            raise CliError(f"{path}: {e}") from None

    _print_header(cfg)
    intersection = None
    if args.intersect:
        records, istats = evaluate.intersect_vocabulary(embeddings, records, policy)
        intersection = asdict(istats)
        print(
            f"intersection: kept {len(records)}/{istats.groups_total} groups, "
            f"removed {istats.cluster_entities_removed} cluster entities "
            f"({istats.pct_cluster_removed:.2f}%) and {istats.outliers_removed} outliers "
            f"({istats.pct_outliers_removed:.2f}%)"
        )
        if not records:
            print("no groups survive the vocabulary intersection", file=sys.stderr)
            return EXIT_EMPTY

    results = []
    print(f"{'embedding':<32} {'OPP':>8} {'Acc.':>8} {'skip':>5} {'%cl-OOV':>8} {'%out-OOV':>9} {'cases':>6}")
    for path, emb in zip(args.embeddings, embeddings):
        report = evaluate.evaluate_dataset(emb, records, policy)
        name = Path(path).name
        print(
            f"{name:<32} {_fmt(report.opp):>8} {_fmt(report.accuracy):>8} "
            f"{report.groups_skipped:>5} {report.pct_cluster_oov:>8.2f} "
            f"{report.pct_outlier_oov:>9.2f} {report.cases_evaluated:>6}"
        )
        results.append(
            {
                "embedding": path,
                "opp": report.opp,
                "accuracy": report.accuracy,
                "cases_evaluated": report.cases_evaluated,
                "groups_total": report.groups_total,
                "groups_skipped": report.groups_skipped,
                "pct_cluster_oov": report.pct_cluster_oov,
                "pct_outlier_oov": report.pct_outlier_oov,
            }
        )

    if args.output:
        _write_json(
            args.output,
            {
                "metadata": _metadata(cfg),
                "dataset": args.dataset,
                "intersection": intersection,
                "results": results,
            },
        )
        print(f"wrote report to {args.output}")
    if all(r["cases_evaluated"] == 0 for r in results):
        return EXIT_EMPTY
    return EXIT_OK


# ---------------------------------------------------------------------------
# stats
# ---------------------------------------------------------------------------

def cmd_stats(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _require_file(args.dataset, "dataset")
    try:
        records = formats.read_dataset(
            args.dataset, min_cluster=cfg.cluster_min, max_cluster=cfg.cluster_size
        )
    except formats.ParseError as e:
        raise CliError(f"{args.dataset}: {e}") from None
    tier_counts: Counter[str] = Counter()
    language_groups: Counter[str] = Counter()
    language_cases: Counter[str] = Counter()
    cluster_sizes: Counter[int] = Counter()
    for rec in records:
        language_groups[rec.language] += 1
        language_cases[rec.language] += len(rec.outliers)
        cluster_sizes[len(rec.cluster)] += 1
        for tier, _surface in rec.outliers:
            tier_counts[tier] += 1
    cases = sum(tier_counts.values())

    _print_header(cfg)
    print(f"groups: {len(records)}")
    print(f"test cases: {cases}")
    tiers = "  ".join(f"{t}={tier_counts.get(t, 0)}" for t in formats.TIERS)
    print(f"by tier: {tiers}")
    for lang in sorted(language_groups):
        print(f"language {lang}: groups={language_groups[lang]} cases={language_cases[lang]}")
    sizes = "  ".join(f"{k}={cluster_sizes[k]}" for k in sorted(cluster_sizes))
    print(f"cluster sizes: {sizes if sizes else '(none)'}")
    if args.output:
        _write_json(
            args.output,
            {
                "metadata": _metadata(cfg),
                "dataset": args.dataset,
                "groups": len(records),
                "test_cases": cases,
                "by_tier": {t: tier_counts.get(t, 0) for t in formats.TIERS},
                "by_language": {
                    lang: {"groups": language_groups[lang], "cases": language_cases[lang]}
                    for lang in sorted(language_groups)
                },
                "cluster_sizes": {str(k): cluster_sizes[k] for k in sorted(cluster_sizes)},
            },
        )
        print(f"wrote report to {args.output}")
    return EXIT_OK if records else EXIT_EMPTY


# ---------------------------------------------------------------------------
# prune-report
# ---------------------------------------------------------------------------

def cmd_prune_report(args: argparse.Namespace) -> int:
    cfg = load_config(args.config)
    _apply_flags(cfg, args, ("dump", "dump_format"))
    if args.no_root:
        cfg.prune_root = None
    elif args.root is not None:
        cfg.prune_root = args.root
    if args.depth is not None:
        cfg.prune_depth = args.depth
    if not cfg.dump:
        raise CliError("prune-report needs an entity dump (--dump or config key 'dump')")
    _require_file(cfg.dump, "entity dump")

    loaded, pruned, stats = _build_pruned_graph(cfg)
    _print_header(cfg)
    print(f"entities: {len(loaded)} loaded, {len(pruned)} kept, {stats.removed_total} removed")
    print(
        f"removed by rule: disambiguation={stats.disambiguation} "
        f"near_root={stats.near_root} stop_class={stats.stop_class}"
    )
    print(f"edges removed: {stats.edges_removed}  dangling edges dropped at load: {loaded.dangling_edges}")
    if args.output:
        _write_json(
            args.output,
            {
                "metadata": _metadata(cfg),
                "entities_loaded": len(loaded),
                "entities_after_prune": len(pruned),
                "prune": asdict(stats),
                "dangling_edges": loaded.dangling_edges,
            },
        )
        print(f"wrote report to {args.output}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taxoutlier",
        description="Build and evaluate taxonomy-derived outlier detection datasets.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    gen = sub.add_parser("generate", help="build a dataset from an entity dump")
    gen.add_argument("--config", help="JSON config file")
    gen.add_argument("--dump", help="entity dump path")
    gen.add_argument("--dump-format", choices=("simple", "wikidata"), dest="dump_format")
    gen.add_argument("--anchors", help="anchor dictionary (anchor<TAB>title<TAB>count)")
    gen.add_argument("-o", "--output", help="dataset output path")
    gen.add_argument("--seed", type=int, help="generation RNG seed")
    gen.add_argument("--language", help="language code for labels and surfaces")
    gen.add_argument("--mu", type=int, help="minimum taxonomy distance for far-tier outliers")
    gen.add_argument("--threads", type=int, help="worker threads (env TAXOUTLIER_THREADS)")
    gen.set_defaults(func=cmd_generate)

    ev = sub.add_parser("evaluate", help="score embeddings on a dataset")
    ev.add_argument("dataset", help="dataset file to evaluate on")
    ev.add_argument("embeddings", nargs="+", help="text-format embedding files")
    ev.add_argument("--config", help="JSON config file")
    ev.add_argument(
        "--intersect",
        action="store_true",
        help="restrict the dataset to the shared vocabulary of all embeddings",
    )
    ev.add_argument(
        "--header",
        choices=("auto", "present", "absent"),
        default="auto",
        help="embedding header handling",
    )
    ev.add_argument("--lookup", choices=("greedy", "token-average"), help="phrase lookup mode")
    ev.add_argument("--case-fold", action="store_true", default=None, dest="case_fold")
    ev.add_argument("-o", "--output", help="write a JSON report here")
    ev.set_defaults(func=cmd_evaluate)

    st = sub.add_parser("stats", help="summarize a dataset file")
    st.add_argument("dataset")
    st.add_argument("--config", help="JSON config file")
    st.add_argument("-o", "--output", help="write a JSON report here")
    st.set_defaults(func=cmd_stats)

    pr = sub.add_parser("prune-report", help="show what pruning removes from a dump")
    pr.add_argument("--config", help="JSON config file")
    pr.add_argument("--dump", help="entity dump path")
    pr.add_argument("--dump-format", choices=("simple", "wikidata"), dest="dump_format")
    pr.add_argument("--root", help="near-root prune center")
    pr.add_argument("--no-root", action="store_true", help="disable the near-root rule")
    pr.add_argument("--depth", type=int, help="near-root prune radius")
    pr.add_argument("-o", "--output", help="write a JSON report here")
    pr.set_defaults(func=cmd_prune_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except formats.ParseError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except graph.GraphError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT_ERROR


if __name__ == "__main__":
    sys.exit(main())
