"""Command-line entry point.

Exit codes: 0 success, 1 data error, 2 configuration/backend error,
3 run completed but some queries fell back to plain BM25.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .config import Settings
from .corpus import Query, load_corpus, load_dataset, load_queries, load_qrels
from .data import fixture_path
from .errors import BackendError, ConfigError, DataError, OntoQEError
from .evalkit import ablation_report, evaluate
from .index import InvertedIndex, build_index, search
from .llm import HttpChatBackend, LLMGate, MockBackend, ReplayBackend, extract_terms, extraction_request
from .ontology import SnapshotBackend, UmlsRestBackend, build_snapshot, write_snapshot
from .pipeline import MODES, Backends, PipelineConfig, build_context, expand, perturb_queries, run_batch
from .runs import read_run, write_run

log = logging.getLogger("ontoqe")

EXIT_OK, EXIT_DATA, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2, 3
LLM_BACKENDS = ("http", "mock:canned", "mock:identity", "mock:replay")


# -- settings and backend construction ---------------------------------------


def _settings(args) -> Settings:
    overrides = {
        "jobs": args.jobs,
        "bm25.k1": args.k1,
        "bm25.b": args.b,
        "bm25.stem": True if args.stem else None,
        "llm.backend": args.llm,
        "llm.model": args.model,
        "llm.cache_dir": args.llm_cache,
        "llm.temperature": args.temperature,
        "ontology.backend": args.ontology,
        "ontology.snapshot": args.snapshot,
        "ontology.cache_dir": args.ontology_cache,
        "ontology.refresh": True if args.refresh else None,
        "ontology.edge_cap": args.edge_cap,
    }
    for name, key in (("mode", "pipeline.mode"), ("alpha", "pipeline.alpha"), ("depth", "pipeline.depth"),
                      ("k", "pipeline.k")):
        overrides[key] = getattr(args, name, None)
    if getattr(args, "cot", False):
        overrides["pipeline.cot"] = True
    return Settings(args.config, overrides=overrides)


def _dataset_dir(value: str) -> Path:
    return fixture_path() if value == "fixture" else Path(value)


def make_ontology(settings: Settings, dataset_dir: Path | None = None):
    kind = settings["ontology.backend"]
    if kind == "snapshot":
        path = settings["ontology.snapshot"]
        if path is None and dataset_dir is not None and (dataset_dir / "snapshot.jsonl").exists():
            path = dataset_dir / "snapshot.jsonl"
        if path is None:
            raise ConfigError("ontology backend 'snapshot' needs --snapshot PATH")
        if not Path(path).exists():
            raise ConfigError(f"snapshot file not found: {path}")
        return SnapshotBackend.load(path)
    if kind == "umls":
        if not settings["ontology.api_key"]:
            raise ConfigError("ontology backend 'umls' needs UMLS_API_KEY")
        return UmlsRestBackend(settings["ontology.api_key"], cache_dir=settings["ontology.cache_dir"] or None,
                               refresh=settings["ontology.refresh"],
                               max_in_flight=settings["ontology.max_in_flight"])
    raise ConfigError(f"unknown ontology backend {kind!r}")


def make_llm(settings: Settings, lexicon=()) -> LLMGate:
    kind = settings["llm.backend"]
    cache_dir = settings["llm.cache_dir"] or None
    if kind == "http":
        if not settings["llm.api_base"]:
            raise ConfigError("LLM backend 'http' needs LLM_API_BASE")
        backend = HttpChatBackend(settings["llm.api_base"], settings["llm.api_key"],
                                  max_in_flight=settings["llm.max_in_flight"])
    elif kind in ("mock:canned", "mock:identity"):
        backend = MockBackend(kind.split(":")[1], lexicon)
    elif kind == "mock:replay":
        if cache_dir is None:
            raise ConfigError("mock:replay needs an LLM cache directory")
        backend = ReplayBackend()
    else:
        raise ConfigError(f"unknown LLM backend {kind!r}; choose from {', '.join(LLM_BACKENDS)}")
    return LLMGate(backend, settings["llm.model"], cache_dir,
                   generation_temperature=float(settings["llm.temperature"]))


def _lexicon(ontology) -> list[str]:
    if isinstance(ontology, SnapshotBackend):
        return [s for rec in ontology.records() for s in [rec["name"], *rec.get("aliases", ())]]
    return []


def _pipeline_config(settings: Settings) -> PipelineConfig:
    alpha = settings["pipeline.alpha"]
    return PipelineConfig(
        mode=settings["pipeline.mode"],
        alpha=int(alpha) if alpha is not None else None,
        cot=bool(settings["pipeline.cot"]),
        edge_cap=int(settings["ontology.edge_cap"]),
        k1=float(settings["bm25.k1"]),
        b=float(settings["bm25.b"]),
        depth=int(settings["pipeline.depth"]),
        jobs=int(settings["jobs"]),
    )


def _backends(settings: Settings, mode: str, dataset_dir: Path | None = None) -> Backends:
    if mode == "plain_bm25":
        return Backends()
    ontology = make_ontology(settings, dataset_dir)
    return Backends(make_llm(settings, _lexicon(ontology)), ontology)


def _load_or_build_index(args, settings: Settings, corpus_dir: Path) -> InvertedIndex:
    if getattr(args, "index", None):
        return InvertedIndex.load(args.index)
    return build_index(load_corpus(corpus_dir / "corpus.jsonl"), k1=float(settings["bm25.k1"]),
                       b=float(settings["bm25.b"]), stem=bool(settings["bm25.stem"]),
                       jobs=int(settings["jobs"]))


# -- commands -----------------------------------------------------------------


def cmd_index_build(args, settings: Settings) -> int:
    corpus_path = Path(args.corpus)
    if corpus_path.suffix != ".jsonl":
        corpus_path = corpus_path / "corpus.jsonl"
    if not corpus_path.exists():
        print(f"error: corpus file not found: {corpus_path}", file=sys.stderr)
        return EXIT_DATA
    index = build_index(load_corpus(corpus_path), k1=float(settings["bm25.k1"]), b=float(settings["bm25.b"]),
                        stem=bool(settings["bm25.stem"]), jobs=int(settings["jobs"]))
    index.save(args.out)
    print(f"{index.doc_count} documents indexed")
    print(f"vocabulary size: {index.vocab_size}")
    print(f"average document length: {index.avg_doc_len:.3f}")
    print(f"checksum: {index.checksum()}")
    return EXIT_OK


def cmd_index_search(args, settings: Settings) -> int:
    index = InvertedIndex.load(args.index)
    if args.k1 is not None or args.b is not None:
        index = index.with_params(float(settings["bm25.k1"]), float(settings["bm25.b"]))
    for hit in search(index, args.query, args.k):
        print(f"{hit.rank}\t{hit.doc_id}\t{hit.score:.6f}")
    return EXIT_OK


def cmd_snapshot(args, settings: Settings) -> int:
    backend = make_ontology(settings)
    if args.terms:
        terms = [t.strip() for t in Path(args.terms).read_text(encoding="utf-8").splitlines() if t.strip()]
    else:
        gate = make_llm(settings, _lexicon(backend))
        terms = [t for q in load_queries(args.queries) for t in extract_terms(q.text, gate)]
    records = build_snapshot(terms, backend, max_edges=int(settings["ontology.edge_cap"]))
    write_snapshot(records, args.out)
    print(f"{len(records)} concepts from {len(terms)} terms written to {args.out}")
    return EXIT_OK


def cmd_context_dump(args, settings: Settings) -> int:
    ontology = make_ontology(settings)
    if args.terms is not None:
        terms = [t.strip() for t in args.terms.split(",") if t.strip()]
    else:
        terms = extract_terms(args.query, make_llm(settings, _lexicon(ontology)))
    cuis, ctx = build_context(terms, ontology, edge_cap=int(settings["ontology.edge_cap"]))
    print(f"Terms: {terms}")
    print(f"CUIs: {list(cuis)}")
    print("Definitions:")
    print(ctx.definitions_text)
    print("Relationships:")
    print(ctx.relations_text)
    return EXIT_OK


def cmd_expand(args, settings: Settings) -> int:
    config = _pipeline_config(settings)
    backends = _backends(settings, config.mode)
    expanded = expand(Query("cli", args.query), config, backends)
    if args.json:
        record = asdict(expanded)
        print(json.dumps(record, indent=2, ensure_ascii=False))
    else:
        print(expanded.composed_text)
        if expanded.fallback:
            print(f"(fell back to the raw query: {expanded.fallback})", file=sys.stderr)
    return EXIT_OK


def _replay_preflight(queries, gate: LLMGate) -> list[str]:
    return [q.query_id for q in queries if not gate.is_cached(extraction_request(q.text, gate))]


def cmd_run(args, settings: Settings) -> int:
    dataset_dir = _dataset_dir(args.dataset)
    if not (dataset_dir / "corpus.jsonl").exists():
        print(f"error: corpus file not found: {dataset_dir / 'corpus.jsonl'}", file=sys.stderr)
        return EXIT_DATA
    config = _pipeline_config(settings)
    backends = _backends(settings, config.mode, dataset_dir)
    queries = load_queries(args.queries) if args.queries else load_dataset(dataset_dir).queries
    if backends.llm is not None and settings["llm.backend"] == "mock:replay":
        missing = _replay_preflight(queries, backends.llm)
        if missing:
            print(f"error: replay cache {settings['llm.cache_dir']} is missing term-extraction fixtures "
                  f"for {len(missing)} queries: {', '.join(missing)}", file=sys.stderr)
            return EXIT_CONFIG
    index = _load_or_build_index(args, settings, dataset_dir)
    batch = run_batch(queries, index, config, backends)
    digest = write_run(batch.run, args.out)
    print(f"wrote {len(batch.run)} queries to {args.out}")
    print(f"sha256: {digest}")
    qrels_path = args.qrels
    if qrels_path is None and args.evaluate:
        qrels_path = dataset_dir / "qrels" / "test.tsv"
    if qrels_path is not None:
        report = evaluate(batch.run, load_qrels(qrels_path), k=int(settings["pipeline.k"]))
        print(report.format_text())
    if batch.failures:
        for e in batch.failures:
            print(f"warning: {e.original.query_id} fell back: {e.fallback}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


def cmd_perturb(args, settings: Settings) -> int:
    queries = load_queries(args.queries)
    gate = make_llm(settings)
    paraphrased, failed = perturb_queries(queries, gate, strict=args.strict)
    with open(args.out, "w", encoding="utf-8") as fh:
        for orig, para in zip(queries, paraphrased):
            fh.write(json.dumps({"_id": para.query_id, "text": para.text, "original": orig.text},
                                ensure_ascii=False) + "\n")
    n = len(queries)
    print(f"{n} queries, {n - len(failed)} paraphrased, {len(failed)} passed through")
    if n:
        mean_orig = sum(len(q.text.split()) for q in queries) / n
        mean_para = sum(len(q.text.split()) for q in paraphrased) / n
        print(f"mean length: original {mean_orig:.3f} tokens, paraphrased {mean_para:.3f} tokens")
    return EXIT_PARTIAL if failed else EXIT_OK


def cmd_eval(args, settings: Settings) -> int:
    report = evaluate(read_run(args.run), load_qrels(args.qrels), k=args.k or int(settings["pipeline.k"]),
                      exponential=args.exp_gain)
    print(json.dumps(report.to_dict(), indent=2) if args.format == "json" else report.format_text())
    return EXIT_OK


def cmd_ablate(args, settings: Settings) -> int:
    dataset_dir = _dataset_dir(args.dataset)
    dataset = load_dataset(dataset_dir)
    if dataset.qrels is None:
        raise DataError(f"no qrels under {dataset_dir / 'qrels'}")
    config = _pipeline_config(settings)
    backends = _backends(settings, "full", dataset_dir)
    index = _load_or_build_index(args, settings, dataset_dir)
    table = ablation_report(dataset, index, backends, config, k=int(settings["pipeline.k"]),
                            exponential=args.exp_gain)
    print(table.to_json() if args.format == "json" else table.format_text())
    return EXIT_OK


def cmd_config_show(args, settings: Settings) -> int:
    print(settings.show())
    return EXIT_OK


# -- parser -------------------------------------------------------------------


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("global options")
    g.add_argument("--config", help="config file (TOML or JSON); default ./bmq.toml if present")
    g.add_argument("--jobs", type=int, help="worker cap for indexing and batch runs")
    g.add_argument("--llm", choices=LLM_BACKENDS, help="LLM backend")
    g.add_argument("--model", help="LLM model id")
    g.add_argument("--llm-cache", help="LLM response cache directory")
    g.add_argument("--temperature", type=float, help="generation temperature")
    g.add_argument("--ontology", choices=("snapshot", "umls"), help="ontology backend")
    g.add_argument("--snapshot", help="ontology snapshot JSON-lines file")
    g.add_argument("--ontology-cache", help="UMLS response cache directory")
    g.add_argument("--refresh", action="store_true", help="ignore cached UMLS responses")
    g.add_argument("--edge-cap", type=int, help="max relations fetched per concept")
    g.add_argument("--k1", type=float, help="BM25 k1")
    g.add_argument("--b", type=float, help="BM25 b")
    g.add_argument("--stem", action="store_true", help="Porter-stem tokens when indexing")
    g.add_argument("-v", "--verbose", action="store_true")
    return p


def _pipeline_opts() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    g = p.add_argument_group("pipeline options")
    g.add_argument("--mode", choices=MODES)
    g.add_argument("--alpha", type=int, help="copies of the original query (default 5, 50 for no_llm)")
    g.add_argument("--cot", action="store_true", help="append the rationale suffix to the generation prompt")
    g.add_argument("--depth", type=int, help="documents retrieved per query (default 1000)")
    g.add_argument("--k", type=int, help="metric cut-off (default 10)")
    return p


def build_parser() -> argparse.ArgumentParser:
    common, popts = _common(), _pipeline_opts()
    parser = argparse.ArgumentParser(prog="ontoqe", description="Ontology-guided query expansion over BM25.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    index = sub.add_parser("index", help="build or query a BM25 index")
    isub = index.add_subparsers(dest="index_command", required=True, metavar="ACTION")
    p = isub.add_parser("build", parents=[common], help="index a BEIR corpus")
    p.add_argument("--corpus", required=True, help="dataset directory or corpus.jsonl")
    p.add_argument("--out", required=True, help="index snapshot path (.json or .json.gz)")
    p.set_defaults(func=cmd_index_build)
    p = isub.add_parser("search", parents=[common], help="search an index snapshot")
    p.add_argument("--index", required=True)
    p.add_argument("--query", required=True)
    p.add_argument("--k", type=int, default=10)
    p.set_defaults(func=cmd_index_search)

    snapshot_args = dict(parents=[common], help="materialize an ontology snapshot for a term list")

    def _snapshot_opts(p):
        src = p.add_mutually_exclusive_group(required=True)
        src.add_argument("--terms", help="file with one term per line")
        src.add_argument("--queries", help="queries.jsonl; terms are extracted with the LLM")
        p.add_argument("--out", required=True)
        p.set_defaults(func=cmd_snapshot)

    _snapshot_opts(sub.add_parser("snapshot", **snapshot_args))
    onto = sub.add_parser("ontology", help="ontology utilities")
    osub = onto.add_subparsers(dest="ontology_command", required=True, metavar="ACTION")
    _snapshot_opts(osub.add_parser("snapshot", **snapshot_args))

    ctx = sub.add_parser("context", help="inspect serialized ontology context")
    csub = ctx.add_subparsers(dest="context_command", required=True, metavar="ACTION")
    p = csub.add_parser("dump", parents=[common], help="print definitions and relations for a query")
    p.add_argument("--query", required=True)
    p.add_argument("--terms", help="comma-separated terms (skips LLM extraction)")
    p.set_defaults(func=cmd_context_dump)

    p = sub.add_parser("expand", parents=[common, popts], help="expand a single query")
    p.add_argument("--query", required=True)
    p.add_argument("--json", action="store_true", help="print the full expansion record")
    p.set_defaults(func=cmd_expand)

    def _run_opts(p):
        p.add_argument("--dataset", required=True, help="BEIR dataset directory, or 'fixture'")
        p.add_argument("--queries", help="alternative queries.jsonl (e.g. paraphrased)")
        p.add_argument("--index", help="prebuilt index snapshot")
        p.add_argument("--out", required=True, help="TREC run file to write")
        p.add_argument("--qrels", help="evaluate against this qrels file")
        p.add_argument("--evaluate", action="store_true", help="evaluate against <dataset>/qrels/test.tsv")
        p.set_defaults(func=cmd_run)

    run_args = dict(parents=[common, popts], help="batch retrieval over a dataset")
    _run_opts(sub.add_parser("run", **run_args))
    pipe = sub.add_parser("pipeline", help="pipeline commands")
    psub = pipe.add_subparsers(dest="pipeline_command", required=True, metavar="ACTION")
    _run_opts(psub.add_parser("run", **run_args))

    p = sub.add_parser("perturb", parents=[common], help="paraphrase a query set")
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True, help="output queries-p.jsonl")
    p.add_argument("--strict", action="store_true", help="fail instead of passing queries through")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("eval", parents=[common], help="evaluate a run file")
    p.add_argument("--run", required=True)
    p.add_argument("--qrels", required=True)
    p.add_argument("--k", type=int)
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--exp-gain", action="store_true", help="exponential NDCG gains (2^rel - 1)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("ablate", parents=[common, popts], help="run all ablation modes")
    p.add_argument("--dataset", required=True, help="BEIR dataset directory, or 'fixture'")
    p.add_argument("--index", help="prebuilt index snapshot")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.add_argument("--exp-gain", action="store_true")
    p.set_defaults(func=cmd_ablate)

    cfg = sub.add_parser("config", help="configuration")
    fsub = cfg.add_subparsers(dest="config_command", required=True, metavar="ACTION")
    p = fsub.add_parser("show", parents=[common], help="print effective settings and their sources")
    p.set_defaults(func=cmd_config_show)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        settings = _settings(args)
        return args.func(args, settings)
    except (ConfigError, BackendError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc.filename}", file=sys.stderr)
        return EXIT_DATA
    except OntoQEError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
