"""Command-line driver.

Exit codes: 0 success, 2 input error, 3 completed but degenerate (training
produced a single-leaf tree).
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from dataclasses import dataclass, fields
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .evaluation import EvalReport, write_reports
from .exceptions import CefrOntoError
from .fixture import DEFAULT_SEED, generate_fixture
from .manchester import DEFAULT_IRI, emit_ontology, parse_ontology
from .rules import DefinitionSet, build_definitions, check_consistency, classify_by_rules
from .textmetrics import DEFAULT_CATALOG, Document, FeatureCatalog, extract_features
from .tree import DecisionTree, TrainConfig

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE = 0, 2, 3


class InputError(Exception):
    pass


@dataclass
class PipelineConfig:
    corpus: str | None = None
    format: str | None = None
    catalog: str | None = None
    max_depth: int = 5
    min_branch: int = 50
    min_leaf: int | None = None
    importance_threshold: float = 0.01
    split: float = 0.8
    seed: int = 0
    mode: str = "box"
    iri: str = DEFAULT_IRI
    out: str = "."
    jobs: int | None = None

    def train_config(self) -> TrainConfig:
        return TrainConfig(self.max_depth, self.min_branch, self.min_leaf, self.importance_threshold)

    def load_catalog(self) -> FeatureCatalog:
        if self.catalog is None:
            return DEFAULT_CATALOG
        return FeatureCatalog.from_json(_existing(self.catalog))


def _existing(path) -> Path:
    p = Path(path)
    if not p.exists():
        raise InputError(f"file not found: {p}")
    return p


def _resolve_config(args) -> PipelineConfig:
    values = {}
    if getattr(args, "config", None):
        try:
            values.update(json.loads(_existing(args.config).read_text(encoding="utf-8")))
        except json.JSONDecodeError as exc:
            raise InputError(f"{args.config}: invalid JSON config ({exc.msg})") from None
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(values) - known
    if unknown:
        raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}")
    for name in known:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return PipelineConfig(**values)


def _load_corpus(cfg: PipelineConfig):
    if cfg.corpus is None:
        raise InputError("--corpus is required")
    return corpus_mod.load_corpus(_existing(cfg.corpus), cfg.format)


def _out_dir(cfg: PipelineConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_definitions(args, cfg: PipelineConfig) -> DefinitionSet:
    if getattr(args, "definitions", None):
        path = _existing(args.definitions)
        text = path.read_text(encoding="utf-8")
        if path.suffix == ".omn":
            return parse_ontology(text, cfg.load_catalog())
        try:
            return DefinitionSet.from_dict(json.loads(text))
        except (json.JSONDecodeError, KeyError) as exc:
            raise InputError(f"{path}: unreadable definitions ({exc})") from None
    if getattr(args, "tree", None):
        tree = _load_tree(args.tree)
        return build_definitions(tree, tree.importance(cfg.importance_threshold), cfg.mode)
    raise InputError("one of --tree or --definitions is required")


def _load_tree(path) -> DecisionTree:
    path = _existing(path)
    try:
        return DecisionTree.load(path)
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: unreadable tree ({exc})") from None


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_features(args) -> int:
    cfg = _resolve_config(args)
    corpus = _load_corpus(cfg)
    catalog = cfg.load_catalog()
    fm = corpus_mod.build_matrix(corpus, catalog, n_jobs=cfg.jobs)
    path = _out_dir(cfg) / "features.csv"
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(catalog.ids + ["label"])
        for row, label in zip(fm.X, fm.labels):
            writer.writerow([repr(float(v)) for v in row] + [label])
    print(f"m={len(catalog)} N={len(corpus)} -> {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    corpus = _load_corpus(cfg)
    catalog = cfg.load_catalog()
    config = cfg.train_config()
    train_idx, valid_idx = corpus_mod.stratified_split_indices(corpus.labels, cfg.split, cfg.seed)
    fm = corpus_mod.build_matrix(corpus, catalog, n_jobs=cfg.jobs)
    labels = np.array(fm.labels, dtype=object)
    tree = DecisionTree.fit(fm.X[train_idx], labels[train_idx], config, catalog)
    importance = tree.importance()
    pred = tree.predict(fm.X[valid_idx])
    report = EvalReport.compute(labels[valid_idx], pred)
    defs = build_definitions(tree, importance, cfg.mode)
    consistency = check_consistency(defs, fm.X[train_idx], labels[train_idx])

    out = _out_dir(cfg)
    tree.save(out / "tree.json")
    with open(out / "importance.csv", "w", encoding="utf-8", newline="") as fh:
        csv.writer(fh).writerows(importance.to_csv_rows())
    (out / "split.json").write_text(json.dumps({
        "train_fraction": cfg.split, "seed": cfg.seed,
        "train": train_idx.tolist(), "validation": valid_idx.tolist(),
    }) + "\n", encoding="utf-8")
    write_reports(out, report, importance, consistency)

    print(f"train={len(train_idx)} validation={len(valid_idx)} nodes={tree.n_nodes} "
          f"leaves={tree.n_leaves} depth={tree.depth}")
    print(f"validation accuracy={report.accuracy:.4f} mae={report.mae:.4f}")
    if tree.root.is_leaf:
        print(f"warning: no split satisfies the constraints (min branch size {config.leaf_minimum}); "
              "the tree is a single leaf", file=sys.stderr)
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_ontology(args) -> int:
    cfg = _resolve_config(args)
    if not args.tree:
        raise InputError("--tree is required")
    tree = _load_tree(args.tree)
    defs = build_definitions(tree, tree.importance(cfg.importance_threshold), cfg.mode)
    out = _out_dir(cfg)
    path = out / "ontology.omn"
    path.write_text(emit_ontology(defs, cfg.iri), encoding="utf-8")
    (out / "definitions.json").write_text(json.dumps(defs.to_dict(), indent=2, sort_keys=True) + "\n",
                                          encoding="utf-8")
    for d in defs:
        if d.mode == "box":
            print(f"{d.label}: {len(d.constraints)} constraint(s)")
        else:
            print(f"{d.label}: {len(d.paths)} path(s), {sum(len(p.constraints) for p in d.paths)} constraint(s)")
    findings = check_consistency(defs).findings
    print("consistency: " + ("no findings" if not findings else f"{len(findings)} finding(s)"))
    for f in findings:
        print(f"  {f}")
    print(f"-> {path}")
    return EXIT_OK


def _read_texts(source: str) -> list:
    if source == "-":
        lines = sys.stdin.read().splitlines()
    else:
        lines = _existing(source).read_text(encoding="utf-8").splitlines()
    return [line for line in lines if line.strip()]


def cmd_classify(args) -> int:
    cfg = _resolve_config(args)
    defs = _load_definitions(args, cfg)
    texts = _read_texts(args.input)
    records = []
    for text in texts:
        doc = Document.from_text(text)
        if doc.n_tokens == 0:
            records.append({"text": text, "label": None, "diagnostics": {"error": "no tokens"}})
            continue
        label, diag = classify_by_rules(defs, extract_features(doc, defs.catalog))
        records.append({"text": text, "label": label, "diagnostics": diag.to_dict()})
    lines = "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in records)
    if args.out:
        path = _out_dir(cfg) / "classified.jsonl"
        path.write_text(lines, encoding="utf-8")
        print(f"{len(records)} text(s) -> {path}", file=sys.stderr)
    else:
        sys.stdout.write(lines)
    return EXIT_OK


def cmd_evaluate(args) -> int:
    cfg = _resolve_config(args)
    corpus = _load_corpus(cfg)
    if args.subset != "all":
        train, valid = corpus_mod.stratified_split(corpus, cfg.split, cfg.seed)
        corpus = train if args.subset == "train" else valid
    if args.predictor == "tree":
        if not args.tree:
            raise InputError("--predictor tree needs --tree")
        tree = _load_tree(args.tree)
        fm = corpus_mod.build_matrix(corpus, tree.catalog, n_jobs=cfg.jobs)
        pred = tree.predict(fm.X)
        importance, consistency = tree.importance(cfg.importance_threshold), None
    else:
        defs = _load_definitions(args, cfg)
        fm = corpus_mod.build_matrix(corpus, defs.catalog, n_jobs=cfg.jobs)
        pred = [classify_by_rules(defs, row)[0] for row in fm.X]
        importance = None
        consistency = check_consistency(defs, fm.X, fm.labels)
    report = EvalReport.compute(list(fm.labels), pred)
    write_reports(_out_dir(cfg), report, importance, consistency, prefix="evaluate")
    print(f"n={report.n} accuracy={report.accuracy:.4f} mae={report.mae:.4f}")
    if not args.no_agreement and all(it.label2 is not None for it in corpus):
        print(f"inter-annotator agreement={corpus_mod.agreement_score(corpus):.4f}")
    return EXIT_OK


def cmd_gen_fixture(args) -> int:
    corpus = generate_fixture(args.per_level, args.seed)
    out = Path(args.out)
    if out.is_dir() or not out.suffix:
        out.mkdir(parents=True, exist_ok=True)
        out = out / "fixture.csv"
    corpus_mod.save_corpus(corpus, out)
    print(f"{len(corpus)} texts -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p, *, corpus=False, train=False, defs=False):
    p.add_argument("--config", help="JSON file with pipeline settings; flags override it")
    p.add_argument("--out", help="output directory")
    p.add_argument("--catalog", help="feature catalog JSON (default: built-in ten descriptors)")
    p.add_argument("--jobs", type=int, help="threads for feature extraction")
    p.add_argument("--importance-threshold", dest="importance_threshold", type=float)
    if corpus:
        p.add_argument("--corpus", help="labelled corpus file")
        p.add_argument("--format", choices=corpus_mod.FORMATS)
        p.add_argument("--split", type=float, help="training fraction of the stratified split")
        p.add_argument("--seed", type=int, help="split seed")
    if train:
        p.add_argument("--max-depth", dest="max_depth", type=int)
        p.add_argument("--min-branch", dest="min_branch", type=int, help="samples required in each branch")
        p.add_argument("--min-leaf", dest="min_leaf", type=int)
    if train or defs:
        p.add_argument("--mode", choices=("box", "exact"))
    if defs:
        p.add_argument("--tree", help="tree JSON written by 'train'")
        p.add_argument("--definitions", help="definitions JSON or .omn ontology")
        p.add_argument("--iri", help=f"ontology IRI (default {DEFAULT_IRI})")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cefr-onto", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="{features,train,ontology,classify,evaluate}")

    p = sub.add_parser("features", help="write the descriptor matrix of a corpus")
    _add_common(p, corpus=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit the tree on a stratified split and evaluate it")
    _add_common(p, corpus=True, train=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("ontology", help="emit class definitions as a Manchester-syntax ontology")
    _add_common(p, defs=True)
    p.set_defaults(func=cmd_ontology)

    p = sub.add_parser("classify", help="label texts (one per line) by definition matching")
    _add_common(p, defs=True)
    p.add_argument("--input", default="-", help="text file, one text per line ('-' for stdin)")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("evaluate", help="score a labelled corpus against a tree or definitions")
    _add_common(p, corpus=True, defs=True)
    p.add_argument("--predictor", choices=("rules", "tree"), default="rules")
    p.add_argument("--subset", choices=("all", "train", "validation"), default="all")
    p.add_argument("--no-agreement", action="store_true", help="skip the inter-annotator agreement line")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("gen-fixture")
    p.add_argument("--out", default="fixture.csv", help="output file or directory")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--per-level", dest="per_level", type=int, default=200)
    p.set_defaults(func=cmd_gen_fixture)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, CefrOntoError, FileNotFoundError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
