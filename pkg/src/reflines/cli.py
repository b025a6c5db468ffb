"""Command-line interface: ``reflines <command> ...``.

Exit codes
----------
0   success
3   training stopped at max_iterations without converging (model written)
10  unexpected error
11  invalid configuration
12  empty corpus
13  malformed corpus
14  unreadable or incompatible model file
15  I/O error
16  training failed (non-finite objective)
"""

from __future__ import annotations

import argparse
import datetime as _dt
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .corpus import (
    CorpusError,
    EmptyCorpusError,
    LabeledDocument,
    Label,
    gold_documents,
    read_corpus,
    write_jsonl,
)
from .crf import MAX_ORDER
from .evaluation import document_metrics, evaluate, format_table, pool
from .extraction import decode, group
from .features import TEMPLATES, FeatureConfig, document_features, read_gazetteer
from .model_io import ModelFormatError, load, save
from .parallel import ordered_map
from .synthgen import MODES, STYLES, GenConfig, generate
from .training import TrainConfig, TrainingError, kfold_evaluate, train

log = logging.getLogger("reflines")

EXIT_OK = 0
EXIT_NOT_CONVERGED = 3
EXIT_ERROR = 10
EXIT_CONFIG = 11
EXIT_EMPTY = 12
EXIT_CORPUS = 13
EXIT_MODEL = 14
EXIT_IO = 15
EXIT_TRAINING = 16


class CliError(Exception):
    def __init__(self, message: str, code: int = EXIT_ERROR):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# configuration

DEFAULTS = {
    "order": 2,
    "constraints": None,  # None: the model's own default
    "seed": 0,
    "jobs": 1,
    "l2_sigma": 10.0,
    "max_iterations": 200,
    "convergence_tol": 1e-6,
    "optimizer": "lbfgs",
    "learning_rate": 0.1,
    "window": 2,
    "templates": sorted(TEMPLATES),
    "heading_gazetteer": list(FeatureConfig().heading_gazetteer),
    "name_gazetteer": None,
    "vgap_bounds": list(FeatureConfig().vgap_bounds),
    "punct_bounds": list(FeatureConfig().punct_bounds),
    "capratio_bounds": list(FeatureConfig().capratio_bounds),
    "len_bounds": list(FeatureConfig().len_bounds),
}
_FEATURE_KEYS = ("window", "templates", "heading_gazetteer", "name_gazetteer",
                 "vgap_bounds", "punct_bounds", "capratio_bounds", "len_bounds")
_TRAIN_KEYS = ("l2_sigma", "max_iterations", "convergence_tol", "optimizer", "seed", "learning_rate")


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then the ``--config`` file, then explicit command-line flags."""
    cfg = dict(DEFAULTS)
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                from_file = json.load(fh)
        except OSError as exc:
            raise CliError(f"cannot read config file: {exc}", EXIT_CONFIG) from None
        except json.JSONDecodeError as exc:
            raise CliError(f"config file is not valid JSON: {exc.msg}", EXIT_CONFIG) from None
        if not isinstance(from_file, dict):
            raise CliError("config file must contain a JSON object", EXIT_CONFIG)
        unknown = sorted(set(from_file) - set(DEFAULTS))
        if unknown:
            raise CliError(f"unknown config key(s): {', '.join(unknown)}", EXIT_CONFIG)
        cfg.update(from_file)
    for key in DEFAULTS:
        value = getattr(args, key, None)
        if value is not None:
            cfg[key] = value
    for key in ("heading_gazetteer", "name_gazetteer"):
        path = getattr(args, f"{key}_file", None)
        if path:
            try:
                cfg[key] = list(read_gazetteer(path))
            except OSError as exc:
                raise CliError(f"cannot read gazetteer: {exc}", EXIT_CONFIG) from None
    if isinstance(cfg["constraints"], str):
        cfg["constraints"] = cfg["constraints"] == "on"
    return cfg


def feature_config(cfg: dict) -> FeatureConfig:
    try:
        return FeatureConfig.from_json({key: cfg[key] for key in _FEATURE_KEYS})
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid feature configuration: {exc}", EXIT_CONFIG) from None


def train_config(cfg: dict) -> TrainConfig:
    try:
        return TrainConfig(**{key: cfg[key] for key in _TRAIN_KEYS})
    except (TypeError, ValueError) as exc:
        raise CliError(f"invalid training configuration: {exc}", EXIT_CONFIG) from None


def _order(cfg: dict) -> int:
    order = cfg["order"]
    if not isinstance(order, int) or not 1 <= order <= MAX_ORDER:
        raise CliError(f"order must be an integer in 1..{MAX_ORDER}", EXIT_CONFIG)
    return order


# ---------------------------------------------------------------------------
# io helpers


def _read(paths, fmt=None, labeled=False):
    docs = []
    for path in paths if isinstance(paths, (list, tuple)) else [paths]:
        try:
            docs.extend(read_corpus(path, fmt))
        except EmptyCorpusError:
            raise CliError(f"empty corpus: {path}", EXIT_EMPTY) from None
        except CorpusError as exc:
            raise CliError(f"{path}: {exc}", EXIT_CORPUS) from None
        except OSError as exc:
            raise CliError(f"cannot read corpus: {exc}", EXIT_IO) from None
    if not docs:
        raise CliError("empty corpus", EXIT_EMPTY)
    if labeled:
        try:
            docs = gold_documents(docs)
        except CorpusError as exc:
            raise CliError(str(exc), EXIT_CORPUS) from None
    return docs


def _load_model(path):
    try:
        return load(path)
    except ModelFormatError as exc:
        raise CliError(f"{path}: {exc}", EXIT_MODEL) from None
    except OSError as exc:
        raise CliError(f"cannot read model: {exc}", EXIT_MODEL) from None


def _open_out(path):
    if path in (None, "-"):
        return sys.stdout, False
    try:
        return open(path, "w", encoding="utf-8", newline="\n"), True
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _write_json(path, obj):
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(obj, fh, indent=1, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


# ---------------------------------------------------------------------------
# commands


def cmd_train(args) -> int:
    cfg = resolve_config(args)
    fcfg, tcfg, order = feature_config(cfg), train_config(cfg), _order(cfg)
    docs = _read(args.corpus, args.format, labeled=True)
    log.info("training order-%d model on %d documents", order, len(docs))
    try:
        model, report = train(docs, fcfg, order, tcfg, constraints_default=cfg["constraints"] is not False)
    except TrainingError as exc:
        raise CliError(f"training failed: {exc}", EXIT_TRAINING) from None
    try:
        save(model, args.output)
    except OSError as exc:
        raise CliError(f"cannot write model: {exc}", EXIT_IO) from None
    report_json = report.to_json()
    report_json["trained_at"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    report_json["model"] = os.fspath(args.output)
    _write_json(f"{args.output}.report.json", report_json)
    if not args.no_figures:
        from .reporting import plot_training

        plot_training(report, f"{args.output}.training.png")
    print(f"{report.message}: {report.iterations} iterations, objective {report.final_objective:.6g}")
    return EXIT_OK if report.converged else EXIT_NOT_CONVERGED


def cmd_extract(args) -> int:
    cfg = resolve_config(args)
    model = _load_model(args.model)
    docs = _read(args.documents, args.format)
    constraints = cfg["constraints"]

    def run(doc):
        labels = decode(doc, model, constraints)
        return group(doc.document.lines, labels)

    results = ordered_map(run, docs, cfg["jobs"])
    out, owned = _open_out(args.output)
    try:
        for doc, refs in zip(docs, results):
            record = {"doc_id": doc.doc_id, "references": [r.to_json() for r in refs]}
            out.write(json.dumps(record, ensure_ascii=False) + "\n")
    finally:
        if owned:
            out.close()
    return EXIT_OK


def cmd_label(args) -> int:
    cfg = resolve_config(args)
    model = _load_model(args.model)
    docs = _read(args.corpus, args.format)
    constraints = cfg["constraints"]
    preds = ordered_map(lambda d: decode(d, model, constraints), docs, cfg["jobs"])
    out, owned = _open_out(args.output)
    try:
        for i, (doc, pred) in enumerate(zip(docs, preds)):
            if i:
                out.write("\n")
            gold = doc.labels if isinstance(doc, LabeledDocument) else None
            for t, line in enumerate(doc.lines):
                cells = [line.text.replace("\t", " ")]
                if gold is not None:
                    cells.append(gold[t].tag)
                cells.append(pred[t].tag)
                out.write("\t".join(cells) + "\n")
    finally:
        if owned:
            out.close()
    return EXIT_OK


_ROW_KEYS = ["line_accuracy"] + [f"{lab.tag}_f1" for lab in Label] + ["ref_precision", "ref_recall", "ref_f1"]


def _metrics_rows(rows: list[tuple[str, dict]]) -> str:
    lines = ["\t".join(["fold"] + _ROW_KEYS)]
    for name, values in rows:
        lines.append("\t".join([name] + [f"{values[k]:.6f}" for k in _ROW_KEYS]))
    return "\n".join(lines) + "\n"


def cmd_eval(args) -> int:
    cfg = resolve_config(args)
    docs = _read(args.corpus, args.format, labeled=True)
    constraints = cfg["constraints"]
    out_path = Path(args.output)
    stem = out_path.with_suffix("")
    if args.kfold:
        if args.kfold < 2 or args.kfold > len(docs):
            raise CliError(f"--kfold must be in 2..{len(docs)}", EXIT_CONFIG)
        folds = kfold_evaluate(docs, args.kfold, feature_config(cfg), _order(cfg), train_config(cfg),
                               constraints, cfg["jobs"])
        rows = [(str(i + 1), m.to_dict()) for i, m in enumerate(folds)]
        mean = {key: float(np.mean([row[key] for _, row in rows]))
                for key, value in rows[0][1].items() if isinstance(value, float)}
        pooled = pool(folds)
        tsv = _metrics_rows(rows + [("mean", mean), ("pooled", pooled.to_dict())])
        print(tsv, end="")
        payload = {"averaging": "micro", "folds": [row for _, row in rows], "mean": mean,
                   "pooled": pooled.to_dict()}
    else:
        if args.gold_self:
            metrics = pool(document_metrics(d.labels, d.labels, d.lines) for d in docs)
        else:
            if not args.model:
                raise CliError("eval needs --model unless --kfold or --gold-self is given", EXIT_CONFIG)
            model = _load_model(args.model)
            metrics = evaluate(model, docs, constraints, cfg["jobs"])
        print(format_table(metrics))
        payload = metrics.to_dict()
        folds = None
        pooled = metrics
        tsv = _metrics_rows([("all", metrics.to_dict())])
    _write_json(out_path, payload)
    try:
        Path(f"{stem}.tsv").write_text(tsv, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {stem}.tsv: {exc}", EXIT_IO) from None
    if not args.no_figures:
        from .reporting import plot_confusion, plot_folds, plot_label_scores

        plot_label_scores(pooled, f"{stem}.scores.png")
        plot_confusion(pooled, f"{stem}.confusion.png")
        if folds:
            plot_folds(folds, f"{stem}.folds.png")
    return EXIT_OK


def _select_line(docs, spec: str):
    doc_key, sep, idx = spec.rpartition(":")
    if not sep:
        raise CliError("--line expects DOC:INDEX", EXIT_CONFIG)
    try:
        index = int(idx)
    except ValueError:
        raise CliError(f"bad line index {idx!r}", EXIT_CONFIG) from None
    matches = [d for d in docs if d.doc_id == doc_key]
    if not matches and doc_key.isdigit() and int(doc_key) < len(docs):
        matches = [docs[int(doc_key)]]
    if not matches:
        raise CliError(f"no document {doc_key!r}", EXIT_CONFIG)
    doc = matches[0]
    if not 0 <= index < len(doc.lines):
        raise CliError(f"line index {index} out of range for {len(doc.lines)} lines", EXIT_CONFIG)
    return doc, index


def cmd_features(args) -> int:
    cfg = resolve_config(args)
    fcfg = feature_config(cfg)
    docs = _read(args.corpus, args.format)
    out, owned = _open_out(args.output)
    try:
        if args.line:
            doc, index = _select_line(docs, args.line)
            from .features import extract_line_features

            for name in sorted(extract_line_features(doc, index, fcfg)):
                out.write(name + "\n")
        else:
            for doc in docs:
                for i, fired in enumerate(document_features(doc, fcfg)):
                    out.write(f"{doc.doc_id}\t{i}\t{' '.join(sorted(fired))}\n")
    finally:
        if owned:
            out.close()
    return EXIT_OK


def cmd_synthgen(args) -> int:
    try:
        gen = GenConfig(
            seed=args.seed if args.seed is not None else 0,
            n_documents=args.n_documents,
            body_lines=tuple(args.body_lines),
            references=tuple(args.references),
            styles=tuple(args.styles),
            mode=args.mode,
            page_height=args.page_height,
            hyphenation=args.hyphenation,
            footnote_noise=args.footnote_noise,
        )
    except ValueError as exc:
        raise CliError(f"invalid generator configuration: {exc}", EXIT_CONFIG) from None
    out, owned = _open_out(args.output)
    try:
        write_jsonl(generate(gen), out)
    finally:
        if owned:
            out.close()
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _add_common(p, *, training=False, features=False):
    p.add_argument("--config", help="JSON config file; command-line flags override its values")
    p.add_argument("--format", choices=("jsonl", "tsv"), help="corpus format (default: by extension)")
    p.add_argument("--constraints", choices=("on", "off"), help="BIO decode constraints (default: on)")
    p.add_argument("--jobs", type=int, help="parallel documents for decoding")
    p.add_argument("--seed", type=int)
    if features or training:
        p.add_argument("--window", type=int, help="neighbor conjunction radius (0-3)")
        p.add_argument("--templates", type=lambda s: s.split(","), help="comma-separated enabled templates")
        p.add_argument("--heading-gazetteer", dest="heading_gazetteer_file", metavar="FILE")
        p.add_argument("--name-gazetteer", dest="name_gazetteer_file", metavar="FILE")
    if training:
        p.add_argument("--order", type=int, help=f"Markov order 1..{MAX_ORDER} (default 2)")
        p.add_argument("--l2-sigma", dest="l2_sigma", type=float)
        p.add_argument("--max-iterations", dest="max_iterations", type=int)
        p.add_argument("--tol", dest="convergence_tol", type=float)
        p.add_argument("--optimizer", choices=("lbfgs", "sgd"))
        p.add_argument("--learning-rate", dest="learning_rate", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="reflines", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model on a labeled corpus")
    p.add_argument("corpus", nargs="+")
    p.add_argument("-o", "--output", required=True, help="model file to write")
    p.add_argument("--no-figures", action="store_true")
    _add_common(p, training=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("extract", help="extract reference strings as JSONL")
    p.add_argument("model")
    p.add_argument("documents")
    p.add_argument("-o", "--output", default="-")
    _add_common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("label", help="print per-line predicted labels as TSV")
    p.add_argument("model")
    p.add_argument("corpus")
    p.add_argument("-o", "--output", default="-")
    _add_common(p)
    p.set_defaults(func=cmd_label)

    p = sub.add_parser("eval", help="evaluate a model, or k-fold cross-validate")
    p.add_argument("corpus")
    p.add_argument("--model")
    p.add_argument("--kfold", type=int)
    p.add_argument("--gold-self", action="store_true", help="score gold labels against themselves")
    p.add_argument("-o", "--output", default="metrics.json", help="metrics JSON; TSV and figures go beside it")
    p.add_argument("--no-figures", action="store_true")
    _add_common(p, training=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("features", help="dump fired feature names")
    p.add_argument("corpus")
    p.add_argument("--line", metavar="DOC:INDEX")
    p.add_argument("-o", "--output", default="-")
    _add_common(p, features=True)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("synthgen", help="write a synthetic labeled corpus as JSONL")
    p.add_argument("-o", "--output", default="-")
    p.add_argument("--seed", type=int)
    p.add_argument("--n-documents", type=int, default=20)
    p.add_argument("--mode", choices=MODES, default="end_section")
    p.add_argument("--styles", nargs="+", choices=STYLES, default=list(STYLES))
    p.add_argument("--body-lines", type=int, nargs=2, default=GenConfig().body_lines, metavar=("LO", "HI"))
    p.add_argument("--references", type=int, nargs=2, default=GenConfig().references, metavar=("LO", "HI"))
    p.add_argument("--page-height", type=int, default=GenConfig().page_height)
    p.add_argument("--hyphenation", type=float, default=GenConfig().hyphenation)
    p.add_argument("--footnote-noise", type=float, default=GenConfig().footnote_noise)
    p.set_defaults(func=cmd_synthgen)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"reflines: {exc}", file=sys.stderr)
        return exc.code
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # noqa: BLE001 - last-resort exit code
        log.exception("unexpected error")
        print(f"reflines: unexpected error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
