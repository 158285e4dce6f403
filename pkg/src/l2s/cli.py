"""Command line front end: gen, train, test, score, bench."""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import metrics
from .core import Counters, TrainerConfig, learn_example, test_decode
from .cslearn import DEFAULT_ETA, LinearCSModel, load_model, save_model
from .dataio import (
    DEFAULT_BITS,
    LabelDict,
    TemplateSpec,
    check_bits,
    read_columns,
    read_conll,
    read_entity_relation,
    write_conll,
)
from .errors import ConfigurationError, DataError, L2SError, ModelFormatError
from .synth import markov_corpus, write_corpus
from .tasks import (
    BIOTask,
    DependencyParserTask,
    DetectionTask,
    EntityRelationTask,
    RelationConstraintTable,
    SequenceTask,
    SequenceTaskConfig,
    read_dependency_corpus,
)

log = logging.getLogger("l2s")

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_MODEL = 4

TASKS = ("seq", "bio", "detect", "entrel", "dep")
# report keys that legitimately differ between identical runs
TIMING_KEYS = ("wall_time", "tokens_per_sec")


@dataclass
class RunReport:
    command: str
    seed: int
    wall_time: float = 0.0
    tokens_per_sec: float = 0.0
    counters: Counters = field(default_factory=Counters)
    metrics: dict = field(default_factory=dict)
    config: dict = field(default_factory=dict)

    def lines(self, with_counters: bool = True, with_timing: bool = True) -> list[str]:
        out = [f"command={self.command}", f"seed={self.seed}"]
        if with_timing:
            out += [f"wall_time={self.wall_time:.3f}", f"tokens_per_sec={self.tokens_per_sec:.1f}"]
        out += [f"config.{k}={v}" for k, v in sorted(self.config.items())]
        if with_counters:
            out += [f"counters.{k}={v}" for k, v in self.counters.as_dict().items()]
        out += [f"metric.{k}={_fmt(v)}" for k, v in sorted(self.metrics.items())]
        return out

    def text(self, **kw) -> str:
        return "\n".join(self.lines(**kw)) + "\n"


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def stable_report_lines(text: str) -> list[str]:
    """Report lines minus timing, for determinism comparisons."""
    return [ln for ln in text.splitlines() if ln.split("=", 1)[0] not in TIMING_KEYS]


# ---------------------------------------------------------------------------
# task adapters


class TaskAdapter:
    """Corpus IO, task construction and scoring for one --task value."""

    name = ""

    def __init__(self, args):
        self.args = args

    def load(self, path, labels: list[str] | None = None) -> tuple[list, list[str]]:
        raise NotImplementedError

    def make_task(self, labels: list[str]):
        raise NotImplementedError

    def evaluate(self, examples, outputs) -> dict:
        raise NotImplementedError

    def write_predictions(self, examples, outputs, labels, path) -> None:
        raise NotImplementedError

    def score_file(self, path) -> dict:
        raise NotImplementedError

    def size(self, x) -> int:
        return len(x)


def _templates(args) -> TemplateSpec:
    return TemplateSpec.parse(args.neighbor_features, args.affix, args.columns)


def _frozen_labels(labels: list[str]) -> LabelDict:
    return LabelDict(labels).freeze()


def _read_labeled(path, labels: list[str] | None, from_model: bool = True):
    table = _frozen_labels(labels) if labels is not None else LabelDict()
    try:
        sents = read_conll(path, labels=table)
    except DataError as exc:
        if from_model and labels is not None and "not in the label table" in str(exc):
            raise ModelFormatError(f"corpus does not match the model: {exc}") from None
        raise
    return sents, table.names


class SequenceAdapter(TaskAdapter):
    name = "seq"

    def load(self, path, labels=None):
        return _read_labeled(path, labels)

    def task_config(self, labels):
        return SequenceTaskConfig(
            markov_order=self.args.markov_order,
            templates=_templates(self.args),
            bits=self.args.bits,
            label_names=list(labels),
        )

    def make_task(self, labels):
        return SequenceTask(len(labels), self.task_config(labels))

    def evaluate(self, examples, outputs):
        pred = [a for out in outputs for a in out]
        gold = [g for s in examples for g in s.gold_labels]
        return {"accuracy": metrics.hamming_accuracy(pred, gold)}

    def write_predictions(self, examples, outputs, labels, path):
        write_conll(examples, path, [[labels[a] for a in out] for out in outputs])

    def _file_columns(self, path):
        gold, pred = [], []
        for block in read_columns(path):
            if len(block[0].columns) < 2:
                raise DataError(f"{path}: predictions need gold and predicted columns")
            gold.append([t.columns[-2] for t in block])
            pred.append([t.columns[-1] for t in block])
        return gold, pred

    def score_file(self, path):
        gold, pred = self._file_columns(path)
        return {"accuracy": metrics.hamming_accuracy(sum(pred, []), sum(gold, []))}


class BIOAdapter(SequenceAdapter):
    name = "bio"

    def make_task(self, labels):
        return BIOTask(labels, self.task_config(labels))

    def _bio_metrics(self, pred, gold):
        prf = metrics.span_f1(pred, gold, self.args.metric)
        return {
            "accuracy": metrics.hamming_accuracy(sum(pred, []), sum(gold, [])),
            "span_precision": prf.precision,
            "span_recall": prf.recall,
            "span_f1": prf.f1,
        }

    def evaluate(self, examples, outputs):
        labels = self._labels
        pred = [[labels[a] for a in out] for out in outputs]
        gold = [[labels[g] for g in s.gold_labels] for s in examples]
        return self._bio_metrics(pred, gold)

    def load(self, path, labels=None):
        sents, names = super().load(path, labels)
        self._labels = names
        return sents, names

    def score_file(self, path):
        gold, pred = self._file_columns(path)
        return self._bio_metrics(pred, gold)


class DetectionAdapter(SequenceAdapter):
    name = "detect"

    def load(self, path, labels=None):
        if labels is None:
            top = 0
            for block in read_columns(path):
                for tok in block:
                    try:
                        top = max(top, int(tok.columns[-1]))
                    except ValueError:
                        raise DataError(f"{path}: detection labels must be integers") from None
            k = self.args.num_labels or top
            return _read_labeled(path, [str(i) for i in range(1, k + 1)], from_model=False)
        return _read_labeled(path, labels)

    def make_task(self, labels):
        return DetectionTask(len(labels), self.args.false_negative_loss, _templates(self.args), self.args.bits)

    @staticmethod
    def _detect_metrics(pred_max, gold_max, fn_loss):
        fn = sum(1 for p, g in zip(pred_max, gold_max) if g > p)
        fp = sum(1 for p, g in zip(pred_max, gold_max) if g < p)
        n = len(gold_max)
        return {
            "max_accuracy": (n - fn - fp) / n if n else 0.0,
            "false_negatives": fn,
            "false_positives": fp,
            "mean_loss": (fn * fn_loss + fp) / n if n else 0.0,
        }

    def evaluate(self, examples, outputs):
        gold = [max(s.gold_labels) + 1 for s in examples]
        return self._detect_metrics(outputs, gold, self.args.false_negative_loss)

    def write_predictions(self, examples, outputs, labels, path):
        write_conll(examples, path, [[str(out)] * len(s) for s, out in zip(examples, outputs)])

    def score_file(self, path):
        gold, pred = self._file_columns(path)
        try:
            gmax = [max(int(v) for v in g) for g in gold]
            pmax = [int(p[0]) for p in pred]
        except ValueError:
            raise DataError(f"{path}: detection labels must be integers") from None
        return self._detect_metrics(pmax, gmax, self.args.false_negative_loss)


class EntityRelationAdapter(TaskAdapter):
    name = "entrel"

    def __init__(self, args):
        super().__init__(args)
        table = RelationConstraintTable.load(args.relations) if args.relations else RelationConstraintTable.default()
        self.task = EntityRelationTask(table, args.bits)

    def load(self, path, labels=None):
        if labels is not None and list(labels) != self.task.labels:
            raise ModelFormatError("model label table does not match the relation constraint table")
        recs = read_entity_relation(path)
        for rec in recs:
            for ent in rec["entities"]:
                self.task.entity_id(ent["gold_type"])
            for rel in rec["relations"]:
                self.task.relation_id(rel["gold_type"])
        return recs, list(self.task.labels)

    def make_task(self, labels):
        return self.task

    def size(self, x):
        return len(x["entities"])

    @staticmethod
    def _metrics(pred_types, gold_types, pred_rels, gold_rels):
        ent = metrics.micro_f1_entities(pred_types, gold_types)
        rel = metrics.micro_f1_relations(pred_rels, gold_rels)
        return {
            "entity_f1": ent.f1,
            "entity_precision": ent.precision,
            "entity_recall": ent.recall,
            "relation_f1": rel.f1,
            "relation_precision": rel.precision,
            "relation_recall": rel.recall,
        }

    @staticmethod
    def _gold(rec):
        types = [e["gold_type"] for e in rec["entities"]]
        rels = [(int(r["arg1"]), int(r["arg2"]), r["gold_type"]) for r in rec["relations"]]
        return types, rels

    def evaluate(self, examples, outputs):
        gold = [self._gold(r) for r in examples]
        return self._metrics(
            [o.entity_types for o in outputs], [g[0] for g in gold],
            [o.relations for o in outputs], [g[1] for g in gold],
        )

    def write_predictions(self, examples, outputs, labels, path):
        with open(path, "w", encoding="utf-8") as fh:
            for rec, out in zip(examples, outputs):
                row = {k: v for k, v in rec.items() if k != "_cache"}
                row["pred_entities"] = out.entity_types
                row["pred_relations"] = [{"arg1": a, "arg2": b, "type": t} for a, b, t in out.relations]
                fh.write(json.dumps(row, sort_keys=True) + "\n")

    def score_file(self, path):
        pt, gt, pr, gr = [], [], [], []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    types, rels = self._gold(rec)
                    pt.append(rec["pred_entities"])
                    pr.append([(r["arg1"], r["arg2"], r["type"]) for r in rec["pred_relations"]])
                except (KeyError, ValueError, TypeError) as exc:
                    raise DataError(f"{path}:{lineno}: bad prediction record ({exc})") from None
                gt.append(types)
                gr.append(rels)
        return self._metrics(pt, gt, pr, gr)


class DependencyAdapter(TaskAdapter):
    name = "dep"

    def load(self, path, labels=None):
        task = self.make_task(None)
        if labels is not None and list(labels) != task.labels:
            raise ModelFormatError("model was not trained for dependency parsing")
        return read_dependency_corpus(path), list(task.labels)

    def make_task(self, labels):
        return DependencyParserTask(self.args.bits, self.args.oracle)

    def evaluate(self, examples, outputs):
        pred = [h for out in outputs for h in out]
        gold = [h for s in examples for h in s.gold_heads[1:]]
        return {"uas": metrics.uas(pred, gold)}

    def write_predictions(self, examples, outputs, labels, path):
        with open(path, "w", encoding="utf-8") as fh:
            for s, out in zip(examples, outputs):
                for i, w in enumerate(s.words):
                    fh.write(f"{w} {s.tags[i]} {s.gold_heads[i + 1]} {out[i]}\n")
                fh.write("\n")

    def score_file(self, path):
        pred, gold = [], []
        for block in read_columns(path):
            try:
                gold += [int(t.columns[-2]) for t in block]
                pred += [int(t.columns[-1]) for t in block]
            except (ValueError, IndexError):
                raise DataError(f"{path}: expected gold and predicted head columns") from None
        return {"uas": metrics.uas(pred, gold)}


ADAPTERS = {
    "seq": SequenceAdapter,
    "bio": BIOAdapter,
    "detect": DetectionAdapter,
    "entrel": EntityRelationAdapter,
    "dep": DependencyAdapter,
}


# ---------------------------------------------------------------------------
# training and decoding


def trainer_config(args, **overrides) -> TrainerConfig:
    kw = dict(
        algorithm=args.algorithm,
        rollin=args.rollin,
        rollout=args.rollout,
        beta=args.interpolation,
        rollout_mix_prob=args.rollout_mix_prob,
        collapse_h=args.collapse,
        subsample=args.subsample,
        passes=args.passes,
        update_per_example=args.update_per_example,
        cache_enabled=not args.no_cache,
        seed=args.seed,
    )
    kw.update(overrides)
    return TrainerConfig(**kw)


def epoch_plan(passes: float, subsample: float) -> list[float]:
    """Subsampling rate of each epoch.

    ``passes`` below one gives a single epoch at ``subsample * passes``;
    otherwise whole epochs followed by one partial epoch for the remainder.
    """
    if passes < 1:
        return [subsample * passes]
    whole = math.floor(passes)
    plan = [subsample] * whole
    frac = passes - whole
    if frac > 1e-12:
        plan.append(subsample * frac)
    return plan


def train(task, examples, model: LinearCSModel, cfg: TrainerConfig) -> Counters:
    counters = Counters()
    for epoch, rate in enumerate(epoch_plan(cfg.passes, cfg.subsample)):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(len(examples))
        for i in order.tolist():
            counters += learn_example(task, examples[i], model, cfg, example_id=i, pass_idx=epoch, subsample=rate)
    return counters


def decode(task, examples, model, workers: int = 1) -> tuple[list, Counters]:
    """Decode every example; with ``workers > 1`` examples are spread over threads."""
    if workers <= 1:
        counters = Counters()
        return [test_decode(task, x, model, counters)[0] for x in examples], counters

    def one(x):
        c = Counters()
        return test_decode(task, x, model, c)[0], c

    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(one, examples))
    counters = Counters()
    for _, c in results:
        counters += c
    return [r[0] for r in results], counters


def _config_echo(args, cfg: TrainerConfig | None = None) -> dict:
    out = {"task": args.task, "bits": args.bits}
    if cfg is not None:
        d = asdict(cfg)
        out.update({k: d[k] for k in sorted(d)})
        out["learning_rate"] = args.learning_rate
    return out


# ---------------------------------------------------------------------------
# commands


def _emit(report: RunReport, args, with_counters: bool) -> None:
    text = report.text(with_counters=with_counters)
    sys.stdout.write(text)
    if getattr(args, "report", None):
        Path(args.report).write_text(report.text(), encoding="utf-8")


def cmd_gen(args) -> int:
    corpus = markov_corpus(
        args.sentences, args.length, args.labels, args.noise, args.stickiness, args.vocab, args.seed
    )
    write_corpus(corpus, args.out)
    print(f"sentences={len(corpus)}")
    print(f"tokens={sum(len(w) for w, _ in corpus)}")
    return EXIT_OK


def cmd_train(args) -> int:
    adapter = ADAPTERS[args.task](args)
    cfg = trainer_config(args)
    start = time.perf_counter()
    examples, labels = adapter.load(args.data)
    if not examples:
        raise DataError(f"{args.data}: no training examples")
    task = adapter.make_task(labels)
    model = LinearCSModel(args.bits, task.num_actions, eta=args.learning_rate, labels=labels)
    counters = train(task, examples, model, cfg)
    save_model(model, args.model)
    wall = time.perf_counter() - start
    ntok = sum(adapter.size(x) for x in examples) * len(epoch_plan(cfg.passes, cfg.subsample))
    report = RunReport("train", args.seed, wall, ntok / wall if wall > 0 else 0.0, counters,
                       {}, _config_echo(args, cfg))
    _emit(report, args, args.counters)
    return EXIT_OK


def _load_for_test(args):
    model = load_model(args.model)
    if args.bits_given and model.bits != args.bits:
        raise ModelFormatError(f"model uses {model.bits} hash bits but --bits is {args.bits}")
    args.bits = model.bits
    adapter = ADAPTERS[args.task](args)
    if not model.labels:
        raise ModelFormatError("model file carries no label table")
    examples, labels = adapter.load(args.data, list(model.labels))
    task = adapter.make_task(labels)
    if task.num_actions != model.k:
        raise ModelFormatError(f"model has {model.k} actions, task needs {task.num_actions}")
    return model, adapter, examples, labels, task


def cmd_test(args) -> int:
    model, adapter, examples, labels, task = _load_for_test(args)
    start = time.perf_counter()
    outputs, counters = decode(task, examples, model, args.workers)
    wall = time.perf_counter() - start
    ntok = sum(adapter.size(x) for x in examples)
    if args.predictions:
        adapter.write_predictions(examples, outputs, labels, args.predictions)
    report = RunReport("test", args.seed, wall, ntok / wall if wall > 0 else 0.0, counters,
                       adapter.evaluate(examples, outputs), _config_echo(args))
    _emit(report, args, args.counters)
    return EXIT_OK


def cmd_score(args) -> int:
    adapter = ADAPTERS[args.task](args)
    report = RunReport("score", args.seed, metrics=adapter.score_file(args.predictions),
                       config=_config_echo(args))
    _emit(report, args, False)
    return EXIT_OK


BENCH_ROWS = (
    ("no_opts", dict(cache_enabled=False, collapse_h=None)),
    ("memoization", dict(cache_enabled=True, collapse_h=None)),
    ("collapse4_memo", dict(cache_enabled=True, collapse_h=4)),
    ("collapse2_memo", dict(cache_enabled=True, collapse_h=2)),
)


def run_bench(args) -> list[tuple[str, RunReport]]:
    adapter = ADAPTERS[args.task](args)
    train_x, labels = adapter.load(args.data)
    test_x, _ = adapter.load(args.test_data or args.data, labels)
    rows = []
    for name, overrides in BENCH_ROWS:
        cfg = trainer_config(args, **overrides)
        task = adapter.make_task(labels)
        model = LinearCSModel(args.bits, task.num_actions, eta=args.learning_rate, labels=labels)
        start = time.perf_counter()
        counters = train(task, train_x, model, cfg)
        wall = time.perf_counter() - start
        outputs, _ = decode(task, test_x, model)
        ntok = sum(adapter.size(x) for x in train_x)
        rows.append((name, RunReport(f"bench.{name}", args.seed, wall, ntok / wall if wall > 0 else 0.0,
                                     counters, adapter.evaluate(test_x, outputs), _config_echo(args, cfg))))
    return rows


def cmd_bench(args) -> int:
    rows = run_bench(args)
    for name, rep in rows:
        fields_ = [f"row={name}", f"wall_time={rep.wall_time:.3f}"]
        fields_ += [f"{k}={v}" for k, v in rep.counters.as_dict().items()]
        fields_ += [f"{k}={_fmt(v)}" for k, v in sorted(rep.metrics.items())]
        print(" ".join(fields_))
    if args.report:
        Path(args.report).write_text("".join(rep.text() for _, rep in rows), encoding="utf-8")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


class _BitsAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.bits_given = True


def _positive_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", choices=TASKS, default="seq", help="task program")
    p.add_argument("--bits", type=int, default=DEFAULT_BITS, action=_BitsAction, help="feature hash bits (8..31)")
    p.add_argument("--markov-order", type=int, default=1, help="previous predictions used as features")
    p.add_argument("--neighbor-features", default="0:w", help="neighbor templates, offset:namespace list")
    p.add_argument("--affix", default="", help="affix templates, e.g. -2w,+3w (+ prefix, - suffix)")
    p.add_argument("--columns", default="w", help="namespace per input column, comma separated")
    p.add_argument("--false-negative-loss", type=float, default=10.0, help="detection: cost of missing the maximum")
    p.add_argument("--num-labels", type=int, default=0, help="detection: label count (0 infers it from data)")
    p.add_argument("--relations", default="", help="entity-relation constraint file (empty uses the built-in table)")
    p.add_argument("--oracle", choices=("exhaustive", "closed_form"), default="exhaustive",
                   help="dependency reference policy")
    p.add_argument("--metric", choices=("macro", "micro"), default="macro", help="span F1 averaging")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.add_argument("--counters", action="store_true", default=False, help="print instrumentation counters")
    p.add_argument("--report", default="", help="also write the full report to this file")


def _add_train_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--algorithm", choices=("dagger", "searn", "lols"), default="lols", help="search algorithm")
    p.add_argument("--passes", type=float, default=1.0, help="training epochs (fractional allowed)")
    p.add_argument("--subsample", type=float, default=1.0, help="fraction of deviation positions per example")
    p.add_argument("--rollin", choices=("learned", "mix", "ref"), default=None,
                   help="rollin policy (None picks the algorithm default)")
    p.add_argument("--rollout", choices=("ref", "learned", "mix", "none"), default=None,
                   help="rollout policy (None picks the algorithm default)")
    p.add_argument("--interpolation", type=float, default=1e-8, help="per-update decay of the reference mixture")
    p.add_argument("--rollout-mix-prob", type=float, default=0.5, help="LOLS rollout reference probability")
    p.add_argument("--collapse", type=_positive_int, default=None, help="rollout horizon for path collapse")
    p.add_argument("--no-cache", action="store_true", default=False, help="disable memoization")
    p.add_argument("--update-per-example", action="store_true", default=False,
                   help="apply updates after each example instead of each deviation")
    p.add_argument("--learning-rate", type=float, default=DEFAULT_ETA, help="AdaGrad step size")


def build_parser() -> argparse.ArgumentParser:
    fmt = argparse.ArgumentDefaultsHelpFormatter
    parser = argparse.ArgumentParser(prog="l2s", description="Learning to search for structured prediction.",
                                     formatter_class=fmt)
    parser.add_argument("-v", "--verbose", action="store_true", default=False, help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="write a synthetic Markov tagging corpus", formatter_class=fmt)
    p.add_argument("--out", required=True, help="output CoNLL file")
    p.add_argument("--sentences", type=int, default=2000, help="number of sentences")
    p.add_argument("--length", type=_positive_int, default=20, help="tokens per sentence")
    p.add_argument("--labels", type=int, default=5, help="label count")
    p.add_argument("--noise", type=float, default=0.3, help="probability of an uninformative word")
    p.add_argument("--stickiness", type=float, default=0.8, help="probability of the successor label")
    p.add_argument("--vocab", type=_positive_int, default=3, help="words per label")
    p.add_argument("--seed", type=int, default=0, help="random seed")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="train a model", formatter_class=fmt)
    p.add_argument("--data", required=True, help="training corpus")
    p.add_argument("--model", required=True, help="output model file")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("test", help="decode a corpus with a trained model", formatter_class=fmt)
    p.add_argument("--data", required=True, help="corpus to decode")
    p.add_argument("--model", required=True, help="model file")
    p.add_argument("--predictions", default="", help="write predictions here")
    p.add_argument("--workers", type=_positive_int, default=1, help="concurrent decode threads")
    _add_model_flags(p)
    p.set_defaults(func=cmd_test)

    p = sub.add_parser("score", help="score a predictions file", formatter_class=fmt)
    p.add_argument("--predictions", required=True, help="predictions written by test")
    _add_model_flags(p)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("bench", help="compare memoization and path collapse settings", formatter_class=fmt)
    p.add_argument("--data", required=True, help="training corpus")
    p.add_argument("--test-data", default="", help="evaluation corpus (defaults to the training corpus)")
    _add_model_flags(p)
    _add_train_flags(p)
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not hasattr(args, "bits_given"):
        args.bits_given = False
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        if hasattr(args, "bits"):
            check_bits(args.bits)
        return args.func(args)
    except ConfigurationError as exc:
        print(f"l2s: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ModelFormatError as exc:
        print(f"l2s: model error: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except (DataError, OSError) as exc:
        print(f"l2s: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except L2SError as exc:
        print(f"l2s: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
