"""Command line interface: ``fap <command> [options]``.

Commands: compile, split, train, eval, gradcheck, synth, experiment.
Exit status: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import gradcheck, metrics
from .core import (DataError, Dataset, default_lexicon, iter_jsonl, load_dataset, load_lexicon,
                   read_manifest, write_jsonl, write_manifest)
from .models import (FAMILIES, TASKS, ModelSpec, NoApplicableLabelError, UnknownNounError,
                     UntrainableCombinationError, load_model, predict_dataset, save_model, train)
from .ndmath import NumericError
from .pipeline import (DEFAULT_HOLDOUTS, SplitPlan, SynthConfig, TagRecord, build_dataset,
                       make_split, split_counts, synth_generate, published_layout_config)

log = logging.getLogger("fap")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3
GRAD_TOL = 1e-4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _target(path: str | Path, force: bool) -> Path:
    path = Path(path)
    if path.exists() and not force:
        raise UsageError(f"{path} exists; pass --force to overwrite")
    return path


def _lexicon(args):
    return load_lexicon(args.lexicon) if args.lexicon else default_lexicon()


def _holdouts(values):
    out = []
    for v in values:
        noun, sep, aspect = v.partition(":")
        if not sep or not noun or not aspect:
            raise UsageError(f"--holdout expects noun:aspect, got {v!r}")
        out.append((noun, aspect))
    return tuple(out)


def _ratios(text):
    if text is None:
        return None
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError:
        raise UsageError(f"--ratios expects comma-separated numbers, got {text!r}") from None


def _manifest_only(path, lexicon) -> Dataset:
    records = read_manifest(path)
    return Dataset(lexicon, records, np.zeros((len(records), 0)))


# -- commands ----------------------------------------------------------------

def cmd_compile(args) -> int:
    lexicon = _lexicon(args)
    out = Path(args.out)
    manifest = _target(out / "manifest.jsonl", args.force)
    removal = _target(out / "removal_log.jsonl", args.force)
    tags = []
    for lineno, obj in iter_jsonl(args.tags):
        try:
            tags.append(TagRecord(str(obj["id"]), str(obj["noun"]), str(obj["adjective"])))
        except KeyError as exc:
            raise DataError(f"{args.tags}:{lineno}: missing key {exc}") from None
    exclusions = []
    if args.exclusions:
        for lineno, obj in iter_jsonl(args.exclusions):
            try:
                exclusions.append((str(obj["adjective"]), str(obj["noun"])))
            except KeyError as exc:
                raise DataError(f"{args.exclusions}:{lineno}: missing key {exc}") from None
    res = build_dataset(tags, lexicon, exclusions, mode=args.mode, seed=args.seed)
    out.mkdir(parents=True, exist_ok=True)
    write_manifest(manifest, res.records)
    write_jsonl(removal, res.log)
    print(f"{len(tags)} tag records -> {len(res.records)} images; {len(res.log)} removals logged")
    return EXIT_OK


def _print_counts(data: Dataset) -> None:
    print(f"{'noun':<14}{'aspect':<12}{'pol':>4}{'train':>7}{'dev':>6}{'test':>6}")
    for (noun, aspect, pol), c in split_counts(data).items():
        print(f"{noun:<14}{aspect:<12}{pol:>+4d}{c['train']:>7}{c['dev']:>6}{c['test']:>6}")


def cmd_split(args) -> int:
    lexicon = _lexicon(args)
    out = _target(args.out, args.force)
    holdouts = _holdouts(args.holdout)
    if args.split_kind == "zeroshot" and not holdouts:
        holdouts = DEFAULT_HOLDOUTS
    plan = SplitPlan(args.split_kind, _ratios(args.ratios), holdouts, args.seed)
    if holdouts:
        print("holdouts: " + ", ".join(f"{n}:{a}" for n, a in holdouts))
    data = make_split(_manifest_only(args.manifest, lexicon), plan)
    write_manifest(out, data.records)
    _print_counts(data)
    return EXIT_OK


def cmd_train(args) -> int:
    lexicon = _lexicon(args)
    out = _target(args.out, args.force)
    log_path = _target(args.log or f"{args.out}.log.jsonl", args.force)
    spec = ModelSpec(family=args.family, task=args.task, seed=args.seed, hidden=args.hidden,
                     lr=args.lr, epochs=args.epochs, batch_size=args.batch, optimizer=args.optimizer)
    data = load_dataset(args.manifest, args.embeddings, lexicon)
    if spec.epochs == 0:
        log.warning("epochs=0: saving the initialised, untrained model")
    model = train(spec, data)
    save_model(model, out)
    write_jsonl(log_path, model.history)
    last = model.history[-1] if model.history else {}
    best = max((h["dev_metric"] for h in model.history if h["dev_metric"] is not None), default=None)
    print(f"trained {spec.family}/{spec.task}: {len(model.history)} log entries, "
          f"final dev metric {last.get('dev_metric')}, best {best}")
    return EXIT_OK


def evaluate(model, data: Dataset) -> dict:
    """Score a model on ``data``; unanswerable rows make the report not applicable."""
    try:
        preds = predict_dataset(model, data)
    except (UntrainableCombinationError, NoApplicableLabelError, UnknownNounError) as exc:
        return {"applicable": False, "overall": None, "reason": str(exc)}
    if model.spec.task == "aspect":
        rep = metrics.aspect_f1_report(preds)
    else:
        rep = metrics.polarity_accuracy_report(preds)
    rep["applicable"] = True
    return rep


def _print_report(rep: dict) -> None:
    label = rep.get("family", "baseline")
    if not rep.get("applicable", True):
        print(f"{label:<20} {rep['task']:<9} -   ({rep['reason']})")
        return
    print(f"{label:<20} {rep['task']:<9} {rep['overall']:.4f}")
    for key in ("per_noun", "per_aspect"):
        for name, entry in rep.get(key, {}).items():
            print(f"    {name:<14} {entry['score']:.4f}  ({entry['rows']} rows)")


def cmd_eval(args) -> int:
    lexicon = _lexicon(args)
    out = _target(args.out, args.force) if args.out else None
    if args.baseline:
        if not args.task:
            raise UsageError("--baseline needs --task")
        data = _manifest_only(args.manifest, lexicon)
        rows = data.subset(data.mask(args.split))
        if len(rows) == 0:
            raise DataError(f"no rows in split {args.split!r}")
        pset = metrics.PredictionSet.from_dataset(rows)
        if args.task == "aspect":
            train_rows = data.subset(data.mask("train"))
            preds = metrics.baseline_aspect_predictions(train_rows, pset, args.seed)
            rep = metrics.aspect_f1_report(preds)
        else:
            rep = {"overall": metrics.baseline_polarity(pset, args.seed), "metric": "polarity_accuracy"}
        rep.update({"family": "baseline", "task": args.task, "applicable": True})
    else:
        if not args.model or not args.embeddings:
            raise UsageError("eval needs --model and --embeddings (or --baseline)")
        model = load_model(args.model)
        data = load_dataset(args.manifest, args.embeddings, lexicon)
        rows = data.subset(data.mask(args.split))
        if len(rows) == 0:
            raise DataError(f"no rows in split {args.split!r}")
        rep = evaluate(model, rows)
        rep.update({"family": model.spec.family, "task": model.spec.task})
    rep.update({"split": args.split, "n_rows": len(rows)})
    _print_report(rep)
    if out:
        out.write_text(_dump(rep), encoding="utf-8")
    return EXIT_OK


def cmd_gradcheck(args) -> int:
    tasks = TASKS if args.task == "both" else (args.task,)
    worst = 0.0
    for task in tasks:
        for k in range(args.instances):
            err = gradcheck.check(args.family, task, args.seed + k, corrupt=args.corrupt)
            worst = max(worst, err)
    ok = worst < GRAD_TOL
    print(f"{args.family} {'+'.join(tasks)}: max relative error {worst:.3e} "
          f"over {args.instances} instances -> {'PASS' if ok else 'FAIL'}")
    return EXIT_OK if ok else EXIT_NUMERIC


def _write_synth(cfg: SynthConfig, out: Path, force: bool, lexicon):
    paths = [_target(out / n, force) for n in ("manifest.jsonl", "embeddings.tsv", "oracle.json")]
    data, report = synth_generate(cfg, lexicon)
    out.mkdir(parents=True, exist_ok=True)
    data.save(paths[0], paths[1])
    report["config"] = cfg.to_json()
    paths[2].write_text(_dump(report), encoding="utf-8")
    return data, report


def cmd_synth(args) -> int:
    if args.published_layout is not None:
        cfg = published_layout_config(args.published_layout, dim=args.dim,
                                      separation=args.separation,
                                      noise=args.noise, noun_flip=args.noun_flip, seed=args.seed)
    else:
        nouns = tuple(n for n in args.nouns.split(",") if n)
        aspects = None
        if args.aspect:
            aspects = {}
            for noun, aspect in _holdouts(args.aspect):
                aspects.setdefault(noun, []).append(aspect)
        cfg = SynthConfig(dim=args.dim, nouns=nouns, aspects=aspects, images_per_cell=args.images,
                          separation=args.separation, noise=args.noise, noun_flip=args.noun_flip,
                          seed=args.seed)
    data, report = _write_synth(cfg, Path(args.out), args.force, _lexicon(args))
    print(f"{len(data)} images, D={data.dim}; optimal polarity accuracy per cell "
          f"{report['bayes_polarity_accuracy']:.4f}, noun-blind ceiling {report['noun_blind_ceiling']:.4f}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    """Synthesise (or load) a dataset, split it, train every listed model and evaluate.

    Config keys: ``synth`` (SynthConfig fields, or ``{"published_layout": scale, ...}``)
    or ``manifest`` + ``embeddings``; ``split`` (kind, ratios, holdouts,
    seed); ``models`` (list of ModelSpec fields); ``eval_split``;
    ``baseline_seed``.
    """
    cfg = json.loads(Path(args.config).read_text(encoding="utf-8"))
    out = Path(args.out)
    report_path = _target(out / "report.json", args.force)
    lexicon = _lexicon(args)
    if "synth" in cfg:
        sc = dict(cfg["synth"])
        if "published_layout" in sc:
            synth_cfg = published_layout_config(sc.pop("published_layout"), **sc)
        else:
            synth_cfg = SynthConfig.from_json(sc)
        data, oracle = _write_synth(synth_cfg, out, args.force, lexicon)
    else:
        data, oracle = load_dataset(cfg["manifest"], cfg["embeddings"], lexicon), None
    sp = cfg.get("split", {})
    plan = SplitPlan(sp.get("kind", "standard"), sp.get("ratios"),
                     tuple(tuple(h) for h in sp.get("holdouts",
                                                    DEFAULT_HOLDOUTS if sp.get("kind") == "zeroshot" else ())),
                     sp.get("seed", 0))
    data = make_split(data, plan)
    write_manifest(_target(out / "split_manifest.jsonl", args.force), data.records)
    eval_split = cfg.get("eval_split", "test")
    rows = data.subset(data.mask(eval_split))
    pset = metrics.PredictionSet.from_dataset(rows)
    bseed = cfg.get("baseline_seed", 0)
    results = [
        {"family": "baseline", "task": "aspect", "applicable": True,
         "overall": metrics.baseline_aspect(data.subset(data.mask("train")), pset, bseed)},
        {"family": "baseline", "task": "polarity", "applicable": True,
         "overall": metrics.baseline_polarity(pset, bseed)},
    ]
    for k, mspec in enumerate(cfg.get("models", [])):
        spec = ModelSpec(**mspec)
        model = train(spec, data)
        save_model(model, _target(out / f"model_{k}_{spec.family}_{spec.task}.json", args.force))
        rep = evaluate(model, rows)
        rep.update({"family": spec.family, "task": spec.task, "spec": mspec})
        results.append(rep)
    for rep in results:
        _print_report(rep)
    report = {"split": {"kind": plan.kind, "ratios": list(plan.ratios),
                        "holdouts": [list(h) for h in plan.holdouts], "seed": plan.seed},
              "eval_split": eval_split, "n_rows": len(rows), "oracle": oracle, "results": results}
    report_path.write_text(_dump(report), encoding="utf-8")
    return EXIT_OK


# -- argument parsing --------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fap", description="Focus-aspect-polarity prediction tools.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, seed=True):
        p.add_argument("--lexicon", help="lexicon JSON (default: the shipped six-aspect lexicon)")
        p.add_argument("--force", action="store_true", help="overwrite existing outputs")
        if seed:
            p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("compile", help="clean and balance tag records into a manifest")
    common(p)
    p.add_argument("--tags", required=True, help="JSON Lines with id, noun, adjective")
    p.add_argument("--exclusions", help="JSON Lines with adjective, noun")
    p.add_argument("--mode", choices=("and", "or"), default="and")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_compile)

    p = sub.add_parser("split", help="assign train/dev/test labels")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--split-kind", choices=("standard", "zeroshot"), default="standard")
    p.add_argument("--holdout", action="append", default=[], help="noun:aspect (repeatable)")
    p.add_argument("--ratios", help="comma-separated, e.g. 0.5,0.2,0.3")
    p.add_argument("--out", required=True, help="output manifest")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("train", help="train one model")
    common(p)
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--family", choices=FAMILIES, required=True)
    p.add_argument("--task", choices=TASKS, required=True)
    p.add_argument("--hidden", type=int, default=10)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--epochs", type=int, default=50)
    p.add_argument("--batch", type=int, default=64)
    p.add_argument("--optimizer", choices=("adam", "sgd"), default="adam")
    p.add_argument("--out", required=True, help="model file")
    p.add_argument("--log", help="training log (default: <out>.log.jsonl)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="score a model or a baseline")
    common(p, seed=False)
    p.add_argument("--seed", type=int, default=0, help="baseline sampling seed")
    p.add_argument("--model")
    p.add_argument("--manifest", required=True)
    p.add_argument("--embeddings")
    p.add_argument("--split", choices=("train", "dev", "test", "all"), default="test")
    p.add_argument("--baseline", action="store_true", help="score the statistical baseline")
    p.add_argument("--task", choices=TASKS, help="task for --baseline")
    p.add_argument("--out", help="report JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("gradcheck", help="finite-difference check of the backward passes")
    p.add_argument("--family", choices=("tensor_cond", "concat_mlp"), required=True)
    p.add_argument("--task", choices=TASKS + ("both",), default="both")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--instances", type=int, default=20)
    p.add_argument("--corrupt", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser("synth", help="generate a planted synthetic dataset")
    common(p)
    p.add_argument("--dim", type=int, default=16)
    p.add_argument("--nouns", default="dog,cat", help="comma-separated noun list")
    p.add_argument("--aspect", action="append", default=[],
                   help="noun:aspect cell (repeatable; default: every noun gets 'age')")
    p.add_argument("--images", type=int, default=400, help="images per (noun, aspect, polarity)")
    p.add_argument("--separation", type=float, default=6.0)
    p.add_argument("--noise", type=float, default=1.0)
    p.add_argument("--noun-flip", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--published-layout", type=float, metavar="SCALE",
                   help="mirror the published noun/aspect layout at this count scale")
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("experiment", help="synth/compile -> split -> train -> eval from a config")
    common(p, seed=False)
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_experiment)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"fap: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NumericError as exc:
        print(f"fap: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, LookupError, OSError) as exc:
        print(f"fap: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
