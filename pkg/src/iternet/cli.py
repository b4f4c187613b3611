"""Command-line entry point: gen, train, eval, trace, flops.

Every command is deterministic given its flags; errors surface as one-line
messages with a nonzero exit code.  Tables are TSV on stdout, or JSON with
``--json``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .checkpoint import load_checkpoint, save_checkpoint
from .config import RunConfig, load_run_config, run_config_from_dict
from .data import FormatError, Sample, generate_dataset, load_dataset, read_ppm
from .errors import ConfigError, TrainingDiverged
from .flops import count_flops_params
from .model import IterNet, ModelConfig
from .tensor import Rng
from .training import evaluate, trace_samples, train


class CliError(RuntimeError):
    pass


def _load_model(checkpoint_path) -> tuple[IterNet, RunConfig]:
    config_doc, tensors = load_checkpoint(checkpoint_path)
    run_cfg = run_config_from_dict(config_doc)
    model = IterNet(run_cfg.model, Rng(run_cfg.train.seed).derive("init"))
    model.load_state_dict(tensors)
    return model, run_cfg


def _severities(text: str) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in text.split(","))
    except ValueError:
        raise CliError(f"bad severity list {text!r}") from None
    if not vals:
        raise CliError("severity list is empty")
    return vals


def cmd_gen(args) -> int:
    cfg = load_run_config(args.config)
    generate_dataset(
        args.out,
        args.n,
        seed=args.seed,
        min_len=args.min_len,
        max_len=args.max_len,
        severities=_severities(args.severities),
        word_fraction=args.word_fraction,
        split=args.split,
        render_cfg=cfg.render,
    )
    print(f"wrote {args.n} samples to {args.out}")
    return 0


def cmd_train(args) -> int:
    run_cfg = load_run_config(args.config)
    if args.iterations_vm is not None:
        run_cfg.model.iterations_vm = args.iterations_vm
    if args.iterations_lm is not None:
        if args.iterations_lm == 0:
            run_cfg.model.use_lm = False
        else:
            run_cfg.model.use_lm = True
            run_cfg.model.iterations_lm = args.iterations_lm
    if args.no_intermediate_supervision:
        run_cfg.train.intermediate_supervision = False
    run_cfg.model.__post_init__()  # revalidate after overrides

    samples = load_dataset(args.data)
    model = IterNet(run_cfg.model, Rng(run_cfg.train.seed).derive("init"))
    metrics_path = Path(args.metrics) if args.metrics else Path(str(args.out) + ".metrics.tsv")
    metrics_tmp = metrics_path.with_name(metrics_path.name + ".tmp")

    def on_epoch(summary):
        if not args.quiet:
            print(
                f"epoch {summary['epoch']}: lr {summary['lr']:g} "
                f"mean loss {summary['mean_loss']:.4f}",
                flush=True,
            )

    with open(metrics_tmp, "w", encoding="utf-8", newline="\n") as fh:
        train(model, samples, run_cfg.train, metrics_out=fh, on_epoch=on_epoch)
    metrics_tmp.replace(metrics_path)
    save_checkpoint(args.out, run_cfg.to_dict(), model.state_dict())
    print(f"checkpoint written to {args.out}")
    return 0


def cmd_eval(args) -> int:
    model, _ = _load_model(args.checkpoint)
    samples = load_dataset(args.data)
    report = evaluate(
        model,
        samples,
        mode=args.mode,
        collect_per_sample=args.per_sample is not None,
    )
    if args.per_sample is not None:
        with open(args.per_sample, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("label\tprediction\tcorrect\tseverity\n")
            for row in report.per_sample:
                fh.write(
                    f"{row['label']}\t{row['prediction']}\t"
                    f"{int(row['correct'])}\t{row['severity']!r}\n"
                )
    if args.json:
        doc = {
            "mode": args.mode,
            "n_samples": report.n_samples,
            "n_correct": report.n_correct,
            "accuracy": report.accuracy,
            "per_severity": {
                repr(sev): {"n": n, "correct": c, "accuracy": c / n if n else 0.0}
                for sev, (n, c) in report.per_severity.items()
            },
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print("metric\tvalue")
        print(f"mode\t{args.mode}")
        print(f"n_samples\t{report.n_samples}")
        print(f"n_correct\t{report.n_correct}")
        print(f"accuracy\t{report.accuracy!r}")
        for sev, (n, c) in report.per_severity.items():
            print(f"accuracy@severity={sev!r}\t{(c / n if n else 0.0)!r}")
    return 0


def _trace_rows(model, samples):
    rows = trace_samples(model, samples)
    n = model.cfg.iterations_vm
    m = model.cfg.iterations_lm if model.lm is not None else 0
    header = (
        [f"vm_{i}" for i in range(1, n + 1)]
        + [f"fused_{j}" for j in range(1, m + 1)]
        + ["final", "truth"]
    )
    return header, rows


def cmd_trace(args) -> int:
    model, run_cfg = _load_model(args.checkpoint)
    if (args.image is None) == (args.data is None):
        raise CliError("pass exactly one of --image or --data")
    if args.image is not None:
        image = read_ppm(Path(args.image))
        samples = [Sample(image=image, text="", severity=0.0, seed=0)]
    else:
        samples = load_dataset(args.data)
    header, rows = _trace_rows(model, samples)
    if args.json:
        print(json.dumps(rows, indent=2))
    else:
        print("\t".join(header))
        for r in rows:
            print("\t".join(r["vm"] + r["fused"] + [r["final"], r["truth"]]))
    return 0


def cmd_flops(args) -> int:
    run_cfg = load_run_config(args.config)
    tables = {}
    for n in range(1, 5):
        tables[n] = count_flops_params(run_cfg.model, n_iterations=n)
    if args.json:
        doc = {
            str(n): {k: dict(v) for k, v in rep.items()} for n, rep in tables.items()
        }
        print(json.dumps(doc, indent=2, sort_keys=True))
    else:
        print("iterations\tcomponent\tmacs\tparams")
        for n, rep in tables.items():
            for comp, counts in rep.items():
                print(f"{n}\t{comp}\t{counts['macs']}\t{counts['params']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="iternet",
        description="Iterative vision-modeling text recognizer.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="render a synthetic dataset")
    g.add_argument("--config", required=True)
    g.add_argument("--out", required=True)
    g.add_argument("--n", type=int, required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--min-len", type=int, default=3)
    g.add_argument("--max-len", type=int, default=7)
    g.add_argument("--severities", default="0.3,0.6,0.9")
    g.add_argument("--word-fraction", type=float, default=0.7)
    g.add_argument("--split", choices=["train", "test"], default=None)
    g.set_defaults(func=cmd_gen)

    t = sub.add_parser("train", help="train a model on a dataset directory")
    t.add_argument("--config", required=True)
    t.add_argument("--data", required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--metrics", default=None)
    t.add_argument("--iterations-vm", type=int, default=None)
    t.add_argument("--iterations-lm", type=int, default=None)
    t.add_argument("--no-intermediate-supervision", action="store_true")
    t.add_argument("--quiet", action="store_true")
    t.set_defaults(func=cmd_train)

    e = sub.add_parser("eval", help="score a checkpoint on a dataset")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.add_argument("--mode", choices=["vm-only", "full"], default="vm-only")
    e.add_argument("--per-sample", default=None, help="write per-sample TSV here")
    e.add_argument("--json", action="store_true")
    e.set_defaults(func=cmd_eval)

    r = sub.add_parser("trace", help="dump per-iteration predictions")
    r.add_argument("--checkpoint", required=True)
    r.add_argument("--image", default=None)
    r.add_argument("--data", default=None)
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_trace)

    f = sub.add_parser("flops", help="analytic compute/parameter accounting")
    f.add_argument("--config", required=True)
    f.add_argument("--json", action="store_true")
    f.set_defaults(func=cmd_flops)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CliError, ConfigError, FormatError, TrainingDiverged) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except (ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
