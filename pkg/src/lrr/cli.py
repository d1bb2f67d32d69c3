"""Command-line front end.

::

    lrr deblur  [options] IN.pgm OUT.pgm
    lrr inpaint [options] IN.pgm OUT.pgm
    lrr cs      [options] IN.pgm OUT.pgm
    lrr verify

``IN.pgm`` is the clean image; it is degraded with the chosen operator and
seeded noise, restored, and the result written to ``OUT.pgm`` together
with ``OUT.csv`` (per-iteration trace) and ``OUT.txt`` / ``OUT.json``
(report). ``--truth`` scores the trace against a different reference.

Exit status: 0 success, 1 usage or validation error, 2 runtime failure.
"""

import argparse
import logging
import os
import sys

from . import imageio, operators as ops
from .harness import ExperimentSpec, default_config, run_experiment
from .oracles import oracle_suite

log = logging.getLogger("lrr")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; route it through our code instead
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _threads_default():
    env = os.environ.get("LRR_THREADS")
    if env is None or env == "":
        return 1
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"LRR_THREADS must be an integer, got {env!r}") from None


def build_parser():
    parser = _Parser(prog="lrr", description="Group-sparse image restoration with (weighted) nuclear norm shrinkage.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log per-iteration progress")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    for task in ("deblur", "inpaint", "cs"):
        p = sub.add_parser(task, help=f"run the {task} experiment")
        p.add_argument("input", help="clean input image (binary PGM)")
        p.add_argument("output", help="restored image path (binary PGM)")
        p.add_argument("--mode", choices=("wnnm", "nnm"), default="wnnm")
        p.add_argument("--rho", type=float)
        p.add_argument("--epsilon", type=float)
        p.add_argument("--varrho", type=float)
        p.add_argument("--sigma", type=float, help="noise std (default 2 for deblur, 0 otherwise)")
        p.add_argument("--patch", type=int)
        p.add_argument("--stride", type=int)
        p.add_argument("--window", type=int)
        p.add_argument("--k", type=int)
        p.add_argument("--iters", type=int)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, help="SVD worker threads, 0 = all cores (env LRR_THREADS)")
        p.add_argument("--truth", help="reference image for the PSNR trace (default: the input)")
        if task == "deblur":
            p.add_argument("--kernel", choices=sorted(ops.KERNELS), default="uniform9")
            p.add_argument("--kernel-file", help="text kernel: 'rows cols' then values")
        elif task == "inpaint":
            p.add_argument("--missing", type=float, default=0.5)
            p.add_argument("--mask-file", help="PGM mask, 0 = missing, 255 = known")
        else:
            p.add_argument("--ratio", type=float, default=0.3)

    sub.add_parser("verify", help="run the brute-force oracle suite")
    return parser


def _require_file(path):
    if path is not None and not os.path.isfile(path):
        raise UsageError(f"no such file: {path}")


def _spec_from_args(args):
    for path in (args.input, args.truth, getattr(args, "kernel_file", None), getattr(args, "mask_file", None)):
        _require_file(path)
    out_dir = os.path.dirname(os.path.abspath(args.output))
    if not os.path.isdir(out_dir):
        raise UsageError(f"output directory does not exist: {out_dir}")
    task = args.command
    sigma = args.sigma if args.sigma is not None else (2.0 if task == "deblur" else 0.0)
    threads = args.threads if args.threads is not None else _threads_default()
    cfg = default_config(
        task,
        kernel=getattr(args, "kernel", "uniform9"),
        ratio=getattr(args, "ratio", 0.3),
        sigma=sigma,
        mode=args.mode,
        rho=args.rho,
        epsilon=args.epsilon,
        varrho=args.varrho,
        max_iters=args.iters,
        threads=threads,
        seed=args.seed,
        **{k: v for k, v in (("patch_side", args.patch), ("exemplar_stride", args.stride),
                             ("window_side", args.window), ("group_size", args.k)) if v is not None},
    )
    spec = ExperimentSpec(
        task=task,
        image=args.input,
        config=cfg,
        sigma=sigma,
        seed=args.seed,
        output_dir=out_dir,
        stem=os.path.splitext(os.path.basename(args.output))[0],
        kernel=getattr(args, "kernel", "uniform9"),
        kernel_file=getattr(args, "kernel_file", None),
        missing=getattr(args, "missing", 0.5),
        mask_file=getattr(args, "mask_file", None),
        ratio=getattr(args, "ratio", 0.3),
    )
    spec.validate()
    cfg.validate()
    return spec


def _run_task(args, out):
    spec = _spec_from_args(args)
    clean = imageio.read_image(args.input)
    reference = imageio.read_image(args.truth) if args.truth else None
    if reference is not None and reference.shape != clean.shape:
        raise UsageError(f"{args.truth}: shape {reference.shape} does not match input {clean.shape}")
    rep = run_experiment(spec, truth=clean, reference=reference)[spec.config.mode]
    print(f"psnr_observed={rep.psnr_observed:.4f}", file=out)
    print(f"psnr_final={rep.psnr_final:.4f}", file=out)
    print(f"wallclock={rep.wallclock:.2f}", file=out)
    print(f"wrote {rep.outputs['image']}, {rep.outputs['trace']}, {rep.outputs['report']}", file=out)
    return EXIT_OK


def _run_verify(out):
    results = oracle_suite()
    for r in results:
        print(r.line(), file=out)
    ok = all(r.passed for r in results)
    print("oracle suite: " + ("all passed" if ok else "FAILED"), file=out)
    return EXIT_OK if ok else EXIT_RUNTIME


def main(argv=None, out=None):
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError(parser.format_usage().strip())
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(message)s")
        if args.command == "verify":
            return _run_verify(out)
        return _run_task(args, out)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        # validation and format errors carry their own context
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - last-resort runtime failure
        print(f"error: runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
