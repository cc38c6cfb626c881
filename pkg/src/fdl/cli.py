"""Command-line interface: ``fdl {toy1d,shift-curve,mix,loss,style}``.

Exit codes: 0 success, 1 runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from pathlib import Path

import numpy as np

from . import transport
from .config import RunConfig
from .experiments.images import resize_bilinear
from .experiments.shift import CURVE_KINDS, shift_curve
from .experiments.style import SCHEDULES, style_transfer
from .experiments.toy1d import LOSS_KINDS, gen_toy1d, train_toy1d
from .io import fmt_float, read_image, write_ftns, write_image
from .losses import content_loss, fdl, fdl_features, frequency_features, mse, spatial_swd
from .spectral import mix_frequency

log = logging.getLogger("fdl")

LOSS_CHOICES = ("fdl", "spatial", "mse", "style", "content")


class CliError(Exception):
    """A runtime failure reported on stderr with exit code 1."""


def _csv_writer(path: Path):
    handle = path.open("w", newline="", encoding="utf-8")
    return handle, csv.writer(handle, lineterminator="\n")


def _load(path: str) -> np.ndarray:
    try:
        return read_image(path)
    except FileNotFoundError:
        raise CliError(f"cannot read image {path}: no such file") from None
    except (OSError, ValueError) as exc:
        raise CliError(f"cannot read image {path}: {exc}") from None


def _same_shape(a: np.ndarray, b: np.ndarray, what: str) -> None:
    if a.shape != b.shape:
        raise CliError(f"{what}: input shapes differ: {a.shape} vs {b.shape}")


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _image_name(stem: str, channels: int) -> str:
    return f"{stem}.{'pgm' if channels == 1 else 'ppm'}"


# --------------------------------------------------------------- commands


def cmd_toy1d(cfg: RunConfig, record_time: bool = False) -> int:
    out = _outdir(cfg)
    ds = gen_toy1d(cfg.pairs, cfg.length, cfg.misalign, cfg.seed)
    report = train_toy1d(ds, cfg.loss, cfg.epochs, cfg.seed, cfg.lr)
    handle, writer = _csv_writer(out / "report.csv")
    with handle:
        writer.writerow(["loss_kind", "aligned", "epoch", "train_loss", "final_test_mse", "seconds"])
        seconds = fmt_float(report.seconds) if record_time else ""
        for epoch, value in enumerate(report.train_loss):
            writer.writerow(
                [report.loss_kind, str(report.aligned).lower(), epoch, fmt_float(value),
                 fmt_float(report.final_test_mse), seconds]
            )
    for i, pred in enumerate(report.predictions):
        write_ftns(out / f"pred_{i:03d}.ftns", pred)
    cfg.write(out)
    log.info("toy1d %s: test mse %.6g (untrained %.6g)", cfg.loss, report.final_test_mse, report.untrained_test_mse)
    return 0


def cmd_shift_curve(cfg: RunConfig) -> int:
    image = _load(cfg.image)
    out = _outdir(cfg)
    rows = shift_curve(image, cfg.kinds, cfg.max_shift, cfg.fdl_config())
    handle, writer = _csv_writer(out / "curve.csv")
    with handle:
        writer.writerow(["loss_kind", "shift", "value", "normalized"])
        for r in rows:
            writer.writerow([r.loss_kind, r.shift, fmt_float(r.value), fmt_float(r.normalized)])
    cfg.write(out)
    return 0


def cmd_mix(cfg: RunConfig) -> int:
    amp, pha = _load(cfg.amp), _load(cfg.phase)
    _same_shape(amp, pha, "mix")
    out = _outdir(cfg)
    mixed = mix_frequency(amp, pha).data
    write_ftns(out / "mixed.ftns", mixed)
    write_image(out / _image_name("mixed", mixed.shape[0]), mixed)
    cfg.write(out)
    return 0


def _external_value(cfg: RunConfig) -> float:
    fc_a = cfg.fdl_config(cfg.features_a)
    fc_b = cfg.fdl_config(cfg.features_b)
    if cfg.kind not in ("fdl", "style"):
        raise CliError(f"--extractor external supports --kind fdl or style, not {cfg.kind}")
    fa = frequency_features(None, fc_a)
    fb = frequency_features(None, fc_b)
    return fdl_features(fa, fb, fc_a, cfg.eval_id).item()


def cmd_loss(cfg: RunConfig) -> int:
    if cfg.extractor == "external":
        if not cfg.features_a or not cfg.features_b:
            raise CliError("--extractor external needs --a-features and --b-features")
        value = _external_value(cfg)
    else:
        a, b = _load(cfg.a), _load(cfg.b)
        _same_shape(a, b, "loss")
        fc = cfg.fdl_config()
        if cfg.kind in ("fdl", "style"):
            value = fdl(a, b, fc, cfg.eval_id).item()
        elif cfg.kind == "content":
            value = content_loss(a, b, fc, cfg.eval_id).item()
        elif cfg.kind == "spatial":
            value = spatial_swd(a, b, fc, cfg.eval_id).item()
        else:
            value = mse(a, b).item()
    print(fmt_float(value))
    if cfg.out != ".":
        cfg.write(_outdir(cfg))
    return 0


def cmd_style(cfg: RunConfig) -> int:
    content, style = _load(cfg.content), _load(cfg.style)
    if content.shape[0] != style.shape[0]:
        raise CliError(f"style: channel counts differ: {content.shape} vs {style.shape}")
    if content.shape != style.shape:
        style = resize_bilinear(style, *content.shape[1:])
    out = _outdir(cfg)
    result = style_transfer(
        content, style, cfg.fdl_config(), cfg.alpha, cfg.beta, cfg.steps, cfg.style_lr, schedule=cfg.schedule
    )
    write_image(out / _image_name("stylized", result.image.shape[0]), result.image)
    write_ftns(out / "stylized.ftns", result.image)
    handle, writer = _csv_writer(out / "trace.csv")
    with handle:
        writer.writerow(["step", "objective", "content", "style"])
        for r in result.trace:
            writer.writerow([r.step, fmt_float(r.objective), fmt_float(r.content), fmt_float(r.style)])
    cfg.write(out)
    log.info("style: objective %.6g -> %.6g", result.initial_objective, result.final_objective)
    return 0


# ----------------------------------------------------------------- parser


def _csv_list(kind):
    def parse(text: str):
        try:
            return tuple(kind(p) for p in text.split(",") if p)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid list {text!r}") from None

    return parse


def _common(p: argparse.ArgumentParser, seed_required: bool) -> None:
    p.add_argument("--seed", type=int, required=seed_required, default=0, help="master RNG seed")
    p.add_argument("--lambda", dest="lam", type=float, default=1.0, help="phase weight")
    p.add_argument("--projections", type=int, default=256)
    p.add_argument("--extractor", choices=("identity", "pyramid", "external"), default="identity")
    p.add_argument("--depth", type=int, default=5)
    p.add_argument("--channels", type=_csv_list(int), default=(8, 16, 16, 32, 32))
    p.add_argument("--kernel-size", type=int, default=3)
    p.add_argument("--pyramid-seed", type=int, default=0)
    p.add_argument("--padding", choices=("same-circular", "same-zero"), default="same-circular")
    p.add_argument("--layer-weights", type=_csv_list(float), default=())
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=".")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdl", description="Frequency Distribution Loss tools")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("toy1d", help="train the 1D toy model")
    _common(p, seed_required=True)
    p.add_argument("--loss", choices=LOSS_KINDS, default="freq")
    p.add_argument("--misalign", type=int, default=8, help="max circular shift of targets (0 = aligned)")
    p.add_argument("--epochs", type=int, default=200)
    p.add_argument("--pairs", type=int, default=128)
    p.add_argument("--length", type=int, default=128)
    p.add_argument("--lr", type=float, default=1e-2)
    p.add_argument("--record-time", action="store_true", help="fill the seconds column (breaks byte reproducibility)")

    p = sub.add_parser("shift-curve", help="loss response to circular shifts")
    _common(p, seed_required=True)
    p.add_argument("--image", required=True)
    p.add_argument("--max", dest="max_shift", type=int, default=16)
    p.add_argument("--kinds", type=_csv_list(str), default=("mse", "fdl", "fdl_amplitude"))

    p = sub.add_parser("mix", help="amplitude of one image with the phase of another")
    _common(p, seed_required=False)
    p.add_argument("--amp", required=True)
    p.add_argument("--phase", required=True)

    p = sub.add_parser("loss", help="print one loss value")
    _common(p, seed_required=True)
    p.add_argument("--a", default="")
    p.add_argument("--b", default="")
    p.add_argument("--kind", choices=LOSS_CHOICES, default="fdl")
    p.add_argument("--eval-id", type=int, default=0)
    p.add_argument("--a-features", dest="features_a", type=_csv_list(str), default=())
    p.add_argument("--b-features", dest="features_b", type=_csv_list(str), default=())

    p = sub.add_parser("style", help="style transfer by pixel optimization")
    _common(p, seed_required=True)
    p.add_argument("--content", required=True)
    p.add_argument("--style", required=True)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--steps", type=int, default=300)
    p.add_argument("--lr", dest="style_lr", type=float, default=0.01)
    p.add_argument("--schedule", choices=SCHEDULES, default="cosine", help="step-size schedule")
    return parser


_COMMANDS = {
    "toy1d": cmd_toy1d,
    "shift-curve": cmd_shift_curve,
    "mix": cmd_mix,
    "loss": cmd_loss,
    "style": cmd_style,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    values = {k: v for k, v in vars(args).items() if k not in ("verbose", "record_time")}
    cfg = RunConfig(**values)
    if cfg.command == "shift-curve":
        bad = [k for k in cfg.kinds if k not in CURVE_KINDS]
        if bad:
            parser.print_usage(sys.stderr)
            print(f"fdl shift-curve: unknown kinds {bad}; choose from {CURVE_KINDS}", file=sys.stderr)
            return 2
    if cfg.command == "loss" and cfg.extractor != "external" and not (cfg.a and cfg.b):
        parser.print_usage(sys.stderr)
        print("fdl loss: --a and --b are required", file=sys.stderr)
        return 2
    if cfg.threads < 1:
        print("fdl: --threads must be >= 1", file=sys.stderr)
        return 2
    transport.set_threads(cfg.threads)
    start = time.perf_counter()
    try:
        if cfg.command == "toy1d":
            code = cmd_toy1d(cfg, record_time=args.record_time)
        else:
            code = _COMMANDS[cfg.command](cfg)
    except CliError as exc:
        print(f"fdl {cfg.command}: {exc}", file=sys.stderr)
        return 1
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"fdl {cfg.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    finally:
        transport.set_threads(1)
    log.info("done in %.2fs", time.perf_counter() - start)
    return code


if __name__ == "__main__":
    sys.exit(main())
