"""Command-line interface: selection, training, sweeps and analysis.

Exit codes: 0 success, 2 degenerate input signal, 3 training divergence,
64 usage error, 66 missing input file.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import experiments, inr, selection
from .errors import DegenerateSignalError, TrainingDivergedError
from .image_io import load_png, save_png
from .spectrum import spectrum_full, write_spectrum_csv

EXIT_OK = 0
EXIT_DEGENERATE = 2
EXIT_DIVERGED = 3
EXIT_USAGE = 64
EXIT_NOINPUT = 66

MODEL_CHOICES = ("siren", "fourier", "finer", "finer-k0")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def parse_grid_spec(spec: str) -> list[float]:
    """Parse 'start:stop:step' (inclusive) or a comma-separated value list."""
    spec = spec.strip()
    try:
        if ":" in spec:
            start_s, stop_s, step_s = spec.split(":")
            start, stop, step = float(start_s), float(stop_s), float(step_s)
            if step <= 0:
                raise ValueError("step must be positive")
            count = int(np.floor((stop - start) / step + 0.5)) + 1
            values = [round(start + i * step, 10) for i in range(count)]
            values = [v for v in values if v <= stop + 1e-9]
        else:
            values = [float(v) for v in spec.split(",") if v.strip()]
    except ValueError as exc:
        raise _UsageError(f"bad grid spec {spec!r}: {exc}") from exc
    if not values:
        raise _UsageError(f"grid spec {spec!r} produced no candidates")
    if any(b <= a for a, b in zip(values, values[1:])):
        raise _UsageError(f"grid spec {spec!r} is not strictly increasing")
    return values


def _read_config_file(path: Path) -> dict[str, str]:
    """Read a key=value config file; '#' starts a comment."""
    if not path.exists():
        raise FileNotFoundError(f"no such config file: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise _UsageError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()
    return values


def _apply_config_file(parser: argparse.ArgumentParser, values: dict[str, str]) -> None:
    actions = {a.dest: a for a in parser._actions}
    converted = {}
    for key, raw in values.items():
        action = actions.get(key)
        if action is None:
            raise _UsageError(f"unknown config key {key!r}")
        if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
            converted[key] = raw.lower() in ("1", "true", "yes", "on")
        elif action.type is not None:
            try:
                converted[key] = action.type(raw)
            except (TypeError, ValueError) as exc:
                raise _UsageError(f"bad value for config key {key!r}: {raw!r}") from exc
        else:
            converted[key] = raw
    parser.set_defaults(**converted)


def _common_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--image", required=True, help="input PNG (8-bit gray or RGB)")
    p.add_argument("--out", default=".", help="output directory")
    p.add_argument("--seed", type=int, default=0, help="base seed; all randomness derives from it")
    p.add_argument("--config", default=None, help="key=value config file; flags override it")
    p.add_argument("--width", type=int, default=256, help="hidden width of the MLP")
    p.add_argument("--hidden-layers", type=int, default=3, help="number of hidden layers")
    p.add_argument("--jobs", type=int, default=1, help="worker threads for sweeps/scoring")


def _selection_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODEL_CHOICES, default="siren", help="embedding family")
    p.add_argument("--grid", default=None,
                   help="candidate values, 'start:stop:step' or comma list "
                        "(defaults: siren/finer-k0 10:200:10, fourier 1:20:1, finer 0:3:0.1)")
    p.add_argument("--n", type=int, default=selection.DEFAULT_SPECTRUM_SIZE,
                   help="spectrum size (number of frequency entries compared)")
    p.add_argument("--repeats", type=int, default=selection.DEFAULT_REPEATS,
                   help="Wasserstein measurements averaged per candidate")
    p.add_argument("--resolution", type=int, default=selection.DEFAULT_RESOLUTION,
                   help="square working resolution for spectra")


def _training_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--steps", type=int, default=2000, help="optimization steps")
    p.add_argument("--lr", type=float, default=None,
                   help="Adam learning rate (default 1e-4 for sine nets, 1e-3 for fourier)")
    p.add_argument("--log-every", type=int, default=100, help="steps between metric logs")
    p.add_argument("--batch-size", type=int, default=None,
                   help="pixels per step (default: full batch up to 2**18)")


def build_parser() -> _Parser:
    parser = _Parser(prog="freqfit", description=__doc__,
                     formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p_select = sub.add_parser("select", help="pick the embedding configuration matching the image spectrum",
                              formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _common_options(p_select)
    _selection_options(p_select)

    p_train = sub.add_parser("train", help="fit one model to an image",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _common_options(p_train)
    _selection_options(p_train)
    _training_options(p_train)
    p_train.add_argument("--omega0", type=float, default=None, help="siren frequency scale (baseline 30)")
    p_train.add_argument("--sigma", type=float, default=None, help="fourier weight scale (baseline 10)")
    p_train.add_argument("--omega", type=float, default=None, help="finer frequency scale (baseline 30)")
    p_train.add_argument("--k", type=float, default=None, help="finer bias width (baseline 1, 0 removes bias)")
    p_train.add_argument("--fresh", action="store_true",
                         help="run spectrum-matched selection first and train its choice")

    p_sweep = sub.add_parser("sweep", help="grid-search training baseline plus selection comparison",
                             formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    _common_options(p_sweep)
    _selection_options(p_sweep)
    _training_options(p_sweep)

    p_an = sub.add_parser("analyze", help="spectrum, residual and embedding-magnitude reports",
                          formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    p_an.add_argument("--image", default=None, help="input PNG to analyze")
    p_an.add_argument("--checkpoint", action="append", default=[],
                      help="model checkpoint (.npz); repeat for residual ratios (first vs second)")
    p_an.add_argument("--out", default=".", help="output directory")
    p_an.add_argument("--n", type=int, default=selection.DEFAULT_SPECTRUM_SIZE, help="residual spectrum size")
    p_an.add_argument("--resolution", type=int, default=selection.DEFAULT_RESOLUTION,
                      help="square working resolution for spectra")
    p_an.add_argument("--config", default=None, help="key=value config file; flags override it")
    return parser


def _explicit_config(args) -> inr.EmbeddingConfig:
    model = args.model
    if model == "siren":
        if args.omega0 is None:
            raise _UsageError("siren needs --omega0 (or --fresh)")
        return inr.Siren(args.omega0)
    if model == "fourier":
        if args.sigma is None:
            raise _UsageError("fourier needs --sigma (or --fresh)")
        return inr.Fourier(args.sigma)
    if model == "finer":
        if args.k is None:
            raise _UsageError("finer needs --k (or --fresh)")
        return inr.Finer(args.omega if args.omega is not None else selection.FINER_FIXED_OMEGA, args.k)
    if args.omega is None:
        raise _UsageError("finer-k0 needs --omega (or --fresh)")
    return inr.Finer(args.omega, 0.0)


def _build_grid(args) -> selection.CandidateGrid:
    values = parse_grid_spec(args.grid) if args.grid else None
    return selection.make_grid(args.model, values)


def _load_image(path_str: str):
    path = Path(path_str)
    if not path.exists():
        raise FileNotFoundError(f"no such image file: {path}")
    return load_png(path)


def _run_selection(args, image, out_dir: Path) -> selection.SelectionReport:
    grid = _build_grid(args)
    report = selection.select(
        grid, image, n=args.n, repeats=args.repeats, seed=args.seed,
        resolution=args.resolution, hidden_layers=args.hidden_layers,
        width=args.width, jobs=args.jobs,
    )
    report.to_csv(out_dir / "selection.csv")
    report.to_json(out_dir / "selection.json")
    return report


def cmd_select(args) -> int:
    image = _load_image(args.image)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    report = _run_selection(args, image, out_dir)
    chosen = report.scores[report.chosen_index]
    print(f"chosen {report.family} param={chosen.param:g} "
          f"(mean W={chosen.mean:.6g}, se={chosen.se:.3g}) -> {out_dir / 'selection.csv'}")
    return EXIT_OK


def cmd_train(args) -> int:
    image = _load_image(args.image)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.fresh:
        report = _run_selection(args, image, out_dir)
        config = report.chosen
        print(f"selection chose {report.family} param={report.chosen_param:g}")
    else:
        config = _explicit_config(args)
    model, train_report = experiments.train_image(
        config, image, args.steps, args.seed, args.log_every,
        hidden_layers=args.hidden_layers, width=args.width,
        lr=args.lr, batch_size=args.batch_size,
    )
    train_report.to_csv(out_dir / "train.csv")
    inr.save_checkpoint(model, out_dir / "model.npz")
    recon = experiments.predict_image(model, image.height, image.width)
    save_png(recon, out_dir / "reconstruction.png")
    print(f"trained {inr.family_name(config)} {config}: "
          f"final psnr={train_report.final_psnr:.3f} dB ssim={train_report.final_ssim:.4f} "
          f"({train_report.wall_seconds:.1f}s)")
    return EXIT_OK


def cmd_sweep(args) -> int:
    image = _load_image(args.image)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = _build_grid(args)
    sweep = experiments.grid_search(
        grid, image, args.steps, args.seed,
        log_every=args.log_every, hidden_layers=args.hidden_layers,
        width=args.width, lr=args.lr, batch_size=args.batch_size, jobs=args.jobs,
    )
    sweep.to_csv(out_dir / "sweep.csv")
    sel_report = _run_selection(args, image, out_dir)
    chosen_param = sel_report.chosen_param
    chosen_entry = next((e for e in sweep.entries if e.param == chosen_param), None)
    best = sweep.best
    print(f"sweep best param={best.param:g} psnr={best.report.final_psnr:.3f} dB")
    if chosen_entry is not None and not chosen_entry.diverged:
        print(f"selection chose param={chosen_param:g} psnr={chosen_entry.report.final_psnr:.3f} dB "
              f"(gap {best.report.final_psnr - chosen_entry.report.final_psnr:+.3f} dB)")
    else:
        print(f"selection chose param={chosen_param:g} (not trained in this sweep)")
    return EXIT_OK


def _write_ratio_csv(ratio: np.ndarray, path: Path) -> None:
    import csv as _csv

    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(["d", "ratio"])
        for d, v in enumerate(ratio, start=1):
            w.writerow([d, "" if np.isnan(v) else repr(float(v))])


def cmd_analyze(args) -> int:
    if args.image is None and not args.checkpoint:
        raise _UsageError("analyze needs --image and/or --checkpoint")
    out_dir = Path(args.out)
    image = _load_image(args.image) if args.image is not None else None
    models = []
    for ck in args.checkpoint:
        if not Path(ck).exists():
            raise FileNotFoundError(f"no such checkpoint: {ck}")
        models.append(inr.load_checkpoint(ck))
    out_dir.mkdir(parents=True, exist_ok=True)

    from .image_io import resample_square

    if image is not None:
        working = resample_square(image, args.resolution)
        write_spectrum_csv(spectrum_full(working), out_dir / "spectrum_image.csv")
        print(f"wrote {out_dir / 'spectrum_image.csv'} ({args.resolution - 1} rows)")

    for i, model in enumerate(models, start=1):
        rendered = experiments.predict_image(model, args.resolution, args.resolution)
        write_spectrum_csv(spectrum_full(rendered), out_dir / f"spectrum_model_{i}.csv")
        mags = inr.frequency_magnitudes(model)
        import csv as _csv

        with open(out_dir / f"magnitudes_{i}.csv", "w", newline="") as fh:
            w = _csv.writer(fh)
            w.writerow(["i", "magnitude"])
            for j, m in enumerate(mags):
                w.writerow([j, repr(float(m))])
        print(f"wrote spectrum_model_{i}.csv and magnitudes_{i}.csv")

    if image is not None and len(models) == 2:
        pred_a = experiments.predict_image(models[0], image.height, image.width)
        pred_b = experiments.predict_image(models[1], image.height, image.width)
        ratio = experiments.residual_spectrum_ratio(
            pred_a, pred_b, image, args.n, resolution=args.resolution
        )
        _write_ratio_csv(ratio, out_dir / "residual_ratio.csv")
        print(f"wrote {out_dir / 'residual_ratio.csv'}")
    return EXIT_OK


_COMMANDS = {
    "select": cmd_select,
    "train": cmd_train,
    "sweep": cmd_sweep,
    "analyze": cmd_analyze,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        try:
            ns, _ = parser.parse_known_args(argv)
        except _UsageError:
            ns = None
        if ns is not None and getattr(ns, "config", None):
            sub_actions = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
            subparser = sub_actions.choices[ns.command]
            _apply_config_file(subparser, _read_config_file(Path(ns.config)))
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOINPUT
    except DegenerateSignalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except TrainingDivergedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except SystemExit as exc:  # argparse --help
        return int(exc.code or 0)


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
