"""Command-line entry point: ``emtrloc <subcommand> --config FILE --out DIR``."""
from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import experiments as ex
from .config import ConfigError, ExperimentConfig, load_config
from .emtr import NoLocalizationError, locate
from .line import OPEN, FaultScenario
from .oracle import SimulationError, TdScenario, simulate
from .signal import read_waveform_csv, spectrum_of, write_waveform_csv
from .wavelet import NoArrivalError, OutOfLineError

EXIT_OK, EXIT_INPUT, EXIT_NO_LOC = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _snr(text: str) -> float:
    return math.inf if text.strip().lower() in ("inf", "+inf") else float(text)


def _common(p):
    p.add_argument("--config", type=Path, help="key = value experiment file")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int)
    p.add_argument("--snr-db", type=_snr)
    p.add_argument("--method", choices=["emtr1", "emtr2", "emtr3", "wt"])


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="emtrloc", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("synth", "terminal spectra and waveforms for the first fault in the config"),
        ("oracle", "time-stepping reference waveforms for the first fault in the config"),
        ("locate", "locate a fault from terminal waveform CSVs"),
        ("heatmap", "energy profile matrix over true and guessed fault positions"),
        ("table", "location error table"),
        ("sync-sweep", "location errors with a right-terminal clock offset"),
        ("fig8", "terminal amplitude spectra: closed forms against the oracle"),
    ]:
        p = sub.add_parser(name, help=text)
        _common(p)
        if name == "locate":
            p.add_argument("--u0", type=Path, required=True, help="left-terminal waveform CSV")
            p.add_argument("--ul", type=Path, help="right-terminal waveform CSV")
            p.add_argument("--profile-out", type=Path, help="write xprime_m,energy here")
    return parser


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    kw = {}
    if args.seed is not None:
        kw["seed"] = args.seed
    if args.snr_db is not None:
        kw["snr_db"] = args.snr_db
    if args.method is not None:
        kw["methods"] = (args.method.upper(),)
    return cfg.with_overrides(**kw) if kw else cfg


def _zf_tag(z) -> str:
    return "open" if z is OPEN else f"{complex(z).real:g}"


def _synth(cfg, out: Path):
    u0, ul = ex.acquire(cfg, cfg.xf_m[0], cfg.zf_ohm[0])
    u0, ul = ex.noisy_pair(cfg, u0, ul, key=(0, 0, 0))
    write_waveform_csv(out / "u0.csv", u0)
    write_waveform_csv(out / "ul.csv", ul)
    s0, sl = spectrum_of(u0), spectrum_of(ul)
    f = u0.grid.onesided_frequencies / (2 * np.pi)
    with (out / "spectra.csv").open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["freq_hz", "re_u0", "im_u0", "re_ul", "im_ul"])
        for row in zip(f, s0.onesided.real, s0.onesided.imag, sl.onesided.real, sl.onesided.imag):
            w.writerow([f"{v:.17g}" for v in row])


def _oracle(cfg, out: Path):
    td = TdScenario(
        cfg.line(), cfg.terms(), FaultScenario(cfg.xf_m[0], cfg.zf_ohm[0], cfg.source_kind),
        cfg.n_samples * cfg.dt_s, cfg.dt_sim_s,
    )
    res = simulate(td, output_dt=cfg.dt_s)
    write_waveform_csv(out / "u0.csv", res.u0)
    write_waveform_csv(out / "ul.csv", res.ul)
    print(f"x_f_snapped_m,{res.x_f:.17g}\nlength_snapped_m,{res.length_m:.17g}")


def _locate(cfg, args) -> int:
    method = (args.method or "emtr3").upper()
    u0 = read_waveform_csv(args.u0)
    if method in ("EMTR3", "WT"):
        if args.ul is None:
            raise ConfigError(f"{method} needs --ul")
        ul = read_waveform_csv(args.ul)
    else:
        ul = u0
    x_hat, detail = ex.locate_pair(cfg, method, u0, ul)
    if method == "WT":
        p0, pl = detail
        print("t0_s,tl_s,x_hat_m")
        print(f"{p0.t_arrival:.17g},{pl.t_arrival:.17g},{x_hat:.17g}")
        return EXIT_OK
    loc = locate(detail)
    print("method,x_hat_m,margin,skipped_bins")
    print(f"{method},{x_hat:.17g},{loc.margin:.17g},{loc.skipped_bins}")
    if args.profile_out:
        with args.profile_out.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["xprime_m", "energy"])
            for x, e in zip(detail.scan.positions, detail.energy):
                w.writerow([f"{x:.17g}", f"{e:.17g}"])
    return EXIT_OK


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = _config(args)
    out = args.out
    out.mkdir(parents=True, exist_ok=True)
    cmd = args.command
    if cmd == "synth":
        _synth(cfg, out)
    elif cmd == "oracle":
        _oracle(cfg, out)
    elif cmd == "locate":
        return _locate(cfg, args)
    elif cmd == "heatmap":
        for z in cfg.zf_ohm:
            res = ex.run_heatmap(cfg.with_overrides(zf_ohm=(z,)))
            ex.write_heatmap_csv(out / f"heatmap_{res.method.lower()}_zf{_zf_tag(z)}.csv", res)
    elif cmd == "table":
        ex.write_error_table_csv(out / "table.csv", ex.run_error_table(cfg))
    elif cmd == "sync-sweep":
        ex.write_sync_csv(out / "sync_sweep.csv", *ex.run_sync_sweep(cfg))
    elif cmd == "fig8":
        ex.write_fig8_csv(out, ex.run_fig8(cfg))
    return EXIT_OK


def main(argv=None) -> int:
    try:
        code = run(argv)
    except (NoLocalizationError, NoArrivalError, OutOfLineError) as err:
        print(f"no localization: {err}", file=sys.stderr)
        code = EXIT_NO_LOC
    except (ConfigError, ValueError, OSError, SimulationError) as err:
        print(f"error: {err}", file=sys.stderr)
        code = EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
