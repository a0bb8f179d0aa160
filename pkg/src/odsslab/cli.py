"""Command line entry point: ``odsslab <subcommand> [options]``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness as hz
from .waveforms import write_waveforms


def _globals(p: argparse.ArgumentParser, suppress: bool):
    d = argparse.SUPPRESS if suppress else None
    p.add_argument("--config", default=d, help="flat key = value config file")
    p.add_argument("--seed", type=int, default=d, help="base RNG seed")
    p.add_argument("--out", default=d, help="output directory")
    p.add_argument("--trials", type=int, default=d, help="frames per BER point")
    p.add_argument("--workers", type=int, default=d, help="worker processes")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="odsslab", description=__doc__)
    _globals(ap, suppress=False)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "params": "spectral efficiency / bandwidth study over q",
        "ber-snr": "BER versus SNR for every scheme",
        "ber-paths": "BER versus number of paths",
        "ber-alpha": "BER versus Doppler scale spread",
        "ici": "single active subcarrier ICI probe",
        "chanmat": "channel matrices of one channel draw",
        "spectra": "subcarrier spectra of the ODSS bank",
    }
    for name, h in helps.items():
        sp = sub.add_parser(name, help=h)
        _globals(sp, suppress=True)
        if name == "spectra":
            sp.add_argument("--waveforms", action="store_true",
                            help="also write the bank as raw float32 plus header")
    return ap


def _config(args) -> hz.ExperimentConfig:
    return hz.load_config(getattr(args, "config", None), seed=getattr(args, "seed", None),
                          out=getattr(args, "out", None), trials=getattr(args, "trials", None),
                          workers=getattr(args, "workers", None))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = _config(args)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    cmd = args.command
    if cmd == "params":
        rows = hz.run_param_study(cfg.study_B, cfg.study_tau_max, cfg.study_alpha_max,
                                  cfg.study_gamma, cfg.study_q)
        rows += hz.run_param_study(cfg.study_B, cfg.study_tau_max, 1.0, cfg.study_gamma, ())
        path = out / "params.csv"
        hz.write_params_csv(path, rows)
    elif cmd == "ber-snr":
        path = out / "ber_snr.csv"
        hz.write_ber_csv(path, hz.run_ber_vs_snr(cfg))
    elif cmd == "ber-paths":
        path = out / "ber_paths.csv"
        hz.write_ber_csv(path, hz.run_ber_vs_paths(cfg))
    elif cmd == "ber-alpha":
        path = out / "ber_alpha.csv"
        hz.write_ber_csv(path, hz.run_ber_vs_alpha(cfg))
    elif cmd == "ici":
        path = out / "ici_probe.csv"
        hz.write_ici_csv(path, hz.run_ici_probe(cfg))
    elif cmd == "chanmat":
        files = hz.export_channel_matrices(cfg, out=out)
        path = files[0].parent
    elif cmd == "spectra":
        bank = hz.build_scheme("ODSS", cfg).bank
        path = out / "spectra.csv"
        hz.export_spectra(bank, path)
        if args.waveforms:
            write_waveforms(out / "odss_bank", bank)
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
