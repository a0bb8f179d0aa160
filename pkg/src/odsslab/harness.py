"""Experiment driver: parameter studies, BER sweeps, ICI probes and exports.

Every scheme is reduced to the same linear chain

    symbols x --precoder T--> X --bank G--> s --channel--> r --G^H--> Y

so one trial needs the channel applied to the bank columns once; data and
noise are then cheap.  Each scheme carries its own baseband sample rate and
the physical frequency of its baseband DC (``carrier_hz``), which drives the
Doppler rotation in the channel.

All random numbers come from ``numpy.random.default_rng`` seeded with tuples
``(seed, ...)`` so results do not depend on execution order or worker count.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import baselines as bl
from .channel import (ChannelSpec, PathSet, ResamplerConfig, _upsample, calibrate_noise,
                      channel_operator, draw_paths)
from .export import write_matrix_csv
from .odss_modem import (BPSK, DiagChannel, build_transform_matrix, mmse_equalize,
                         select_params, slice_symbols, symbol_prior, w_max)
from .waveforms import (PHYDYAS_K3, RECTANGULAR, SubcarrierBank, build_bank, scale_counts,
                        subcarrier_spectra)

log = logging.getLogger(__name__)

__all__ = [
    "ExperimentConfig",
    "BerRecord",
    "ParamRow",
    "Scheme",
    "build_scheme",
    "load_config",
    "run_param_study",
    "run_ber_vs_snr",
    "run_ber_vs_paths",
    "run_ber_vs_alpha",
    "run_ici_probe",
    "channel_matrices",
    "max_ici_db",
    "export_channel_matrices",
    "export_spectra",
    "write_ber_csv",
    "write_params_csv",
    "write_ici_csv",
]

SCHEMES = ("ODSS", "OTFS", "OFDM")
_SCHEME_ID = {"ODSS": 0, "OTFS": 1, "OFDM": 2}
# stream tags for seeding (SeedSequence entropy must be integers)
_SNR, _PATHS, _ALPHA, _ICI, _CHANMAT = 1, 2, 3, 4, 5


@dataclass(frozen=True)
class ExperimentConfig:
    """All knobs of an experiment (flat, so it maps to a key = value file)."""

    schemes: tuple = SCHEMES
    fs: float = 1280.0
    f_c: float = 12800.0
    bandwidth: float = 1280.0
    window: str = "phydyas"
    # channel
    tau_max: float = 0.01
    alpha_max: float = 1.001
    paths: int = 20
    oversample: int = 8
    rational_tol: float = 1e-5
    sqrt_alpha: bool = False
    # Monte Carlo
    snr_db: tuple = (0.0, 6.0, 12.0, 18.0, 24.0)
    trials: int = 200
    seed: int = 1
    workers: int = 1
    max_retries: int = 3
    # sweeps
    paths_list: tuple = (1, 2, 5, 10, 20)
    paths_snr_db: float = 18.0
    alpha_list: tuple = (1.0, 1.00025, 1.0005, 1.00075, 1.001)
    alpha_snr_db: float = 20.0
    ici_seeds: int = 100
    ici_index: int = 64
    ici_span: int = 2
    # ODSS bank
    odss_q: float = 2.0
    odss_N: int = 7
    odss_T: float = 1.9
    odss_fs: float = 2560.0
    odss_transform: str = "literal"
    # OTFS grid
    otfs_N: int = 8
    otfs_M: int = 16
    # OFDM
    ofdm_n_fft: int = 2560
    ofdm_stride: int = 20
    # parameter study
    study_B: float = 10000.0
    study_gamma: float = 2.0
    study_alpha_max: float = 1.001
    study_tau_max: tuple = (0.005, 0.01, 0.02)
    study_q: tuple = (1.002001, 1.01, 1.05, 1.1, 1.2, 1.3, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0)
    out: str = "out"

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if len(self.snr_db) == 0:
            raise ValueError("SNR list must be non-empty")
        for s in self.schemes:
            if s not in _SCHEME_ID:
                raise ValueError(f"unknown scheme {s!r}")
        if self.window not in ("phydyas", "rectangular"):
            raise ValueError("window must be 'phydyas' or 'rectangular'")
        if self.odss_transform not in ("literal", "unitary"):
            raise ValueError("odss_transform must be 'literal' or 'unitary'")

    @property
    def channel(self) -> ChannelSpec:
        return ChannelSpec(self.tau_max, self.alpha_max, self.paths)

    @property
    def resampler(self) -> ResamplerConfig:
        return ResamplerConfig(oversample=self.oversample, rational_tol=self.rational_tol,
                               sqrt_alpha=self.sqrt_alpha)

    @property
    def pulse_window(self):
        return PHYDYAS_K3 if self.window == "phydyas" else RECTANGULAR

    def replace(self, **kw) -> "ExperimentConfig":
        return dataclasses.replace(self, **kw)


def _parse_value(default, text: str):
    text = text.strip()
    if isinstance(default, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"bad boolean {text!r}")
    if isinstance(default, tuple):
        items = [t.strip() for t in text.split(",") if t.strip()]
        kind = type(default[0]) if default else str
        return tuple(kind(t) if kind is not str else t for t in items)
    return type(default)(text)


def load_config(path=None, **overrides) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments, lists comma separated)."""
    base = ExperimentConfig()
    values = {}
    if path is not None:
        for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, val = line.partition("=")
            key = key.strip()
            if not sep or not hasattr(base, key):
                raise ValueError(f"{path}:{lineno}: unknown or malformed entry {line!r}")
            values[key] = _parse_value(getattr(base, key), val)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return base.replace(**values)


@dataclass(frozen=True)
class BerRecord:
    scheme: str
    snr_db: float
    trials: int
    bits: int
    bit_errors: int
    seed: int
    extra: tuple = ()

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else float("nan")


@dataclass
class Scheme:
    """A linear modem: bank ``G`` (samples x symbols), precoder and decoder."""

    name: str
    G: np.ndarray
    fs: float
    carrier_hz: float
    T: np.ndarray
    T_inv: np.ndarray
    prior: np.ndarray
    bandwidth: float | None
    resampler: ResamplerConfig
    bank: SubcarrierBank | None = None
    _fine: np.ndarray | None = field(default=None, repr=False)

    @property
    def n_samples(self) -> int:
        return self.G.shape[0]

    @property
    def K(self) -> int:
        return self.G.shape[1]

    @property
    def fine(self) -> np.ndarray:
        if self._fine is None:
            self._fine = _upsample(self.G, self.resampler)
        return self._fine

    def received_columns(self, paths: PathSet, cols=None) -> np.ndarray:
        """Noise-free channel output of bank columns over the frame window."""
        S, _ = channel_operator(paths, self.resampler, self.fs, self.n_samples,
                                self.n_samples, self.carrier_hz)
        F = self.fine if cols is None else self.fine[:, cols]
        return S @ F

    def channel_matrix(self, paths: PathSet) -> np.ndarray:
        return self.G.conj().T @ self.received_columns(paths)

    def noise_var(self, n_paths: int, snr_db: float) -> float:
        return calibrate_noise(self.G @ self.T, n_paths, self.fs, self.n_samples / self.fs,
                               snr_db, self.bandwidth)


def _odss_scheme(cfg: ExperimentConfig) -> Scheme:
    q, N, T = cfg.odss_q, cfg.odss_N, cfg.odss_T
    bank = build_bank(q, N, 1.0 / T, T, cfg.odss_fs, cfg.pulse_window, band=cfg.bandwidth)
    Tm, Ti = build_transform_matrix((q, N), variant=cfg.odss_transform)
    return Scheme("ODSS", bank.matrix, cfg.odss_fs, bank.carrier_hz, Tm, Ti,
                  symbol_prior(Tm), cfg.bandwidth, cfg.resampler, bank)


def otfs_grid(cfg: ExperimentConfig) -> bl.OtfsGrid:
    T = cfg.ofdm_n_fft / cfg.fs / cfg.otfs_M
    df = cfg.bandwidth / cfg.otfs_N
    return bl.OtfsGrid(cfg.otfs_N, cfg.otfs_M, T, df, -cfg.bandwidth / 2 + df / 2)


def _otfs_scheme(cfg: ExperimentConfig) -> Scheme:
    grid = otfs_grid(cfg)
    g = bl.otfs_pulse(grid, cfg.fs, cfg.pulse_window)
    G = bl.heisenberg_matrix(g, grid, cfg.fs)
    NM = grid.size
    eye = np.eye(NM).reshape(NM, grid.N, grid.M)
    Tm = np.stack([bl.isfft(e).ravel() for e in eye], axis=1)
    Ti = np.stack([bl.sfft(e.reshape(grid.N, grid.M)).ravel() for e in np.eye(NM)], axis=1)
    return Scheme("OTFS", G, cfg.fs, cfg.f_c, Tm, Ti, symbol_prior(Tm), None, cfg.resampler)


def ofdm_config(cfg: ExperimentConfig) -> bl.OfdmConfig:
    return bl.OfdmConfig(cfg.ofdm_n_fft, cfg.ofdm_stride, cfg.fs, cfg.pulse_window)


def _ofdm_scheme(cfg: ExperimentConfig) -> Scheme:
    oc = ofdm_config(cfg)
    G = bl.ofdm_matrix(oc)
    K = G.shape[1]
    return Scheme("OFDM", G, cfg.fs, cfg.f_c, np.eye(K), np.eye(K), np.ones(K), None,
                  cfg.resampler)


def _scheme_key(cfg: ExperimentConfig):
    return (cfg.fs, cfg.f_c, cfg.bandwidth, cfg.window, cfg.oversample, cfg.rational_tol,
            cfg.sqrt_alpha, cfg.odss_q, cfg.odss_N, cfg.odss_T, cfg.odss_fs, cfg.odss_transform,
            cfg.otfs_N, cfg.otfs_M, cfg.ofdm_n_fft, cfg.ofdm_stride)


@lru_cache(maxsize=8)
def _cached_scheme(name: str, key) -> Scheme:
    cfg = _KEY_CFG[key]
    return {"ODSS": _odss_scheme, "OTFS": _otfs_scheme, "OFDM": _ofdm_scheme}[name](cfg)


_KEY_CFG: dict = {}


def build_scheme(name: str, cfg: ExperimentConfig) -> Scheme:
    """Construct (and cache per process) one of ODSS, OTFS, OFDM."""
    key = _scheme_key(cfg)
    _KEY_CFG.setdefault(key, cfg)
    return _cached_scheme(name, key)


def _bpsk(rng, K):
    return BPSK[rng.integers(0, 2, K)]


def _trial_errors(scheme: Scheme, paths: PathSet, snrs, rng_for) -> list[int]:
    """Bit errors of one frame per SNR (the channel is shared across SNRs)."""
    D = scheme.channel_matrix(paths)
    d = np.diag(D)
    GH = scheme.G.conj().T
    errs = []
    for i, snr in enumerate(snrs):
        rng = rng_for(i)
        x = _bpsk(rng, scheme.K)
        X = scheme.T @ x
        var = scheme.noise_var(len(paths), snr)
        w = rng.standard_normal(scheme.n_samples) + 1j * rng.standard_normal(scheme.n_samples)
        Y = D @ X + GH @ (math.sqrt(var / 2) * w)
        Z = mmse_equalize(Y, DiagChannel(d, var / scheme.prior))
        xh = slice_symbols(scheme.T_inv @ Z)
        errs.append(int(np.count_nonzero(xh != x)))
    return errs


def _run_trial(args):
    """Worker entry: one trial for every requested scheme.

    Returns ``{scheme: [errors per snr]}``.  A failing trial is redrawn with
    a new attempt counter, up to ``max_retries`` times.
    """
    cfg, trial, snrs, spec, tag = args
    out = {}
    for attempt in range(cfg.max_retries + 1):
        try:
            paths = draw_paths(spec, (cfg.seed, *tag, trial, attempt))
            for name in cfg.schemes:
                sch = build_scheme(name, cfg)
                sid = _SCHEME_ID[name]

                def rng_for(i, sid=sid):
                    return np.random.default_rng((cfg.seed, *tag, trial, attempt, sid, i))

                out[name] = _trial_errors(sch, paths, snrs, rng_for)
            return out
        except (ValueError, np.linalg.LinAlgError) as e:
            log.warning("trial %d attempt %d failed: %s", trial, attempt, e)
    raise RuntimeError(f"trial {trial} failed after {cfg.max_retries + 1} attempts")


def _monte_carlo(cfg: ExperimentConfig, snrs, spec: ChannelSpec, tag: tuple):
    jobs = [(cfg, t, tuple(snrs), spec, tag) for t in range(cfg.trials)]
    totals = {name: [0] * len(snrs) for name in cfg.schemes}
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as ex:
            results = ex.map(_run_trial, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers)))
            for res in results:
                for name, e in res.items():
                    totals[name] = [a + b for a, b in zip(totals[name], e)]
    else:
        for job in jobs:
            for name, e in _run_trial(job).items():
                totals[name] = [a + b for a, b in zip(totals[name], e)]
    return totals


def _records(cfg, snrs, totals, extra=()):
    recs = []
    for name in cfg.schemes:
        K = build_scheme(name, cfg).K
        for snr, e in zip(snrs, totals[name]):
            recs.append(BerRecord(name, float(snr), cfg.trials, cfg.trials * K, e, cfg.seed,
                                  extra))
    return recs


def run_ber_vs_snr(cfg: ExperimentConfig) -> list[BerRecord]:
    """BER per scheme and SNR over ``cfg.trials`` random channels."""
    totals = _monte_carlo(cfg, cfg.snr_db, cfg.channel, (_SNR,))
    return _records(cfg, cfg.snr_db, totals)


def run_ber_vs_paths(cfg: ExperimentConfig, P_list=None, snr_db=None) -> list[BerRecord]:
    """BER at one SNR while the number of paths varies."""
    P_list = cfg.paths_list if P_list is None else P_list
    snr = cfg.paths_snr_db if snr_db is None else snr_db
    recs = []
    for P in P_list:
        spec = ChannelSpec(cfg.tau_max, cfg.alpha_max, int(P))
        totals = _monte_carlo(cfg, (snr,), spec, (_PATHS, int(P)))
        recs += _records(cfg, (snr,), totals, (("paths", int(P)),))
    return recs


def run_ber_vs_alpha(cfg: ExperimentConfig, alpha_list=None, snr_db=None) -> list[BerRecord]:
    """BER at one SNR while ``alpha_max`` varies.

    The same random numbers are used at every ``alpha_max`` (only the scale
    interval changes), which keeps the comparison between points tight.
    """
    alpha_list = cfg.alpha_list if alpha_list is None else alpha_list
    snr = cfg.alpha_snr_db if snr_db is None else snr_db
    recs = []
    for a in alpha_list:
        spec = ChannelSpec(cfg.tau_max, float(a), cfg.paths)
        totals = _monte_carlo(cfg, (snr,), spec, (_ALPHA,))
        recs += _records(cfg, (snr,), totals, (("alpha_max", float(a)),))
    return recs


@dataclass(frozen=True)
class IciSample:
    scheme: str
    seed: int
    index: int
    value: complex
    rel_db: float


def run_ici_probe(cfg: ExperimentConfig, index: int | None = None, schemes=None):
    """Outputs around one active subcarrier over ``cfg.ici_seeds`` channels.

    Only subcarrier ``index`` carries a unit symbol; the noise-free matched
    filter outputs at ``index - span .. index + span`` are recorded with
    their level relative to the active output.
    """
    index = cfg.ici_index if index is None else index
    schemes = [s for s in ("OFDM", "OTFS", "ODSS") if s in cfg.schemes] if schemes is None \
        else schemes
    out = []
    for s in range(cfg.ici_seeds):
        paths = draw_paths(cfg.channel, (cfg.seed, _ICI, s))
        for name in schemes:
            sch = build_scheme(name, cfg)
            if not 0 <= index < sch.K:
                raise ValueError(f"index {index} outside the {name} grid")
            r = sch.received_columns(paths, [index])[:, 0]
            lo, hi = max(0, index - cfg.ici_span), min(sch.K, index + cfg.ici_span + 1)
            y = sch.G[:, lo:hi].conj().T @ r
            ref = abs(y[index - lo])
            for i, v in zip(range(lo, hi), y):
                rel = 20 * math.log10(abs(v) / ref) if v != 0 and ref > 0 else -math.inf
                out.append(IciSample(name, s, i, complex(v), rel))
    return out


def channel_matrices(cfg: ExperimentConfig, seed: int | None = None) -> dict:
    """Channel matrices for one channel draw.

    Keys: ``odss_delay_scale`` (``G^H C G`` on the ODSS bank),
    ``odss_mellin_fourier`` (``T^-1 D T``), ``otfs_time_frequency`` and
    ``ofdm_frequency``.
    """
    seed = cfg.seed if seed is None else seed
    paths = draw_paths(cfg.channel, (seed, _CHANMAT))
    odss = build_scheme("ODSS", cfg)
    D = odss.channel_matrix(paths)
    return {
        "odss_delay_scale": D,
        "odss_mellin_fourier": odss.T_inv @ D @ odss.T,
        "otfs_time_frequency": build_scheme("OTFS", cfg).channel_matrix(paths),
        "ofdm_frequency": build_scheme("OFDM", cfg).channel_matrix(paths),
        "paths": paths,
    }


def max_ici_db(D) -> float:
    """Largest off-diagonal magnitude relative to the largest diagonal entry (dB)."""
    D = np.asarray(D)
    off = np.abs(D - np.diag(np.diag(D))).max()
    return 20 * math.log10(off / np.abs(np.diag(D)).max())


def export_channel_matrices(cfg: ExperimentConfig, seed: int | None = None, out=None):
    """Write dB-magnitude CSVs (``row,col,mag_db``) of :func:`channel_matrices`."""
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    mats = channel_matrices(cfg, seed)
    files = []
    for key in ("odss_delay_scale", "odss_mellin_fourier", "otfs_time_frequency",
                "ofdm_frequency"):
        p = out / f"chanmat_{key}.csv"
        write_matrix_csv(p, mats[key], kind="db", floor_db=-200.0)
        files.append(p)
    from .channel import write_pathset
    write_pathset(out / "chanmat_paths.csv", mats["paths"])
    return files


def export_spectra(bank: SubcarrierBank, path, nfft: int = 4096, margin_hz: float = 60.0):
    """Per-subcarrier power spectra (``subcarrier,freq_hz,power_db``).

    Only frequencies within ``margin_hz`` of the occupied band are written.
    """
    f, p = subcarrier_spectra(bank, nfft)
    lo = bank.carrier_hz - bank.band / 2 - margin_hz
    hi = bank.carrier_hz + bank.band / 2 + margin_hz
    keep = (f >= lo) & (f <= hi)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["subcarrier", "freq_hz", "power_db"])
        for j in range(bank.M_tot):
            for fv, pv in zip(f[keep], p[j, keep]):
                w.writerow([j, f"{fv:.6f}", f"{pv:.4f}"])
    return f[keep], p[:, keep]


@dataclass(frozen=True)
class ParamRow:
    tau_max: float
    q: float
    N: int
    W: float
    W_max: float
    M_tot: int
    eta: float
    feasible: bool


def _param_row(B, tau_max, alpha_max, gamma, q, n_cap=4096) -> ParamRow:
    if alpha_max == 1 or q == 1:
        p = select_params(B, tau_max, 1.0, gamma)
        return ParamRow(tau_max, 1.0, 1, p.W, p.W_max, 1, p.eta, True)
    for N in range(1, n_cap + 1):
        W = B * (q - 1) / (q ** N - 1)
        wm = w_max(q, N, alpha_max, tau_max)
        if W < wm:
            M = int(scale_counts(q, N).sum())
            return ParamRow(tau_max, q, N, W, wm, M, M * W / (gamma * B), True)
    return ParamRow(tau_max, q, 0, math.nan, math.nan, 0, math.nan, False)


def run_param_study(B: float, tau_max_list, alpha_max: float, gamma: float, q_grid,
                    n_cap: int = 4096) -> list[ParamRow]:
    """Chosen ``N``, ``W``, ``W_max``, ``M_tot`` and ``eta`` over a grid of ``q``.

    With ``alpha_max = 1`` the single degenerate row per delay spread is
    returned.  Rows with no admissible ``N`` are flagged ``feasible=False``.
    """
    rows = []
    for tau in tau_max_list:
        if alpha_max == 1:
            rows.append(_param_row(B, tau, 1.0, gamma, 1.0))
            continue
        for q in q_grid:
            if q <= 1:
                raise ValueError("q grid must be > 1")
            rows.append(_param_row(B, tau, alpha_max, gamma, float(q), n_cap))
    return rows


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_ber_csv(path, records) -> None:
    """BER CSV; sweep records carry one extra trailing column."""
    records = list(records)
    head = ["scheme", "snr_db", "trials", "bits", "bit_errors", "ber", "seed"]
    extra = [k for k, _ in records[0].extra] if records else []
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(head + extra)
        for r in records:
            w.writerow([r.scheme, _fmt(r.snr_db), r.trials, r.bits, r.bit_errors,
                        _fmt(r.ber), r.seed] + [_fmt(v) for _, v in r.extra])


def read_ber_csv(path) -> list[dict]:
    with open(path, newline="") as f:
        return list(csv.DictReader(f))


def write_params_csv(path, rows) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["tau_max", "q", "N", "W", "W_max", "M_tot", "eta", "feasible"])
        for r in rows:
            w.writerow([_fmt(r.tau_max), _fmt(r.q), r.N, _fmt(r.W), _fmt(r.W_max), r.M_tot,
                        _fmt(r.eta), int(r.feasible)])


def write_ici_csv(path, samples) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["scheme", "seed", "subcarrier", "re", "im", "rel_db"])
        for s in samples:
            w.writerow([s.scheme, s.seed, s.index, _fmt(float(s.value.real)),
                        _fmt(float(s.value.imag)), f"{s.rel_db:.6f}"])


def default_workers() -> int:
    return max(1, (os.cpu_count() or 1))
