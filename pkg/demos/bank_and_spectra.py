# Dyadic chirplet bank: layout, cross-correlation floor and per-scale spectra.
#
# Builds the q = 2, N = 7 bank (127 subcarriers over a 1.9 s frame in a
# 1280 Hz band), prints how the subcarriers tile the delay-scale lattice and
# how the 3-dB width grows with scale, and writes the spectra as CSV.

import sys
import numpy as np

from odsslab.harness import export_spectra
from odsslab.waveforms import PHYDYAS_K3, RECTANGULAR, build_bank, correlation_matrix

q, N = 2.0, 7                 # sampling ratio and number of scales
T = 1.9                       # prototype duration (s)
Fs = 2560.0                   # sample rate (Hz)
band = 1280.0                 # occupied bandwidth (Hz)
out = sys.argv[1] if len(sys.argv) > 1 else "bank_spectra.csv"

bank = build_bank(q, N, 1 / T, T, Fs, PHYDYAS_K3, band=band)
print(f"{bank.M_tot} subcarriers, {bank.n_samples} samples per frame")
print(f"band {bank.carrier_hz - band / 2:.2f} .. {bank.carrier_hz + band / 2:.2f} Hz")
print(f"prototype bandwidth {bank.prototype_bandwidth:.3f} Hz")

print("\nscale  count  delay step (ms)")
for n in range(N):
    j = bank.index(n, 0)
    step = (bank.delay[bank.index(n, 1)] - bank.delay[j]) * 1e3 if n else T * 1e3
    print(f"{int(bank.scale[j]):5d}  {np.count_nonzero(bank.n_index == n):5d}  {step:10.2f}")

for name, win in (("PHYDYAS", PHYDYAS_K3), ("rectangular", RECTANGULAR)):
    b = build_bank(q, N, 1 / T, T, Fs, win, band=band)
    C = np.abs(correlation_matrix(b))
    np.fill_diagonal(C, 0)
    print(f"{name:>12s} window: worst cross-correlation {20 * np.log10(C.max()):6.1f} dB")

f, p = export_spectra(bank, out, nfft=1 << 15)
print("\nscale  3-dB width (Hz)")
for n in range(N):
    row = p[bank.index(n, 0)]
    sel = f[row > row.max() - 3]
    print(f"{2 ** n:5d}  {sel.max() - sel.min():8.2f}")
print(f"\nspectra written to {out}")
