# Monte-Carlo BER of ODSS, OTFS and OFDM with one-tap MMSE equalizers.
#
# Every trial draws a fresh 20-path wideband channel, sends one BPSK frame
# per scheme and SNR, and counts the bit errors after slicing.  The trial
# count is small here; the CLI ``odsslab ber-snr`` runs the full sweep.

import sys
import time

from odsslab.harness import ExperimentConfig, run_ber_vs_snr, write_ber_csv

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
cfg = ExperimentConfig(trials=trials, snr_db=(0.0, 6.0, 12.0, 18.0, 24.0))

t0 = time.perf_counter()
recs = run_ber_vs_snr(cfg)
print(f"{trials} trials per point in {time.perf_counter() - t0:.0f} s\n")

print("SNR (dB)" + "".join(f"{s:>12s}" for s in cfg.schemes))
for snr in cfg.snr_db:
    row = {r.scheme: r.ber for r in recs if r.snr_db == snr}
    print(f"{snr:8.0f}" + "".join(f"{row[s]:12.3e}" for s in cfg.schemes))

write_ber_csv("ber_snr_demo.csv", recs)
print("\nwritten: ber_snr_demo.csv")
