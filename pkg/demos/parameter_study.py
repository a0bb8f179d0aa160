# Choosing q, N and W for an underwater link.
#
# For a 10 kHz band and a Doppler spread of 1.001 the number of scales N is
# the smallest count whose prototype bandwidth fits under W_max.  The table
# shows how N, W and the spectral efficiency move with q, for three delay
# spreads, and the single-scale case without Doppler.

from odsslab.harness import run_param_study
from odsslab.odss_modem import select_params

B, alpha_max, gamma = 1e4, 1.001, 2.0
q_grid = (1.002001, 1.01, 1.05, 1.1, 1.2, 1.5, 2.0, 3.0, 4.0)

for tau in (0.005, 0.01, 0.02):
    print(f"\ntau_max = {tau * 1e3:g} ms")
    print("       q      N      W (Hz)   W_max (Hz)   M_tot    eta")
    for r in run_param_study(B, (tau,), alpha_max, gamma, q_grid):
        if not r.feasible:
            print(f"{r.q:8.4f}   infeasible")
            continue
        print(f"{r.q:8.4f} {r.N:6d} {r.W:11.3f} {r.W_max:12.3f} {r.M_tot:7d} {r.eta:7.3f}")

p = select_params(B, 0.01, alpha_max, gamma)
print(f"\nsearch with q = alpha_max**2: q = {p.q:.6f}, N = {p.N}, W = {p.W:.3f} Hz, "
      f"eta = {p.eta:.3f}")
p = select_params(B, 0.01, 1.0, gamma)
print(f"no Doppler: q = {p.q:g}, N = {p.N}, W = {p.W:g} Hz (one scale, plain multicarrier)")
