"""
Closed-form protocol model
==========================

Walks the probabilistic model end to end: from the target time shares to
selection probabilities, on-air probability, collision risk against a
growing swarm, and the expected per-window reception counts.
"""

from beaconcast import (
    ProtocolParams,
    StateShares,
    WindowSpec,
    beacon_probability,
    collision_probability,
    expected_successes,
    interarrival_rate,
    selection_probs,
    steady_state_shares,
)

# Default timings: 30 ms broadcast pass over 13 channels, 60 ms scan on one
# fixed channel, 100 ms networking slot, evaluated over 1 s windows.
p = ProtocolParams()
w = WindowSpec()
print(f"broadcast {p.t_b:.0f} ms, scan {p.t_s:.0f} ms, "
      f"networking {p.t_n:.0f} ms, {p.n_channels} channels")

# Half the time broadcasting, half scanning. Because broadcast events are
# twice as short, the node must pick them twice as often.
shares = StateShares(0.5, 0.5, 0.0)
sel = selection_probs(shares, p)
print(f"shares (0.5, 0.5, 0) need selection probs "
      f"({sel.rho_b:.4f}, {sel.rho_s:.4f}, {sel.rho_n:.4f})")

# The inversion is exact: converting back recovers the shares.
back = steady_state_shares(sel, p)
print(f"round trip: ({back.p_b:.4f}, {back.p_s:.4f}, {back.p_n:.4f})")

# One beacon per channel per pass puts a node on-air on a given channel a
# small fraction of the time; collisions need another node on-air in the
# same millisecond.
p_beacon = beacon_probability(shares, p)
print(f"\non-air probability per channel tick: {p_beacon:.6f}")
print(f"reception gaps fit an exponential with rate "
      f"{interarrival_rate(p):.6f}/ms\n")

print("k nodes   collision prob   expected receptions per link per window")
for k in (2, 5, 10, 25, 50, 100):
    coll = collision_probability(p_beacon, k)
    n_success = expected_successes(shares, p, w, k)
    print(f"{k:7d}   {coll:14.4f}   {n_success:10.3f}")
