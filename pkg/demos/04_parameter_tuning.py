"""
Tuning the event durations and the networking share
===================================================

Reproduces the three tuning experiments as data tables: scan duration
against throughput stability, broadcast duration against mean throughput,
and the cost of reserving radio time for networking.
"""

from beaconcast import SimConfig, StateShares, run_sweep

base = SimConfig.from_shares(StateShares(0.5, 0.5, 0.0),
                             transitions_per_node=30_000, seed=3)

# Longer scan bursts catch the same average traffic in burstier clumps:
# the mean stays put while the per-window spread grows.
print("scan duration sweep (time shares held at 0.5/0.5)")
print("t_s ms   mean msg/s   window variance")
result = run_sweep(base, "t_s", [30.0, 60.0, 120.0])
for value, s in zip(result.values, result.summaries):
    print(f"{value:6.0f}   {s.mean_throughput:10.3f}   {s.variance:15.3f}")

# Shorter broadcast passes mean more passes per second, and every pass
# puts one beacon on the listener's channel.
print("\nbroadcast duration sweep")
print("t_b ms   mean msg/s")
result = run_sweep(base, "t_b", [15.0, 30.0, 60.0])
for value, s in zip(result.values, result.summaries):
    print(f"{value:6.0f}   {s.mean_throughput:10.3f}")

# Radio time spent on networking is taken from both broadcasting and
# listening, so the beacon rate drops and silent windows appear.
print("\nnetworking share sweep")
print("p_n    mean msg/s   networking events/s   P(empty window)")
result = run_sweep(base, "p_n", [0.0, 0.25, 0.5])
for value, s in zip(result.values, result.summaries):
    print(f"{value:4.2f}   {s.mean_throughput:10.3f}   "
          f"{s.networking_rate:19.3f}   {s.p_zero_window:15.4f}")
