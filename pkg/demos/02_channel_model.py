"""Downlink channel model: path loss, SINR, LoS probability, hover time.

Reference parameters: 1 W transmit power, 2 GHz carrier, 1 MHz bandwidth,
-170 dBm/Hz noise density, free-space path loss, 20 dB NLoS penalty.
"""

import math

from uavdeploy import ChannelParams, LinkState, hover_time, noise_power, p_los, rate, received_power, sinr
from uavdeploy.channel import watts_to_dbm

params = ChannelParams()
print(f"noise power over {params.bandwidth_hz/1e6:.0f} MHz: "
      f"{noise_power(params):.3e} W = {watts_to_dbm(noise_power(params)):.1f} dBm")
print(f"path-loss constant (free space at 1 m): {params.ref_gain:.4e}")

print("\nreceived power vs distance (LoS / NLoS):")
for d in (50, 100, 200, 400):
    los = received_power(params, LinkState(d, los=True))
    nlos = received_power(params, LinkState(d, los=False))
    print(f"  {d:>4} m: {watts_to_dbm(los):7.1f} dBm   {watts_to_dbm(nlos):7.1f} dBm")

print("\nSINR with one interferer at 300 m:")
interferer = [LinkState(300.0)]
for d in (50, 100, 200):
    g = sinr(params, LinkState(float(d)), interferer)
    print(f"  serving at {d:>3} m: {g:6.1f} dB -> rate {rate(params, g)/1e6:6.2f} Mbps")

print("\nLoS probability vs elevation angle (b1 = 0.36, b2 = 0.21):")
for deg in (10, 15, 30, 45, 60, 90):
    p = p_los(params, math.radians(deg))
    print(f"  {deg:>3} deg: {p:.3f}")

# hover time: 10 Mb per user over whatever rate each link sustains
loads = [1e7, 1e7, 1e7]
rates = [rate(params, g) for g in (20.0, 10.0, 3.0)]
print(f"\nhover time for 3 users at 20/10/3 dB: {hover_time(loads, rates):.2f} s")
