"""
Tide heights from a handful of extremes
=======================================

High/low water events are enough to pin down a single-constituent
harmonic.  Fit one, then let it interpolate the day.
"""
import math

import numpy as np

from oasis.tide import fit_sinusoid, parse_predictions
from oasis.tensorize import SEMIDIURNAL_PERIOD_H

OMEGA = 2 * math.pi / SEMIDIURNAL_PERIOD_H

rng = np.random.default_rng(5)
t = np.sort(rng.uniform(0, 2 * SEMIDIURNAL_PERIOD_H * 3600, 10))
h = 0.4 + 0.55 * np.sin(OMEGA * t / 3600 + 1.1) + rng.normal(0, 0.01, 10)

m = fit_sinusoid(t, h)
print(f"amplitude {m.amplitude:.3f} m   phase {m.phase:.3f} rad   "
      f"offset {m.offset:.3f} m")
print(f"period fixed at {m.period_hours:.4f} h (M2)")

# and with the period left free
free = fit_sinusoid(t, h, period_hours=None)
print(f"free-period fit lands on {free.period_hours:.4f} h")

for hour in (0, 3, 6, 9, 12):
    print(f"  t={hour:>2}h  ->  {m.height_at(hour * 3600.0):+.3f} m")

# the station endpoint speaks this dialect
body = ('{"predictions": [{"t": "2016-06-16 03:24", "v": "0.512", "type": "H"},'
        ' {"t": "2016-06-16 09:41", "v": "-0.112", "type": "L"}]}')
events = parse_predictions(body)
print("parsed", len(events), "events, first at", events[0].time.isoformat())
