"""
Classical spatial baselines
===========================

Ordinary kriging with a fitted variogram, then geographically weighted
regression on the same scatter.
"""
import numpy as np

from oasis.baselines.kriging import (empirical_variogram, fit_variogram,
                                     kriging_fit)
from oasis.baselines.gwr import GwrConfig, gwr_fit_predict

rng = np.random.default_rng(12)
n = 150
lat = rng.uniform(27.40, 27.55, n)
lon = rng.uniform(-80.40, -80.20, n)
s = 35.0 + 12.0 * (lon + 80.40) + 4.0 * (lat - 27.40) + rng.normal(0, 0.05, n)

lags, gammas = empirical_variogram(lat, lon, s)
vg = fit_variogram(lags, gammas)
print(f"variogram: {vg.model}  nugget={vg.nugget:.4f}  sill={vg.sill:.4f}  "
      f"range={vg.range_param:.4f}")

model = kriging_fit(lat, lon, s)
est, var = model.predict(27.47, -80.31)
print(f"kriging at (27.47, -80.31): {est:.3f} psu  (variance {var:.4f})")
est0, var0 = model.predict(lat[0], lon[0])
print(f"at a data point: {est0:.3f} vs observed {s[0]:.3f}, variance {var0:.2e}")


class Pts:
    pass


pts = Pts()
pts.lat, pts.lon, pts.s = lat, lon, s
q = Pts()
q.lat = np.array([27.47, 27.52])
q.lon = np.array([-80.31, -80.25])

res = gwr_fit_predict(pts, q, GwrConfig(use_tide=False))
print(f"gwr bandwidth (LOO CV): {res.bandwidth:.4f} deg")
for (qa, qo, v) in zip(q.lat, q.lon, res.values):
    print(f"  gwr at ({qa}, {qo}): {v:.3f} psu")
