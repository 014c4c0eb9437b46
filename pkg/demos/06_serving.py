"""
The imputation service, exercised in-process
============================================

create_app gives a plain ASGI app; here it runs against an in-memory
transport, which is also exactly how the test suite drives it.
"""
import asyncio
import os
import tempfile

import httpx

from oasis import dan
from oasis.serve import create_app
from oasis.tide import TideModel
from oasis.tensorize import SyntheticConfig, generate_synthetic, SEMIDIURNAL_PERIOD_H

traj, _ = generate_synthetic(SyntheticConfig(n_trajectories=8, steps=60,
                                             noise_sigma=0.05, seed=9))
model, _ = dan.train(traj, dan.TrainConfig(epochs=3, batch_size=4, d_model=16,
                                           n_heads=2, fe_hidden=16,
                                           disc_hidden=16, disc_feature_dim=8,
                                           seed=1))
ckpt = os.path.join(tempfile.mkdtemp(), "served.ckpt")
dan.save_checkpoint(ckpt, model)

NOON = 1466078400.0  # 2016-06-16T12:00:00Z
tide = TideModel(amplitude=0.5, phase=0.3, offset=0.1,
                 period_hours=SEMIDIURNAL_PERIOD_H,
                 t_min=NOON - 43200, t_max=NOON + 43200)
app = create_app(ckpt, tide_model=tide, admin_token="sesame")


async def main():
    transport = httpx.ASGITransport(app=app)
    async with httpx.AsyncClient(transport=transport,
                                 base_url="http://svc") as c:
        info = (await c.get("/v1/model")).json()
        print("serving model", info["model_version"], "region",
              {k: round(v, 2) for k, v in info["region"].items()
               if k.startswith("l")})

        r = await c.post("/v1/impute", json={
            "timestamp": "2016-06-16T12:00:00Z", "lat": 27.47, "lon": -80.31})
        body = r.json()
        print(f"imputed {body['salinity']:.3f} psu  "
              f"(tide {body['tide_used']:+.3f} m from {body['tide_source']})")

        rows = [{"timestamp": "2016-06-16T12:00:00Z", "lat": 27.47,
                 "lon": -80.31},
                {"timestamp": "2016-06-16T13:00:00Z", "lat": 99.0,
                 "lon": -80.31}]
        batch = (await c.post("/v1/impute/batch", json=rows)).json()
        for row in batch["results"]:
            if row["ok"]:
                print(f"  row {row['index']}: {row['result']['salinity']:.3f}")
            else:
                print(f"  row {row['index']}: {row['error']['code']}: "
                      f"{row['error']['message']}")

        # hot swap to the same file: allowed, version unchanged
        r = await c.post("/v1/model/swap", json={"path": ckpt},
                         headers={"x-admin-token": "sesame"})
        print("swap status:", r.status_code, "->",
              r.json()["model_version"])

asyncio.run(main())
