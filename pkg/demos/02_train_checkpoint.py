"""
Training the imputer and carrying it around
===========================================
"""
import os
import tempfile

from oasis import dan
from oasis.tensorize import SyntheticConfig, generate_synthetic, split_trajectories

traj, _ = generate_synthetic(SyntheticConfig(n_trajectories=10, steps=80,
                                             noise_sigma=0.05, seed=7))
split = split_trajectories(traj, seed=42)
train = traj.subset(split.train_ids)
val = traj.subset(split.val_ids)

cfg = dan.TrainConfig(epochs=8, batch_size=4, d_model=16, n_heads=2,
                      fe_hidden=16, disc_hidden=16, disc_feature_dim=8,
                      seed=42)
model, history = dan.train(train, cfg, val_data=val)

print("epoch  d_loss   mse      val_mae")
for e, (d, m, v) in enumerate(zip(history["d_loss"], history["mse"],
                                  history["val_mae"]), start=1):
    print(f"{e:>4}   {d:.4f}  {m:.4f}   {v:.4f}")

# one point, one answer (tide height in meters)
s = model.predict_single(1466078400.0, 27.47, -80.31, tide=0.2)
print("point estimate:", round(s, 3), "psu")

path = os.path.join(tempfile.mkdtemp(), "model.ckpt")
dan.save_checkpoint(path, model)
loaded = dan.load_checkpoint(path)
print("checkpoint bytes:", os.path.getsize(path))
print("identical after reload:",
      loaded.predict_single(1466078400.0, 27.47, -80.31, tide=0.2) == s)
