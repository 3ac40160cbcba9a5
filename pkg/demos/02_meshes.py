# %% [markdown]
# Building and checking meshes: the icosphere, the equilateral flat torus and
# OFF round trips.

# %%
import tempfile
from pathlib import Path

from phodge.mesh import build_flat_torus, build_icosphere, load_off, save_off

for level in range(4):
    m = build_icosphere(level)
    print(level, m.counts, "chi =", m.euler_characteristic,
          "well centered:", m.well_centered, f"h = {m.h_max():.4f}")

# %%
# the torus default has unit edges; period=1.0 gives a torus of side one
T = build_flat_torus(8, period=1.0)
print(T.counts, "chi =", T.euler_characteristic, "area =", T.total_volume())

# %%
with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "torus.off"
    save_off(T, path)
    again = load_off(path)
    print("fingerprints agree:", again.fingerprint() == T.fingerprint())

# %%
print(build_icosphere(2).stats())
