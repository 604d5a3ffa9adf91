# %% [markdown]
# # The sensor library
#
# Seven sensor models, each either roof-mounted (the two LiDARs) or placed at
# one of twelve clock positions around the car. That gives 62 candidates.

# %%
import math

import numpy as np

from suiteopt import Landmark, Pose2, build_default_library, measurement_sigmas, visible

library = build_default_library()
print(f"{len(library)} candidates")
for e in library:
    if e.clock in (None, 0):
        m = e.model
        print(f"  [{e.id:2d}] {m.label:18s} range {m.range_m:5.0f} m  fov {m.fov_rad:6.4f} rad  "
              f"${m.cost_usd:>9,.0f}")

# %% [markdown]
# Stereo depth noise grows with the square of distance. At 20 m the HD2K
# pair is already worse than 2 m, while a LiDAR stays at centimetres.

# %%
hd2k = library[38]
for z in (2.0, 5.0, 10.0, 20.0):
    sr, sb = measurement_sigmas(hd2k, z)
    print(f"HD2K at {z:4.1f} m: range sigma {sr:7.4f} m, bearing sigma {sb:.2e} rad")
print("LiDAR at 50 m:", measurement_sigmas(library[0], 50.0))

# %% [markdown]
# Clock positions: 12 o'clock looks forward, 3 o'clock to the right.

# %%
car = Pose2(0.0, 0.0, 0.0, 0.0)
targets = {"ahead": Landmark(0, 10, 0), "right": Landmark(1, 0, -10), "behind": Landmark(2, -10, 0)}
for k in (0, 3, 6, 9):
    cam = library[38 + k]
    seen = [name for name, lm in targets.items() if visible(cam, car, lm)]
    print(f"{cam.name:26s} sees {seen}")

# %% [markdown]
# A long-range radar has a cone only 0.07 rad wide: a target 0.05 rad off axis
# at 200 m is missed.

# %%
radar = library[14]
for off in (0.0, 0.03, 0.05):
    lm = Landmark(0, 200 * math.cos(off), 200 * math.sin(off))
    print(f"offset {off:.2f} rad -> visible {visible(radar, car, lm)}")
print("bearing coverage of one radar:", np.degrees(radar.model.fov_rad).round(2), "deg")
