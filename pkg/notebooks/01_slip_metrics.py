# %% [markdown]
# # Slip tendencies from a marker field
#
# A tactile sensor reports the displacement of a grid of markers. Two
# numbers summarise it: S1, the mean displacement (tendency to slide), and
# S2, the mean moment of the displacements about the contact normal
# (tendency to twist). This script builds a few synthetic fields and shows
# what the two numbers do.

# %%
import numpy as np

from tacreorient.tactile import LEFT, MarkerField, marker_grid, slip_metrics, tangential_direction

ref, normals = marker_grid(10, 10, half_width=8.0)
n = np.array([0.0, 0.0, 1.0])
to_centroid = ref.mean(axis=0) - ref

# %% [markdown]
# A pure shear moves every marker the same way: S1 picks it up, S2 stays zero.

# %%
shear = MarkerField(LEFT, ref, np.tile([0.15, -0.05, 0.0], (len(ref), 1)), normals)
s = slip_metrics(shear)
print("shear  : S1 =", s.s1.round(4), " S2 =", round(s.s2, 12))
print("         slip direction in the tangent plane:", tangential_direction(s, s.normal).round(4))

# %% [markdown]
# A small twist about the normal is the opposite case. For a rigid rotation
# by theta, S2 equals theta times the mean marker distance from the centroid.

# %%
theta = 0.01
twist = MarkerField(LEFT, ref, theta * np.cross(n, to_centroid), normals)
s = slip_metrics(twist)
print("twist  : S1 =", s.s1.round(12), " S2 =", round(s.s2, 6),
      " theta * mean radius =", round(theta * np.linalg.norm(to_centroid, axis=1).mean(), 6))

# %% [markdown]
# Both metrics are linear in the displacements, so a mixed field is just the sum.

# %%
mixed = MarkerField(LEFT, ref, shear.displacements + twist.displacements, normals)
s = slip_metrics(mixed)
print("mixed  : S1 =", s.s1.round(4), " S2 =", round(s.s2, 6))
