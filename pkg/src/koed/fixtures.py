"""Named benchmark fixtures: the published five- and seven-oscillator
uncertainty classes and the dataset-generation profiles they were drawn from."""

from __future__ import annotations

from .core import UncertaintyClass
from .datagen import GenProfile

N5_CLASS = UncertaintyClass(
    n=5,
    omegas=[-2.50, -0.6667, 1.1667, 2.0, 5.8333],
    lower=[0.7791, 0.4675, 0.5737, 1.0625, 0.7792,
           0.5100, 1.2431, 0.3541, 1.9833, 1.6291],
    upper=[1.0541, 0.6325, 0.7762, 1.4375, 1.0542,
           0.6900, 1.6819, 0.4791, 2.6833, 2.2041],
)

N7_CLASS = UncertaintyClass(
    n=7,
    omegas=[-3.46, -1.96, -0.68, -0.38, -0.37, 6.12, 8.3287],
    lower=[0.073, 0.172, 0.153, 0.054, 0.501, 0.463, 0.043,
           0.015, 0.096, 0.501, 0.103, 0.007, 0.009, 0.139,
           0.408, 0.000, 0.131, 0.119, 0.300, 0.286, 0.131],
    upper=[0.848, 0.988, 1.446, 1.607, 3.820, 0.915, 0.400,
           0.850, 0.419, 4.162, 1.090, 0.122, 0.039, 2.124,
           0.872, 0.007, 2.737, 1.804, 1.360, 0.744, 1.174],
)

PROFILE_N5 = GenProfile(n=5, freq_range=6.0, strong_cap=1.1, weak_cap=0.6,
                        uncertain_cap=0.3)

PROFILE_N7 = GenProfile(n=7, freq_range=10.0, strong_cap=1.2, weak_cap=0.25,
                        uncertain_cap=0.6)

PROFILES = {"n5": PROFILE_N5, "n7": PROFILE_N7}
CLASSES = {"n5": N5_CLASS, "n7": N7_CLASS}
