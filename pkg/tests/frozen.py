"""Reference values computed once and frozen.

HEXAGON_MEAN_DISTANCE: mean distance from the center of a uniform point in a
regular hexagon of circumradius 500 m, restricted to distances >= 10 m.
Over the whole hexagon the mean is R * (1/3 + ln(3)/4); removing the central
disk of radius r (area pi r^2, mean distance 2r/3) gives
(A * m - pi r^2 * 2r/3) / (A - pi r^2) with A = 3 sqrt(3) R^2 / 2.
"""

import math

_R, _r = 500.0, 10.0
_A = 3 * math.sqrt(3) / 2 * _R**2
_m = _R * (1 / 3 + math.log(3) / 4)
HEXAGON_MEAN_DISTANCE = (_A * _m - math.pi * _r**2 * 2 * _r / 3) / (_A - math.pi * _r**2)
