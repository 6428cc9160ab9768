"""One-sided dyadic maximal operators, restricted weight classes and weak-type certificates on grids."""

from .classes import (ClassConstant, a1_pointwise_check, muckenhoupt_constant, restricted_constant,
                      restricted_profile, truncate_pair)
from .covering import (band_partition, certify_depth_bound, cover_lattice, covering_select_2d,
                       depth_decompose, select_level_set_cubes)
from .dyadic import (Box, DyadicCube, anchored_square, contains, corner_square, minus_neighbor, plus2,
                     plus_neighbor, subsquare, tilde)
from .grid import CellSet, GridDomain, WeightField, WeightPair, measure
from .harness import sharpness_search, verify_2d_weak_type, verify_dyadic_weak_type, verify_necessity
from .maximal import (MaximalResult, anchored_maximal, dyadic_minus_maximal, dyadic_plus_maximal, level_set,
                      onesided_maximal_2d, subsquare_maximal_2d)
from .report import StepCheck, VerifyReport

__version__ = "0.1.0"
