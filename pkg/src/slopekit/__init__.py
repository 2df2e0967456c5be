"""slopekit: slopes, Ekeland selections, PLR certificates and determination
experiments on finite metric spaces and Euclidean grids."""

from .convexsets import ConvexSet, EmptySubdifferentialError, min_norm_element
from .determination import (DeterminationInstance, builtin_instances,
                            instance_from_dict, run_determination,
                            run_one_sided, slope_determination_core,
                            verify_subdifferential_equality)
from .ekeland import EkelandResult, ekeland_point, slope_perturbed_min, verify_ekeland
from .fields import CatalogEntry, Field, default_catalog, entry_from_dict, field_from_dict
from .orbit import (MultiMap, Orbit, build_determination_map,
                    check_star_property, orbit_length_bound, run_orbit,
                    verify_orbit)
from .plr import (PlrCertificate, RegularSlopeCertificate, SamplingSpec,
                  add_convex_plr, ball_sample, certify_plr,
                  certify_regular_slope, representation_sequence, scale_plr,
                  sharp_min_transform, verify_series_bound)
from .slope import (SLOPE_CAP, LipEstimate, SlopeEstimate,
                    check_slope_lip_at_min, discrete_slope, grid_slope_sweep,
                    lip_estimate, local_slope_finite)
from .spaces import (DomainError, EuclideanGrid, FiniteMetricSpace, GridSpace,
                     InputError, PreconditionError, load_space,
                     space_from_dict, sublevel_restrict)
from .subdiff import (SubdifferentialOracle, clarke_slope_probe, oracle_for,
                      slope_from_subdifferential, sum_oracle)

__version__ = "0.1.0"
