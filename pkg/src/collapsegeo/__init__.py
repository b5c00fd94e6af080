"""collapsegeo: volume-collapse analysis on sampled metric measure spaces.

Discretizes surfaces (tori, surfaces of revolution, collapsing families)
into finite metric measure spaces and computes the machinery of volume
collapse: unit-ball volume fields, the collapsing indicator nu, regular
sets, ball-volume comparison diagnostics, collapsing graphs with their star
structure and morphisms, and Gromov-Hausdorff estimates.
"""

from .collapse import (CollapseField, ComparisonReport, bishop_gromov_check,
                       default_radii, nu, nu_values, petersen_wei_deficit,
                       petersen_wei_k, regular_set, semicontinuity_probe,
                       v_field)
from .collapsing_graph import (CollapsingGraph, GraphParams, build_graph,
                               graph_morphism, graph_to_document, star_check)
from .correspond import Correspondence, identity_correspondence
from .generators import (FamilyConfig, TorusSpec, build_family_limit,
                         build_family_member, build_revolution, build_torus,
                         canonical_correspondence, named_profile)
from .gh import (GHEstimate, SizeCapError, epsilon_isometry_check, gh_exact,
                 gh_upper, measured_gh, pointed_gh, volume_exhausted_check)
from .harness import ExperimentConfig, emit_plots, preset, preset_names, run_experiment
from .profiles import Profile, Segment, gauss_curvature, insert_blends
from .space import (PointSubset, Space, SpaceError, ValidationError, ball,
                    ball_volume, closure_approx, components, disjoint_union,
                    distances_from, load_space, save_space, set_distance,
                    validate_space)

__version__ = "0.1.0"
