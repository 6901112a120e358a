"""Neural delay differential equations.

Euler integration with constant or supplied history, the equivalent dense
residual network, exact embedding constructions, small-delay analysis of the
linear delay equation, critical-point tooling and parameter-region labels.
"""
__version__ = "0.1.0"

from .dde_core import (  # noqa: E402
    HistoryView,
    TimeGrid,
    Trajectory,
    VectorFieldSpec,
    elementwise_field,
    euler_solve,
    evaluate_delayed,
    growth_bound_check,
    linear_delay_field,
    make_grid,
    multi_delay_field,
    tanh_delay_field,
    zero_field,
)
from .delay_lib import BumpSpec, DelayFunctionSpec, bump_eval, delay_eval, grid_alignment_table  # noqa: E402
from .dense_resnet import DenseResNetSpec, dense_forward, discretize  # noqa: E402
from .embedding import (  # noqa: E402
    TargetMap,
    embed_augmented,
    embed_basic_tauT,
    embed_nonaugmented,
    parse_target,
)
from .errors import *  # noqa: E402,F401,F403
from .morse import (  # noqa: E402
    classify_critical_point,
    normal_form_eval,
    rank_deficient_witness,
    separation_constants,
)
from .neural_dde import (  # noqa: E402
    AffineMap,
    NeuralDDESpec,
    classify_architecture,
    in_full_rank_set,
    ndde_forward,
    parameterized_gap_bound,
)
from .regions import RegionQuery, classify_region, sweep_regions  # noqa: E402
from .small_delay import (  # noqa: E402
    characteristic_roots,
    extend_field_weakly_nonlinear,
    lambert_w,
    linear_dde_closed_form,
    measure_attraction,
    smallness_check,
    special_ode_field_linear,
    special_solution_linear,
)
