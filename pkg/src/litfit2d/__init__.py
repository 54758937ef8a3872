"""Bivariate rational least-squares approximation with clustered poles."""

from .basis import AxisBasisSpec, PolyFamily
from .curved import (
    CurvedApproximant,
    ImplicitCurve,
    build_curved_grid,
    curved_design_matrix,
    eval_curved,
    eval_poly_q,
    fit_curved,
    fit_diagonal,
    grad_q,
    poly_table,
    trace_curve,
)
from .errors import (
    ConfigError,
    DataError,
    LitfitError,
    MemoryGuardError,
    NumericalError,
    ParameterError,
)
from .harness import (
    ConvergenceRow,
    ProblemPreset,
    builtin,
    convergence_sweep,
    fit_preset,
    fit_rate,
    max_error_grid,
    parameter_sweep,
)
from .piecewise import (
    PiecewiseApproximant,
    QuadPatch,
    bilinear_map,
    diagonal_mesh,
    eval_piecewise,
    fit_piecewise,
    inverse_bilinear,
)
from .poles import (
    ClusterSpec,
    PoleSet,
    clustered_samples,
    materialize_poles,
    tapered_offsets,
    uniform_offsets,
)
from .serialize import load_approximant, save_approximant
from .solver import (
    FitReport,
    TsvdOptions,
    tsvd_dense_solve,
    tsvd_kron_solve,
    tsvd_separable_solve,
)
from .tensor_fit import (
    GridSpec,
    TensorApproximant,
    build_sample_grid,
    default_poly_degree,
    eval_tensor,
    eval_tensor_grid,
    fit_tensor,
    fit_tensor_samples,
)

__version__ = "0.1.0"
