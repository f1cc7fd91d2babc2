"""proxlab: fundamental regularizations of variational analysis on grids.

Moreau envelopes, proximal mappings and hulls, Lasry-Lions envelopes,
discrete conjugates, convex hulls, infimal convolutions, and the proximal
average of two prox-bounded functions, with closed-form quadratic oracles
and a diagnostics suite verifying the defining identities numerically.
"""

from .errors import (
    AllInfinite,
    AlphaEndpoint,
    DegreeTooHigh,
    GridMismatch,
    HeuristicThreshold,
    LambdaAboveThreshold,
    MathDomainError,
    MuAboveThreshold,
    NotPositiveDefinite,
    NotProxBounded,
    ParameterOrder,
    ParseError,
    ProxlabError,
    SetValuedProx,
    SingularMatrix,
    UnknownBuiltin,
)
from .func_model import (
    Builtin,
    FunctionDescriptor,
    GridFunction,
    GridSpec,
    IndicatorPoint,
    Piecewise1D,
    QuadraticFunction,
    SampleArray,
    builtin_descriptor,
    evaluate,
    parse_descriptor,
    prox_threshold,
    sample_to_grid,
    serialize_descriptor,
)
from .prox_average import (
    AverageParams,
    AverageResult,
    alpha_sweep,
    minkowski_prox_combination,
    mu_sweep,
    prox_of_average,
    proximal_average,
    proximal_average_infconv,
)
from .quadratic import (
    QuadResult,
    quad_limits,
    quad_moreau,
    quad_mu_inf_limit,
    quad_prox,
    quad_prox_average,
    quad_threshold,
)
from .transforms import (
    Interval,
    MinimizerSet,
    ProbeResult,
    ProximalityCheck,
    clarke_subdiff_envelope,
    convex_hull_grid,
    discrete_conjugate,
    inf_convolution,
    is_lambda_proximal,
    lasry_lions,
    lower_convex_envelope_1d,
    moreau_envelope,
    prox_lipschitz_probe,
    prox_map,
    proximal_hull,
    resolvent_1d,
)

__version__ = "0.1.0"
