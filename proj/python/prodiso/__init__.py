from ._prodiso import (
    Error,
    boundary_measure,
    cdf,
    clt_upper_bound,
    compute_c,
    coordinate_stability,
    density,
    design_bump,
    noncoordinate_stability,
    perturbation_slopes,
    profile_1d,
    quantile,
    spectral_gap,
    variance,
)
