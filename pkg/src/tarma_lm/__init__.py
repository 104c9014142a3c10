"""Lagrange-multiplier test of an IMA(1,1) unit root against threshold regulation.

The null is ``X_t = phi0 + X_{t-1} + e_t - theta e_{t-1}``; the alternative is a
two-regime TARMA(1,1) whose lower regime departs from the random walk.
"""

from .bootstrap import wild_bootstrap_pvalue
from .exceptions import (
    DegenerateInputError,
    InvalidSpecError,
    MissingTableError,
    NearNoninvertibleWarning,
    NoAdmissibleThresholdError,
    TableFormatError,
    TarmaError,
    TooShortError,
    UnsupportedSpecError,
    UntestableSeriesError,
)
from .ima_fit import ImaFit, fit_ima11, residuals_under_h0
from .model_sim import (
    DgpId,
    NoiseSpec,
    Regime,
    TarmaSpec,
    classify_regime,
    simulate_dgp,
    simulate_ima,
    simulate_tarma,
)
from .null_dist import (
    ASYMPTOTIC,
    NullTable,
    build_null_table,
    default_table,
    load_table,
    pvalue_from_table,
    sample_brownian_functional,
    save_table,
)
from .series import TimeSeries, read_series_csv, write_series_csv
from .suplm import SupLmResult, lm_stat_at, sup_lm, sup_lm_above
from .tarma_fit import TarmaFit, fit_tarma11

__version__ = "0.1.0"
