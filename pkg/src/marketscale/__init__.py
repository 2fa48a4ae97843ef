"""Multi-scale analysis of paired monthly stock-index series.

Wavelet trend/fluctuation splitting, Morlet scalograms and coherence,
distributional statistics and Toda-Yamamoto Granger causality.
"""
__version__ = "0.1.0"

from .errors import AnalysisError  # noqa: E402
from .series import TimeSeries, ReturnSeries, log_returns, hurst_rs  # noqa: E402
from .dwt import decompose, dwt_level, idwt, trend_reconstruct  # noqa: E402
from .cwt import ScaleGrid, morlet_cwt, coherence, cross_spectrum, global_power  # noqa: E402
from .causality import ty_causality, multiscale_causality, select_lag, var_fit  # noqa: E402
from .quotes import ingest, monthly_average  # noqa: E402
from .pipeline import PipelineConfig, run_pipeline  # noqa: E402

__all__ = [
    "AnalysisError", "TimeSeries", "ReturnSeries", "log_returns", "hurst_rs",
    "decompose", "dwt_level", "idwt", "trend_reconstruct",
    "ScaleGrid", "morlet_cwt", "coherence", "cross_spectrum", "global_power",
    "ty_causality", "multiscale_causality", "select_lag", "var_fit",
    "ingest", "monthly_average", "PipelineConfig", "run_pipeline",
]
