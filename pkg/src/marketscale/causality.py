"""Unit roots, bivariate VARs and Toda-Yamamoto Granger causality.

The VAR is fitted equation by equation with regressors ordered
``[1, own lags, cross lags]``. Both equations share the same information
set, so this is the usual multivariate OLS, and it makes the whole
procedure symmetric: swapping the two input series swaps every result
bit for bit.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from .descriptive import TestResult
from .errors import (
    AnalysisError,
    DiagnosticsFailed,
    InsufficientData,
    InvalidHorizon,
    LengthMismatch,
    OrderNotFound,
    SingularRegression,
)

K = 2  # bivariate throughout

# Fuller's Dickey-Fuller quantiles as tabulated by R's fUnitRoots/tseries
_DF_SIZES = np.array([25.0, 50.0, 100.0, 250.0, 500.0, 100000.0])
_DF_PROBS = np.array([0.01, 0.025, 0.05, 0.10, 0.90, 0.95, 0.975, 0.99])
_DF_TABLES = {
    "none": np.array([
        [-2.66, -2.26, -1.95, -1.60, 0.92, 1.33, 1.70, 2.16],
        [-2.62, -2.25, -1.95, -1.61, 0.91, 1.31, 1.66, 2.08],
        [-2.60, -2.24, -1.95, -1.61, 0.90, 1.29, 1.64, 2.03],
        [-2.58, -2.23, -1.95, -1.62, 0.89, 1.29, 1.63, 2.01],
        [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
        [-2.58, -2.23, -1.95, -1.62, 0.89, 1.28, 1.62, 2.00],
    ]),
    "drift": np.array([
        [-3.75, -3.33, -3.00, -2.63, -0.37, 0.00, 0.34, 0.72],
        [-3.58, -3.22, -2.93, -2.60, -0.40, -0.03, 0.29, 0.66],
        [-3.51, -3.17, -2.89, -2.58, -0.42, -0.05, 0.26, 0.63],
        [-3.46, -3.14, -2.88, -2.57, -0.42, -0.06, 0.24, 0.62],
        [-3.44, -3.13, -2.87, -2.57, -0.43, -0.07, 0.24, 0.61],
        [-3.43, -3.12, -2.86, -2.57, -0.44, -0.07, 0.23, 0.60],
    ]),
    "trend": np.array([
        [-4.38, -3.95, -3.60, -3.24, -1.14, -0.80, -0.50, -0.15],
        [-4.15, -3.80, -3.50, -3.18, -1.19, -0.87, -0.58, -0.24],
        [-4.04, -3.73, -3.45, -3.15, -1.22, -0.90, -0.62, -0.28],
        [-3.99, -3.69, -3.43, -3.13, -1.23, -0.92, -0.64, -0.31],
        [-3.98, -3.68, -3.42, -3.13, -1.24, -0.93, -0.65, -0.32],
        [-3.96, -3.66, -3.41, -3.12, -1.25, -0.94, -0.66, -0.33],
    ]),
}
ADF_P_BOUNDS = (0.01, 0.99)

_KPSS_PROBS = np.array([0.10, 0.05, 0.025, 0.01])
_KPSS_CRIT = {
    False: np.array([0.347, 0.463, 0.574, 0.739]),
    True: np.array([0.119, 0.146, 0.176, 0.216]),
}
KPSS_P_BOUNDS = (0.01, 0.10)

CRITERIA = ("aic", "hq", "sc", "fpe")
DEFAULT_HORIZON = 16


@dataclass(frozen=True)
class UnitRootResult:
    test: str  # "ADF", "KPSS" or "KPSS-trend"
    variant: Optional[str]
    lag: int
    statistic: float
    p_value: float
    reject_null: bool


@dataclass(frozen=True)
class VarModel:
    lag_order: int
    intercept: np.ndarray
    coefficient_matrices: List[np.ndarray]  # A_i[k, j]: effect of variable j at lag i on k
    residuals: np.ndarray  # (T, 2)
    residual_covariance: np.ndarray  # RSS cross-products / (T - 2p - 1)
    equations: Tuple["_Equation", "_Equation"] = field(repr=False, default=None)

    @property
    def nobs(self) -> int:
        return self.residuals.shape[0]


@dataclass(frozen=True)
class LagSelection:
    lags: List[int]
    table: Dict[str, List[float]]
    chosen: Dict[str, int]
    nobs: int


@dataclass(frozen=True)
class Diagnostics:
    lag: int
    horizon: int
    portmanteau: TestResult
    max_modulus: float
    stable: bool
    passed: bool


@dataclass
class CausalityReport:
    """Audit trail of one Toda-Yamamoto run.

    ``wald_x_to_y`` tests "x does not Granger-cause y". Wald fields are None
    when diagnostics fail or the regression is singular.
    """

    labels: Tuple[str, str]
    integration_order: Optional[int] = None
    unit_roots: Dict[str, List[UnitRootResult]] = field(default_factory=dict)
    lag_selection: Optional[LagSelection] = None
    criterion: str = "aic"
    selected_lag: Optional[int] = None
    diagnostics: List[Diagnostics] = field(default_factory=list)
    tested_lag: Optional[int] = None
    augmented_lag: Optional[int] = None
    wald_x_to_y: Optional[TestResult] = None
    wald_y_to_x: Optional[TestResult] = None
    status: str = "pending"
    error: Optional[str] = None

    def to_dict(self) -> dict:
        return asdict(self)


# --------------------------------------------------------------------- OLS


@dataclass(frozen=True)
class _Equation:
    coef: np.ndarray
    resid: np.ndarray
    xtx_inv: np.ndarray
    sigma2: float  # RSS / (T - k)


def _ols(y: np.ndarray, z: np.ndarray) -> _Equation:
    t, k = z.shape
    if t <= k:
        raise InsufficientData(f"{t} observations for {k} regressors")
    # scale-free rank test so raw index levels and normalised data agree
    norms = np.linalg.norm(z, axis=0)
    if np.any(norms == 0) or np.linalg.matrix_rank(z / norms) < k:
        raise SingularRegression("regressors are collinear")
    q, r = np.linalg.qr(z)
    coef = np.linalg.solve(r, q.T @ y)
    resid = y - z @ coef
    r_inv = np.linalg.solve(r, np.eye(k))
    return _Equation(coef, resid, r_inv @ r_inv.T, float(resid @ resid / (t - k)))


def _lags(x: np.ndarray, p: int, start: int) -> np.ndarray:
    """Columns ``x[t-1], ..., x[t-p]`` for ``t = start..n-1``."""
    n = x.size
    return np.column_stack([x[start - i:n - i] for i in range(1, p + 1)])


def _equation(own: np.ndarray, other: np.ndarray, p: int, start: int) -> _Equation:
    z = np.column_stack([np.ones(own.size - start), _lags(own, p, start), _lags(other, p, start)])
    return _ols(own[start:], z)


def _pair(x, y) -> Tuple[np.ndarray, np.ndarray]:
    x = np.asarray(getattr(x, "values", x), dtype=float)
    y = np.asarray(getattr(y, "values", y), dtype=float)
    if x.shape != y.shape:
        raise LengthMismatch(f"lengths differ: {x.size} vs {y.size}")
    return x, y


# --------------------------------------------------------------- unit roots


def _adf_pvalue(stat: float, nobs: int, variant: str) -> float:
    table = _DF_TABLES[variant]
    row = np.array([np.interp(nobs, _DF_SIZES, table[:, j]) for j in range(_DF_PROBS.size)])
    p = np.interp(stat, row, _DF_PROBS)
    return float(np.clip(p, *ADF_P_BOUNDS))


def adf_test(series, lag: int, variant: str = "drift") -> UnitRootResult:
    """Augmented Dickey-Fuller tau test of a unit root.

    Regresses ``dy_t`` on ``y_{t-1}``, ``lag`` lagged differences and, by
    ``variant``, nothing (``"none"``), an intercept (``"drift"``) or an
    intercept and linear trend (``"trend"``). The p-value interpolates
    Fuller's tables and is clamped to [0.01, 0.99].
    """
    y = np.asarray(getattr(series, "values", series), dtype=float)
    if variant not in _DF_TABLES:
        raise ValueError(f"variant must be one of {tuple(_DF_TABLES)}")
    if lag < 0:
        raise ValueError("lag must be >= 0")
    if y.size <= lag + 10:
        raise InsufficientData(f"ADF with lag {lag} needs more than {lag + 10} points")
    dy = np.diff(y)
    target = dy[lag:]
    t = target.size
    cols = [y[lag:-1]]
    if variant != "none":
        cols.append(np.ones(t))
    if variant == "trend":
        cols.append(np.arange(lag + 1, lag + 1 + t, dtype=float))
    cols.extend(dy[lag - i:dy.size - i] for i in range(1, lag + 1))
    eq = _ols(target, np.column_stack(cols))
    stat = float(eq.coef[0] / np.sqrt(eq.sigma2 * eq.xtx_inv[0, 0]))
    p = _adf_pvalue(stat, t, variant)
    return UnitRootResult("ADF", variant, lag, stat, p, p < 0.05)


def kpss_bandwidth(n: int) -> int:
    return int(np.floor(4 * (n / 100) ** 0.25))


def kpss_test(series, trend: bool = False, lags: Optional[int] = None) -> UnitRootResult:
    """KPSS test of level (or trend) stationarity.

    Bartlett-kernel long-run variance with ``floor(4 (n/100)^(1/4))`` lags by
    default; the p-value interpolates the KPSS table and is clamped to
    [0.01, 0.10].
    """
    y = np.asarray(getattr(series, "values", series), dtype=float)
    n = y.size
    if n < 30:
        raise InsufficientData(f"KPSS needs at least 30 points, got {n}")
    if trend:
        t = np.arange(1, n + 1, dtype=float)
        z = np.column_stack([np.ones(n), t])
        e = y - z @ np.linalg.lstsq(z, y, rcond=None)[0]
    else:
        e = y - y.mean()
    l = kpss_bandwidth(n) if lags is None else int(lags)
    s2 = e @ e / n
    for j in range(1, l + 1):
        s2 += 2 * (1 - j / (l + 1)) * (e[j:] @ e[:-j]) / n
    if not s2 > 0:
        raise SingularRegression("long-run variance is not positive")
    stat = float(np.sum(np.cumsum(e) ** 2) / (n**2 * s2))
    p = float(np.clip(np.interp(stat, _KPSS_CRIT[trend], _KPSS_PROBS), *KPSS_P_BOUNDS))
    return UnitRootResult("KPSS-trend" if trend else "KPSS", None, l, stat, p, p < 0.05)


def adf_default_lag(n: int) -> int:
    return int(np.trunc((n - 1) ** (1 / 3)))


def order_of_integration(series, max_d: int = 2) -> Tuple[int, List[UnitRootResult]]:
    """Smallest ``d`` whose ``d``-th difference passes both unit-root checks.

    A difference passes when the trend ADF rejects the unit root and the
    level KPSS does not reject stationarity.
    """
    y = np.asarray(getattr(series, "values", series), dtype=float)
    if max_d not in (1, 2, 3):
        raise ValueError("max_d must be 1, 2 or 3")
    trail: List[UnitRootResult] = []
    z = y
    for d in range(max_d + 1):
        adf = adf_test(z, adf_default_lag(z.size), "trend")
        kp = kpss_test(z)
        trail.extend([adf, kp])
        if adf.reject_null and not kp.reject_null:
            return d, trail
        z = np.diff(z)
    raise OrderNotFound(f"series is not stationary after {max_d} differences")


def integration_order(x, y, max_d: int = 2) -> int:
    """Larger of the two integration orders."""
    x, y = _pair(x, y)
    return max(order_of_integration(x, max_d)[0], order_of_integration(y, max_d)[0])


# -------------------------------------------------------------------- VARs


def _fit(x: np.ndarray, y: np.ndarray, p: int, start: int) -> VarModel:
    ex = _equation(x, y, p, start)
    ey = _equation(y, x, p, start)
    resid = np.column_stack([ex.resid, ey.resid])
    k = 1 + K * p
    cov = resid.T @ resid / (resid.shape[0] - k)
    mats = []
    for i in range(p):
        # own-first ordering: coef[1 + i] own lag i+1, coef[1 + p + i] cross lag i+1
        mats.append(np.array([
            [ex.coef[1 + i], ex.coef[1 + p + i]],
            [ey.coef[1 + p + i], ey.coef[1 + i]],
        ]))
    return VarModel(p, np.array([ex.coef[0], ey.coef[0]]), mats, resid, cov, (ex, ey))


def var_fit(x, y, p: int) -> VarModel:
    """Bivariate VAR(p) with intercepts, fitted on ``t = p..n-1``."""
    x, y = _pair(x, y)
    if p < 1:
        raise ValueError("lag order must be >= 1")
    if x.size <= 2 * p + 10:
        raise InsufficientData(f"VAR({p}) needs more than {2 * p + 10} points")
    return _fit(x, y, p, p)


def _logdet_ml(resid: np.ndarray) -> Tuple[float, float]:
    t = resid.shape[0]
    s11 = resid[:, 0] @ resid[:, 0] / t
    s22 = resid[:, 1] @ resid[:, 1] / t
    s12 = resid[:, 0] @ resid[:, 1] / t
    det = s11 * s22 - s12 * s12
    if not det > 0:
        raise SingularRegression("residual covariance is singular")
    return float(np.log(det)), float(det)


def select_lag(x, y, max_lag: int) -> LagSelection:
    """Information criteria for VAR(1..max_lag) on the common trimmed sample.

    With ``T = n - max_lag``, ``m = p K^2 + K`` and ``S`` the ML residual
    covariance: AIC = ln det S + 2m/T, HQ = ln det S + 2 ln ln T m/T,
    SC = ln det S + ln T m/T, FPE = ((T + p K + 1)/(T - p K - 1))^K det S.
    Ties resolve to the smaller lag.
    """
    x, y = _pair(x, y)
    if max_lag < 1:
        raise ValueError("max_lag must be >= 1")
    if x.size <= 2 * max_lag + 10:
        raise InsufficientData(f"lag scan to {max_lag} needs more than {2 * max_lag + 10} points")
    t = x.size - max_lag
    table: Dict[str, List[float]] = {c: [] for c in CRITERIA}
    lags = list(range(1, max_lag + 1))
    for p in lags:
        logdet, det = _logdet_ml(_fit(x, y, p, max_lag).residuals)
        m = p * K * K + K
        mstar = p * K + 1
        table["aic"].append(logdet + 2 * m / t)
        table["hq"].append(logdet + 2 * np.log(np.log(t)) * m / t)
        table["sc"].append(logdet + np.log(t) * m / t)
        table["fpe"].append(((t + mstar) / (t - mstar)) ** K * det)
    chosen = {c: lags[int(np.argmin(v))] for c, v in table.items()}
    return LagSelection(lags, table, chosen, t)


def portmanteau_test(model: VarModel, h: Optional[int] = None) -> TestResult:
    """Asymptotic multivariate portmanteau test of residual autocorrelation.

    ``Q = T sum_j tr(C_j' C_0^-1 C_j C_0^-1)`` over lags ``1..h`` with
    ``C_j = (1/T) sum_t u_t u_{t-j}'``; chi-square with ``K^2 (h - p)`` df.
    ``h`` defaults to ``max(16, p + 4)``.
    """
    p = model.lag_order
    if h is None:
        h = default_horizon(p)
    if h <= p:
        raise InvalidHorizon(f"horizon {h} must exceed the lag order {p}")
    u = model.residuals - model.residuals.mean(axis=0)
    t = u.shape[0]
    if h >= t:
        raise InvalidHorizon(f"horizon {h} is not below the sample size {t}")
    c0_inv = np.linalg.inv(u.T @ u / t)
    q = 0.0
    for j in range(1, h + 1):
        cj = u[j:].T @ u[:-j] / t
        q += np.trace(cj.T @ c0_inv @ cj @ c0_inv)
    q *= t
    df = K * K * (h - p)
    pval = float(stats.chi2.sf(q, df))
    return TestResult(float(q), pval, "residuals are serially uncorrelated", pval < 0.05, float(df))


def default_horizon(p: int) -> int:
    return max(DEFAULT_HORIZON, p + 4)


def companion_matrix(model: VarModel) -> np.ndarray:
    p = model.lag_order
    comp = np.zeros((K * p, K * p))
    comp[:K] = np.hstack(model.coefficient_matrices)
    comp[K:, :-K] = np.eye(K * (p - 1))
    return comp


def stability_check(model: VarModel) -> float:
    """Largest modulus among the companion-matrix eigenvalues; stable iff < 1."""
    return float(np.max(np.abs(np.linalg.eigvals(companion_matrix(model)))))


def diagnose(model: VarModel, h: Optional[int] = None) -> Diagnostics:
    h = default_horizon(model.lag_order) if h is None else h
    pt = portmanteau_test(model, h)
    modulus = stability_check(model)
    stable = modulus < 1
    return Diagnostics(model.lag_order, h, pt, modulus, stable, stable and not pt.rejected_at_5pct)


# ------------------------------------------------------------------ Wald


def _wald(eq: _Equation, p_aug: int, p: int) -> TestResult:
    idx = np.arange(1 + p_aug, 1 + p_aug + p)  # first p cross lags
    beta = eq.coef[idx]
    cov = eq.sigma2 * eq.xtx_inv[np.ix_(idx, idx)]
    stat = float(beta @ np.linalg.solve(cov, beta))
    pval = float(stats.chi2.sf(stat, p))
    return TestResult(stat, pval, "no Granger causality", pval < 0.05, float(p))


def ty_causality(x, y, max_lag: int = 20, criterion: str = "aic", max_d: int = 2,
                 horizon: Optional[int] = None, labels: Tuple[str, str] = ("x", "y"),
                 scan_lags: bool = True, enforce_diagnostics: bool = True) -> CausalityReport:
    """Toda-Yamamoto Granger causality in both directions.

    Steps: integration order ``I``; lag ``P`` by ``criterion``; portmanteau
    and stability checks on VAR(P), moving to the next larger lag that passes
    when ``scan_lags``; fit VAR(P + I); Wald chi-square(P) on the first ``P``
    cross-lag coefficients of each equation.

    With ``enforce_diagnostics=False`` a pair that fails every check is still
    tested at the selected lag and marked ``status="diagnostics_failed"``.

    Raises
    ------
    DiagnosticsFailed
        No lag in ``P..max_lag`` passes both checks. The partial report is
        attached as ``exc.report``.
    """
    if criterion not in CRITERIA:
        raise ValueError(f"criterion must be one of {CRITERIA}")
    xv, yv = _pair(x, y)
    if xv.size < 60:
        raise InsufficientData(f"Toda-Yamamoto needs at least 60 points, got {xv.size}")
    lx = getattr(x, "label", "") or labels[0]
    ly = getattr(y, "label", "") or labels[1]
    report = CausalityReport((lx, ly), criterion=criterion)

    dx, trail_x = order_of_integration(xv, max_d)
    dy, trail_y = order_of_integration(yv, max_d)
    report.unit_roots = {lx: trail_x, ly: trail_y}
    report.integration_order = order = max(dx, dy)

    sel = select_lag(xv, yv, max_lag)
    report.lag_selection = sel
    report.selected_lag = sel.chosen[criterion]

    candidates = range(report.selected_lag, max_lag + 1) if scan_lags else [report.selected_lag]
    for p in candidates:
        diag = diagnose(var_fit(xv, yv, p), horizon)
        report.diagnostics.append(diag)
        if diag.passed:
            report.tested_lag = p
            break
    status = "ok"
    if report.tested_lag is None:
        if enforce_diagnostics:
            report.status = "unsuitable"
            report.error = "DiagnosticsFailed"
            raise DiagnosticsFailed("no scanned lag passes portmanteau and stability checks", report)
        report.tested_lag = report.selected_lag
        status = "diagnostics_failed"

    p = report.tested_lag
    report.augmented_lag = p + order
    aug = var_fit(xv, yv, p + order)
    ex, ey = aug.equations
    report.wald_x_to_y = _wald(ey, p + order, p)
    report.wald_y_to_x = _wald(ex, p + order, p)
    report.status = status
    return report


# ---------------------------------------------------------- multiscale


@dataclass
class MultiscaleCell:
    level: int
    bank: str  # "trend" or "fluctuation"
    report: Optional[CausalityReport]
    error: Optional[str] = None
    message: Optional[str] = None

    def verdicts(self) -> Dict[str, Optional[bool]]:
        r = self.report
        if r is None or r.wald_x_to_y is None:
            return {"x_to_y": None, "y_to_x": None}
        return {"x_to_y": r.wald_x_to_y.rejected_at_5pct, "y_to_x": r.wald_y_to_x.rejected_at_5pct}


def multiscale_causality(decomp_x, decomp_y, max_lag: int = 20, criterion: str = "aic",
                         workers: int = 1, **kwargs) -> List[MultiscaleCell]:
    """Toda-Yamamoto per level on the trend and fluctuation banks.

    A failing cell records its error code and keeps the partial report if
    one exists; the table is always complete.
    """
    if decomp_x.level_count != decomp_y.level_count:
        raise LengthMismatch("decompositions have different level counts")
    labels = (decomp_x.label or "x", decomp_y.label or "y")
    jobs = []
    for j in range(decomp_x.level_count):
        jobs.append((j + 1, "trend", decomp_x.trends[j], decomp_y.trends[j]))
        jobs.append((j + 1, "fluctuation", decomp_x.fluctuations[j], decomp_y.fluctuations[j]))

    def run(job) -> MultiscaleCell:
        level, bank, a, b = job
        try:
            rep = ty_causality(a, b, max_lag, criterion, labels=labels, **kwargs)
            return MultiscaleCell(level, bank, rep)
        except AnalysisError as exc:
            return MultiscaleCell(level, bank, getattr(exc, "report", None), exc.code, str(exc))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run, jobs))
    return [run(job) for job in jobs]
