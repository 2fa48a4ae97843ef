"""End-to-end batch analysis of two monthly index series."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import __version__
from . import causality as tc
from . import cwt
from . import descriptive as ds
from .dwt import DEFAULT_MODE, MODES, decompose, max_level
from .errors import AnalysisError, ConfigError, DiagnosticsFailed
from .quotes import ingest, monthly_average, months_between, parse_month
from .report import SCHEMA_VERSION, atomic_write, csv_text, grid_csv, write_json
from .series import (
    TimeSeries,
    cumulative_sum,
    hurst_rs,
    log_returns,
    mean_subtract,
    normalize_by_std,
    phase_space,
)

STAGES = ("ingest", "decompose", "descriptive", "cwt", "coherence", "causality")
BAND_PERIODS = (12.0, 24.0, 60.0)
UNIT_ROOT_LAGS = range(1, 17)


@dataclass(frozen=True)
class PipelineConfig:
    inputs: Tuple[str, ...]
    output_dir: str = "out"
    labels: Optional[Tuple[str, ...]] = None
    date_column: str = "Date"
    close_column: str = "Close"
    start: str = "1986-01"
    end: str = "2010-12"
    dwt_levels: int = 4
    dwt_mode: str = DEFAULT_MODE
    cwt_s0: float = 2.0
    cwt_dj: float = 1.0 / 12
    cwt_max_scale: float = 128.0
    alpha: float = 0.05
    surrogates: int = 300
    seed: Optional[int] = None
    max_lag: int = 20
    criterion: str = "aic"
    raw_levels: bool = False
    enforce_diagnostics: bool = True
    workers: int = 1

    @property
    def window(self):
        return parse_month(self.start), parse_month(self.end)

    @property
    def series_labels(self) -> Tuple[str, ...]:
        return tuple(self.labels) if self.labels else tuple(Path(p).stem for p in self.inputs)

    def validate(self, stages: Sequence[str] = STAGES) -> None:
        """Raise :class:`ConfigError` for any parameter outside module preconditions."""
        def bad(msg):
            raise ConfigError(msg)

        if not 1 <= len(self.inputs) <= 2:
            bad("one or two input files are required")
        needs_pair = {"descriptive", "coherence", "causality"} & set(stages)
        if needs_pair and len(self.inputs) != 2:
            bad(f"stages {sorted(needs_pair)} need exactly two inputs")
        if self.labels is not None and len(self.labels) != len(self.inputs):
            bad("labels must match inputs one to one")
        if len(set(self.series_labels)) != len(self.inputs):
            bad("series labels must be distinct")
        try:
            lo, hi = self.window
        except ValueError as exc:
            bad(str(exc))
        if months_between(lo, hi) < 60:
            bad(f"analysis window {self.start}..{self.end} covers fewer than 60 months")
        if self.dwt_levels < 1:
            bad("dwt_levels must be >= 1")
        if self.dwt_mode not in MODES:
            bad(f"dwt_mode must be one of {MODES}")
        if self.cwt_s0 < 2:
            bad("cwt_s0 must be at least 2 months")
        if self.cwt_dj <= 0 or self.cwt_max_scale <= self.cwt_s0:
            bad("cwt grid needs dj > 0 and max_scale > s0")
        if not 0 < self.alpha < 1:
            bad("alpha must lie in (0, 1)")
        if "coherence" in stages:
            if self.seed is None:
                bad("coherence needs an explicit seed")
            if self.surrogates * self.alpha < 15:
                bad("too few surrogates for the requested alpha")
        if self.max_lag < 1:
            bad("max_lag must be >= 1")
        if self.criterion not in tc.CRITERIA:
            bad(f"criterion must be one of {tc.CRITERIA}")
        if self.workers < 1:
            bad("workers must be >= 1")

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d["inputs"] = list(self.inputs)
        d["labels"] = list(self.series_labels)
        return d


@dataclass
class PipelineResult:
    files: Dict[str, str] = field(default_factory=dict)  # name -> sha256
    diagnostics_failed: List[str] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return 2 if self.diagnostics_failed else 0


def _nullable(values) -> list:
    return [None if not np.isfinite(v) else float(v) for v in np.asarray(values, dtype=float)]


class _Run:
    def __init__(self, config: PipelineConfig):
        self.cfg = config
        self.out = Path(config.output_dir)
        self.result = PipelineResult()
        self.levels: List[TimeSeries] = []
        self.normalized: List[TimeSeries] = []
        self.decomps = []
        self.scalograms: List[cwt.Scalogram] = []

    def write(self, name: str, text: str) -> None:
        self.result.files[name] = atomic_write(self.out / name, text)

    def write_json(self, name: str, obj) -> None:
        self.result.files[name] = write_json(self.out / name, obj)

    # stages -----------------------------------------------------------

    def ingest(self) -> None:
        window = self.cfg.window
        for path, label in zip(self.cfg.inputs, self.cfg.series_labels):
            raw = ingest(path, self.cfg.date_column, self.cfg.close_column, window, label)
            monthly = monthly_average(raw, window)
            self.levels.append(monthly)
            self.normalized.append(normalize_by_std(monthly))
            rows = zip(monthly.months(), monthly.values, self.normalized[-1].values)
            self.write(f"monthly_{label}.csv", csv_text(["month", "close", "normalized"], rows))

    def decompose(self) -> None:
        levels = min(self.cfg.dwt_levels, max_level(len(self.normalized[0]), self.cfg.dwt_mode))
        if levels < self.cfg.dwt_levels:
            raise ConfigError(f"series support only {levels} DWT levels")
        for s in self.normalized:
            d = decompose(s, self.cfg.dwt_levels, mode=self.cfg.dwt_mode)
            self.decomps.append(d)
            j = range(1, d.level_count + 1)
            header = ["month"] + [f"trend_{k}" for k in j] + [f"fluct_{k}" for k in j]
            cols = list(zip(*d.trends, *d.fluctuations))
            rows = ([m] + list(c) for m, c in zip(s.months(), cols))
            self.write(f"decomposition_{s.label}.csv", csv_text(header, rows))

    def descriptive(self) -> None:
        a, b = self.normalized
        da, db = self.decomps
        per_series = {}
        for level, s, d in zip(self.levels, self.normalized, self.decomps):
            r = log_returns(level, normalize=True)
            hurst = hurst_rs(r)
            banks = {}
            for name, bank in (("trend", d.trends), ("fluctuation", d.fluctuations)):
                rows = []
                for k, v in enumerate(bank, start=1):
                    m = ds.moments(v)
                    box = ds.boxplot_stats(v)
                    rows.append({
                        "level": k, "skewness": m.skewness, "kurtosis": m.kurtosis,
                        "variance": m.variance,
                        "modes": ds.count_modes(ds.kde(v)),
                        "modes_without_outliers": ds.count_modes(ds.kde(ds.remove_outliers(v))),
                        "outliers": len(box.outlier_indices), "boxplot": box,
                        "shapiro_wilk": ds.shapiro_wilk(v), "ks": ds.ks_normal(v),
                    })
                banks[name] = rows
            per_series[s.label] = {
                "returns": {"moments": ds.moments(r.values), "shapiro_wilk": ds.shapiro_wilk(r.values),
                            "ks": ds.ks_normal(r.values), "kde_modes": ds.count_modes(ds.kde(r.values))},
                "hurst": hurst,
                "cumulative_sum_range": float(np.ptp(cumulative_sum(r).values)),
                "banks": banks,
            }
            ps = phase_space(level)
            months = s.months()[:-1]
            self.write(f"phase_space_{s.label}.csv",
                       csv_text(["month", "price", "return"], ([m, p, q] for m, (p, q) in zip(months, ps))))
        corr = {}
        for name, ba, bb in (("trend", da.trends, db.trends), ("fluctuation", da.fluctuations, db.fluctuations)):
            corr[name] = [{"level": k, "pearson": ds.pearson(u, v), "spearman": ds.spearman(u, v)}
                          for k, (u, v) in enumerate(zip(ba, bb), start=1)]
        corr["levels"] = {"pearson": ds.pearson(a.values, b.values), "spearman": ds.spearman(a.values, b.values)}
        self.write_json("descriptive.json", {
            "schema_version": SCHEMA_VERSION, "labels": [a.label, b.label],
            "dwt_mode": da.mode, "correlations": corr, "series": per_series,
        })

    def _grid(self) -> cwt.ScaleGrid:
        return cwt.ScaleGrid(self.cfg.cwt_s0, self.cfg.cwt_dj, max_scale=self.cfg.cwt_max_scale)

    def cwt(self) -> None:
        grid = self._grid()
        for s in self.normalized:
            sc = cwt.morlet_cwt(mean_subtract(s), grid)
            self.scalograms.append(sc)
            months = s.months()
            self.write(f"scalogram_{s.label}.csv", grid_csv("scale", sc.scales, months, sc.power))
            bands = {}
            for period in BAND_PERIODS:
                try:
                    idx = cwt.nearest_scale_index(sc, period)
                except AnalysisError:
                    continue
                real, phase = cwt.band_coefficients(sc, period)
                bands[format(period, "g")] = {"scale": sc.scales[idx], "period": sc.periods[idx],
                                              "real": real, "phase": phase}
            self.write_json(f"scalogram_{s.label}.json", {
                "schema_version": SCHEMA_VERSION, "label": s.label, "months": months,
                "grid": {"s0": grid.s0, "dj": grid.dj, "count": grid.count, "omega0": sc.omega0},
                "scales": sc.scales, "periods": sc.periods, "coi": sc.coi,
                "global_power": cwt.global_power(sc),
                "global_power_coi": _nullable(cwt.global_power(sc, exclude_coi=True)),
                "empty_coi_scales": np.flatnonzero(cwt.empty_scales(sc)).tolist(),
                "bands": bands,
            })

    def coherence(self) -> None:
        if not self.scalograms:
            self.cwt()
        a, b = self.scalograms
        cm = cwt.coherence(a, b, self.cfg.alpha, self.cfg.surrogates, self.cfg.seed,
                           workers=self.cfg.workers)
        xs = cwt.cross_spectrum(a, b)
        months = self.normalized[0].months()
        scales = a.scales
        self.write("coherence.csv", grid_csv("scale", scales, months, cm.coherence))
        self.write("coherence_phase.csv", grid_csv("scale", scales, months, cm.phase))
        self.write("coherence_significant.csv", grid_csv("scale", scales, months, cm.significant))
        self.write("cross_power.csv", grid_csv("scale", scales, months, np.abs(xs.values)))
        self.write("cross_phase.csv", grid_csv("scale", scales, months, xs.phase))
        inside = cm.inside_coi
        self.write_json("coherence.json", {
            "schema_version": SCHEMA_VERSION, "labels": list(self.cfg.series_labels),
            "months": months, "scales": scales, "periods": a.periods, "coi": a.coi,
            "alpha": cm.alpha, "surrogates": cm.surrogate_count, "seed": cm.seed,
            "phase_convention": "radians; positive means the first series leads, 0 in phase, "
                                "pi anti-phase, arrows point right when in phase",
            "significant_fraction_inside_coi": float(cm.significant[inside].mean()) if inside.any() else None,
        })

    def causality(self) -> None:
        src = self.levels if self.cfg.raw_levels else self.normalized
        x, y = src
        out = {"schema_version": SCHEMA_VERSION, "labels": [x.label, y.label],
               "input": "raw levels" if self.cfg.raw_levels else "normalized levels",
               "criterion": self.cfg.criterion, "max_lag": self.cfg.max_lag,
               "wald_covariance": "homoskedastic OLS", "var_covariance_denominator": "T - 2p - 1"}
        try:
            rep = tc.ty_causality(x, y, self.cfg.max_lag, self.cfg.criterion,
                                  enforce_diagnostics=self.cfg.enforce_diagnostics)
        except DiagnosticsFailed as exc:
            rep = exc.report
            self.result.diagnostics_failed.append("levels")
        out["levels"] = rep

        if not self.decomps:
            self.decompose()
        cells = tc.multiscale_causality(*self.decomps, max_lag=self.cfg.max_lag,
                                        criterion=self.cfg.criterion, workers=self.cfg.workers,
                                        enforce_diagnostics=self.cfg.enforce_diagnostics)
        rows = []
        for c in cells:
            if c.error == "DiagnosticsFailed":
                self.result.diagnostics_failed.append(f"{c.bank}_{c.level}")
            rows.append({"level": c.level, "bank": c.bank, "verdicts": c.verdicts(),
                         "status": c.report.status if c.report else "failed",
                         "selected_lag": c.report.selected_lag if c.report else None,
                         "tested_lag": c.report.tested_lag if c.report else None,
                         "error": c.error, "message": c.message, "report": c.report})
        out["multiscale"] = rows

        returns = {}
        for s in self.levels:
            r = log_returns(s).values
            returns[s.label] = {
                "adf_drift": [tc.adf_test(r, k, "drift") for k in UNIT_ROOT_LAGS],
                "kpss_level": [tc.kpss_test(r, lags=k) for k in UNIT_ROOT_LAGS],
                "kpss_trend": [tc.kpss_test(r, trend=True, lags=k) for k in UNIT_ROOT_LAGS],
            }
        out["returns_unit_roots"] = returns
        self.write_json("causality.json", out)


def run_pipeline(config: PipelineConfig, stages: Sequence[str] = STAGES) -> PipelineResult:
    """Run ``stages`` (in canonical order) and write their reports.

    A manifest with the config echo, seed and SHA-256 of every written file is
    written last. Diagnostics failures do not abort; they are listed in the
    result and turn the exit code to 2.
    """
    unknown = set(stages) - set(STAGES)
    if unknown:
        raise ConfigError(f"unknown stages {sorted(unknown)}")
    config.validate(stages)
    run = _Run(config)
    run.ingest()
    wanted = set(stages)
    if wanted & {"decompose", "descriptive"}:
        run.decompose()
    for stage in ("descriptive", "cwt", "coherence", "causality"):
        if stage in wanted:
            getattr(run, stage)()
    files = dict(sorted(run.result.files.items()))
    manifest = {
        "schema_version": SCHEMA_VERSION, "package_version": __version__,
        "stages": [s for s in STAGES if s in wanted], "config": config.echo(), "seed": config.seed,
        "diagnostics_failed": run.result.diagnostics_failed, "files": files,
    }
    run.write_json("manifest.json", manifest)
    return run.result
