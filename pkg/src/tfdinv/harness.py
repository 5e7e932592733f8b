"""Configuration, result bundles and the subcommand runner.

Configs are INI files (read with :mod:`configparser`); every key is
optional and falls back to the defaults of :class:`ExperimentConfig`.
See ``configs/schema.ini`` for the documented schema.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import hashlib
import json
import logging
import math
import os
import platform
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .errors import (
    ConditioningWarning,
    ConfigurationError,
    GrowthOverflowError,
    SolverError,
    TfdError,
)
from .grids import SpaceGrid, SpaceProfile, TimeGrid, TimeSeries

__all__ = [
    "EXIT_ACCEPTANCE",
    "EXIT_CONFIG",
    "EXIT_NUMERICAL",
    "EXIT_OK",
    "OUT_ENV",
    "SUBCOMMANDS",
    "ExperimentConfig",
    "ResultBundle",
    "Table",
    "emit_csv",
    "emit_json",
    "parse_csv",
    "run_subcommand",
]

log = logging.getLogger("tfdinv")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ACCEPTANCE = 4

#: environment variable naming the default output directory
OUT_ENV = "TFDINV_OUT"

SUBCOMMANDS = ("mlf", "eigen", "phi-asymptotics", "forward", "inverse", "verify-laplace", "uniqueness-sweep", "selftest")


# {{{ tables and serialization



def _cell(v):
    if isinstance(v, str):
        if any(c in v for c in ',"\n\r') or _is_number(v):
            raise ValueError(f"text cell {v!r} must not contain separators or parse as a number")
        return v
    return float(v)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


@dataclass
class Table:
    """Named columns; cells are floats or plain labels (no separators)."""

    columns: list[str]
    rows: list[list] = field(default_factory=list)

    def __post_init__(self) -> None:
        self.columns = list(self.columns)
        self.rows = [[_cell(v) for v in r] for r in self.rows]
        for r in self.rows:
            if len(r) != len(self.columns):
                raise ValueError(f"row of length {len(r)} for {len(self.columns)} columns")

    def append(self, *values) -> None:
        if len(values) != len(self.columns):
            raise ValueError(f"row of length {len(values)} for {len(self.columns)} columns")
        self.rows.append([_cell(v) for v in values])

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])


def _fmt(v) -> str:
    return v if isinstance(v, str) else "%.17g" % v


def _csv_text(table: Table) -> str:
    lines = [",".join(table.columns)]
    lines.extend(",".join(_fmt(v) for v in r) for r in table.rows)
    return "\n".join(lines) + "\n"


def emit_csv(table: Table, path) -> None:
    """Header row, comma separated, ``%.17g`` numbers, LF line endings."""
    path = Path(path)
    try:
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write(_csv_text(table))
    except OSError as exc:
        raise OSError(f"cannot write CSV to {path}: {exc}") from exc


def parse_csv(path) -> Table:
    with open(path, encoding="ascii", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = [[float(v) if _is_number(v) else v for v in r] for r in reader]
    return Table(header, rows)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.bool_, bool)):
        return bool(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    return v


def emit_json(summary: dict, path) -> None:
    """JSON with sorted keys and a trailing newline."""
    path = Path(path)
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(_jsonable(summary), fh, sort_keys=True, indent=2)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write JSON to {path}: {exc}") from exc


# }}}


# {{{ configuration


def _floats(text: str) -> tuple[float, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        return tuple(float(v) for v in text.replace(";", ",").split(","))
    except ValueError as exc:
        raise ConfigurationError(f"expected a comma-separated number list, got {text!r}") from exc


def _modes(text: str) -> tuple[tuple[int, float], ...]:
    """``"1:1.0, 3:0.5"`` -> ((1, 1.0), (3, 0.5)); 1-based mode numbers."""
    out = []
    for item in text.replace(";", ",").split(","):
        item = item.strip()
        if not item:
            continue
        try:
            n, c = item.split(":")
            out.append((int(n), float(c)))
        except ValueError as exc:
            raise ConfigurationError(f"mode entry {item!r} is not of the form n:coefficient") from exc
        if out[-1][0] < 1:
            raise ConfigurationError(f"mode numbers start at 1: got {out[-1][0]}")
    return tuple(out)


@dataclass(frozen=True)
class ExperimentConfig:
    """All run parameters; see ``configs/schema.ini`` for the file layout."""

    alpha: float = 0.5
    seed: int = 0
    workers: int = 1
    t_end: float = 1.0
    steps: int = 256
    x_left: float = 0.0
    x_right: float = 1.0
    cells: int = 128
    potential_kind: str = "cosine"
    potential_value: float = 1.0
    potential_amplitude: float = 1.0
    potential_frequency: float = 1.0
    potential_file: str = ""
    rho_coeffs: tuple[float, ...] = (1.0, 1.0)
    rho_file: str = ""
    f_modes: tuple[tuple[int, float], ...] = ((1, 1.0),)
    f_file: str = ""
    a_coeffs: tuple[float, ...] = ()
    a_modes: tuple[tuple[int, float], ...] = ()
    g_coeffs: tuple[float, ...] = ()
    solver: str = "spectral"
    x0: float = 0.375
    bc: str = "dirichlet"
    noise_level: float = 0.0
    mode_count: int = 64
    tikhonov_lambda: Optional[float] = None
    m: Optional[int] = None
    s_list: tuple[float, ...] = (5.0, 10.0, 20.0, 40.0)
    horizon: float = 8.0
    data_t_end: float = 1.0
    mlf_alpha: tuple[float, ...] = (0.5,)
    mlf_beta: tuple[float, ...] = (1.0,)
    mlf_x: tuple[float, ...] = (-10.0, -1.0, -0.1, 0.0, 0.1, 1.0)
    eigen_count: int = 10
    eta_list: tuple[float, ...] = (10.0, 20.0, 40.0, 80.0)
    pairs: int = 20
    separation: float = 1.0
    source_path: str = ""

    # {{{ parsing

    @classmethod
    def from_file(cls, path) -> ExperimentConfig:
        path = Path(path)
        if not path.is_file():
            raise ConfigurationError(f"config file {path} does not exist")
        return cls.from_string(path.read_text(), base=path.parent, source_path=str(path))

    @classmethod
    def from_string(cls, text: str, base: Optional[Path] = None, source_path: str = "") -> ExperimentConfig:
        cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigurationError(f"config syntax: {exc}") from exc
        base = Path(".") if base is None else base
        kw: dict[str, Any] = {"source_path": source_path}
        known = _SCHEMA
        for section in cp.sections():
            for key, raw in cp.items(section):
                name = known.get((section, key))
                if name is None:
                    raise ConfigurationError(f"unknown config key [{section}] {key}")
                kw[name] = _convert(name, raw, base)
        cfg = cls(**kw)
        cfg.validate()
        return cfg

    # }}}

    def validate(self, task: Optional[str] = None) -> None:
        """Raise :class:`ConfigurationError` naming the violated invariant."""

        def bad(msg):
            raise ConfigurationError(msg)

        if not 0.0 < self.alpha < 1.0:
            bad(f"alpha must lie in (0, 1): got {self.alpha}")
        if self.steps < 1 or self.cells < 1:
            bad("steps and cells must be positive integers")
        if not self.t_end > 0.0:
            bad(f"t_end must be positive: got {self.t_end}")
        if not 0.0 <= self.x_left < self.x_right <= 1.0:
            bad(f"x bounds must satisfy 0 <= x_left < x_right <= 1: got {self.x_left}, {self.x_right}")
        if self.potential_kind not in ("constant", "cosine", "table"):
            bad(f"potential kind must be constant, cosine or table: got {self.potential_kind!r}")
        if self.bc not in ("dirichlet", "neumann"):
            bad(f"bc must be dirichlet or neumann: got {self.bc!r}")
        if self.solver not in ("spectral", "l1fd"):
            bad(f"solver must be spectral or l1fd: got {self.solver!r}")
        if self.noise_level < 0.0:
            bad("noise_level must be nonnegative")
        if self.mode_count < 1 or self.workers < 1 or self.eigen_count < 1 or self.pairs < 0:
            bad("mode_count, workers and eigen_count must be positive")
        if self.tikhonov_lambda is not None and self.tikhonov_lambda < 0.0:
            bad("tikhonov_lambda must be nonnegative")
        if any(s <= 0.0 for s in self.s_list) or list(self.s_list) != sorted(set(self.s_list)):
            bad("s_list must be ascending positive values")
        for f in (self.potential_file, self.rho_file, self.f_file):
            if f and not Path(f).is_file():
                bad(f"referenced file {f} does not exist")
        if self.potential_kind == "table" and not self.potential_file:
            bad("potential kind 'table' needs a file")
        if self.g_coeffs and self.g_coeffs[0] != 0.0:
            bad("boundary data must vanish at t = 0: the constant g coefficient must be 0")
        if task in ("inverse", "uniqueness-sweep"):
            if self.rho0() == 0.0:
                bad("rho(0) must be nonzero for inverse tasks")
            if not self.x_left < self.x0 < self.x_right:
                bad(f"observation point x0={self.x0} must be interior")
        if task == "verify-laplace" and self.m is not None and not (self.m - 1) * self.alpha > 2.5:
            bad(f"(m - 1) alpha must exceed 5/2: got m={self.m}, alpha={self.alpha}")

    def digest(self) -> str:
        """SHA-256 of the canonical JSON form of all fields."""
        d = dataclasses.asdict(self)
        d.pop("source_path")
        return hashlib.sha256(json.dumps(_jsonable(d), sort_keys=True).encode()).hexdigest()

    # {{{ builders

    def sgrid(self) -> SpaceGrid:
        return SpaceGrid(self.x_left, self.x_right, self.cells)

    def tgrid(self) -> TimeGrid:
        return TimeGrid(self.t_end, self.steps)

    def potential(self, grid: Optional[SpaceGrid] = None):
        from .sturm_liouville import Potential

        grid = self.sgrid() if grid is None else grid
        if self.potential_kind == "constant":
            return Potential.constant(grid, self.potential_value)
        if self.potential_kind == "cosine":
            c, amp, k = self.potential_value, self.potential_amplitude, self.potential_frequency
            return Potential.from_function(grid, lambda x: c + amp * np.cos(2.0 * np.pi * k * x))
        x, v = _read_table(self.potential_file)
        return Potential.from_function(grid, lambda s: np.interp(s, x, v))

    def rho0(self) -> float:
        if self.rho_file:
            return float(_read_table(self.rho_file)[1][0])
        return float(self.rho_coeffs[0]) if self.rho_coeffs else 0.0

    def rho(self, tgrid: Optional[TimeGrid] = None) -> TimeSeries:
        tgrid = self.tgrid() if tgrid is None else tgrid
        if self.rho_file:
            t, v = _read_table(self.rho_file)
            return TimeSeries(tgrid, np.interp(tgrid.nodes, t, v))
        return TimeSeries(tgrid, np.polynomial.polynomial.polyval(tgrid.nodes, self.rho_coeffs))

    def f(self, grid: SpaceGrid, eig) -> SpaceProfile:
        if self.f_file:
            x, v = _read_table(self.f_file)
            return SpaceProfile(grid, np.interp(grid.nodes, x, v))
        return _mode_combo(grid, eig, self.f_modes)

    # }}}


_SCHEMA: dict[tuple[str, str], str] = {
    ("general", "alpha"): "alpha",
    ("general", "seed"): "seed",
    ("general", "workers"): "workers",
    ("grid", "t_end"): "t_end",
    ("grid", "steps"): "steps",
    ("grid", "x_left"): "x_left",
    ("grid", "x_right"): "x_right",
    ("grid", "cells"): "cells",
    ("potential", "kind"): "potential_kind",
    ("potential", "value"): "potential_value",
    ("potential", "amplitude"): "potential_amplitude",
    ("potential", "frequency"): "potential_frequency",
    ("potential", "file"): "potential_file",
    ("source", "rho"): "rho_coeffs",
    ("source", "rho_file"): "rho_file",
    ("source", "f_modes"): "f_modes",
    ("source", "f_file"): "f_file",
    ("forward", "a"): "a_coeffs",
    ("forward", "a_modes"): "a_modes",
    ("forward", "g"): "g_coeffs",
    ("forward", "solver"): "solver",
    ("forward", "mode_count"): "mode_count",
    ("inverse", "x0"): "x0",
    ("inverse", "bc"): "bc",
    ("inverse", "noise_level"): "noise_level",
    ("inverse", "mode_count"): "mode_count",
    ("inverse", "tikhonov_lambda"): "tikhonov_lambda",
    ("laplace", "m"): "m",
    ("laplace", "s_list"): "s_list",
    ("laplace", "horizon"): "horizon",
    ("laplace", "data_t_end"): "data_t_end",
    ("laplace", "mode_count"): "mode_count",
    ("laplace", "g"): "g_coeffs",
    ("mlf", "alpha"): "mlf_alpha",
    ("mlf", "beta"): "mlf_beta",
    ("mlf", "x"): "mlf_x",
    ("eigen", "count"): "eigen_count",
    ("eigen", "bc"): "bc",
    ("phi", "eta"): "eta_list",
    ("sweep", "pairs"): "pairs",
    ("sweep", "separation"): "separation",
    ("sweep", "bc"): "bc",
    ("sweep", "x0"): "x0",
}

_INTS = {"seed", "workers", "steps", "cells", "mode_count", "m", "eigen_count", "pairs"}
_STRS = {"potential_kind", "solver", "bc"}
_FILES = {"potential_file", "rho_file", "f_file"}
_LISTS = {"rho_coeffs", "a_coeffs", "g_coeffs", "s_list", "mlf_alpha", "mlf_beta", "mlf_x", "eta_list"}
_MODES = {"f_modes", "a_modes"}


def _convert(name: str, raw: str, base: Path):
    raw = raw.strip()
    try:
        if name in _STRS:
            return raw.lower()
        if name in _FILES:
            return str((base / raw).resolve()) if raw else ""
        if name in _LISTS:
            return _floats(raw)
        if name in _MODES:
            return _modes(raw)
        if name in _INTS:
            return None if (name == "m" and raw.lower() in ("", "auto")) else int(raw)
        if name == "tikhonov_lambda" and raw.lower() in ("", "auto"):
            return None
        return float(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {name}: {raw!r}") from exc


def _read_table(path) -> tuple[np.ndarray, np.ndarray]:
    """Two-column CSV (header optional): abscissa, value."""
    try:
        data = np.genfromtxt(path, delimiter=",", comments="#", names=None)
    except OSError as exc:
        raise ConfigurationError(f"cannot read table {path}: {exc}") from exc
    data = np.atleast_2d(data)
    data = data[~np.isnan(data).any(axis=1)]
    if data.shape[1] != 2 or data.shape[0] < 2:
        raise ConfigurationError(f"table {path} must have two numeric columns and at least two rows")
    if np.any(np.diff(data[:, 0]) <= 0.0):
        raise ConfigurationError(f"table {path}: abscissae must increase")
    return data[:, 0], data[:, 1]


def _mode_combo(grid: SpaceGrid, eig, modes) -> SpaceProfile:
    v = np.zeros(grid.size)
    for n, c in modes:
        if n > eig.count:
            raise ConfigurationError(f"mode {n} exceeds the {eig.count} computed modes")
        v = v + c * eig.matrix[n - 1]
    return SpaceProfile(grid, v)


# }}}


# {{{ result bundle


@dataclass
class ResultBundle:
    task: str
    config_hash: str
    tables: dict[str, Table] = field(default_factory=dict)
    summary: dict[str, Any] = field(default_factory=dict)
    started: str = ""
    finished: str = ""

    def metadata(self) -> dict[str, Any]:
        return {
            "task": self.task,
            "config_hash": self.config_hash,
            "versions": {
                "tfdinv": __version__,
                "numpy": np.__version__,
                "scipy": scipy.__version__,
                "python": platform.python_version(),
            },
            "started": self.started,
            "finished": self.finished,
        }

    def write(self, out_dir) -> list[Path]:
        out = Path(out_dir)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise OSError(f"cannot create output directory {out}: {exc}") from exc
        written = []
        stem = self.task.replace("-", "_")
        # a single writer: files are produced one after another in name order
        for name in sorted(self.tables):
            p = out / f"{stem}_{name}.csv"
            emit_csv(self.tables[name], p)
            written.append(p)
        p = out / f"{stem}_summary.json"
        emit_json({"metadata": self.metadata(), "metrics": self.summary}, p)
        written.append(p)
        return written


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _pmap(fn: Callable, items: Sequence, workers: int) -> list:
    """Ordered map over a bounded thread pool."""
    if workers <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# }}}


# {{{ tasks


def _task_mlf(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .mittag_leffler import mittag_leffler

    t = Table(["alpha", "beta", "x", "value", "error_estimate"])
    for a in cfg.mlf_alpha:
        for b in cfg.mlf_beta:
            x = np.asarray(cfg.mlf_x, dtype=float)
            v, err = mittag_leffler(a, b, x, return_error=True, warn=False)
            for xi, vi, ei in zip(x, v, err):
                t.append(a, b, xi, vi, ei)
    bundle.tables["values"] = t
    bundle.summary["max_error_estimate"] = float(max((r[4] for r in t.rows), default=0.0))


def _task_eigen(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .sturm_liouville import eigensystem

    grid = cfg.sgrid()
    eig = eigensystem(cfg.potential(grid), grid, cfg.eigen_count, cfg.bc)
    t = Table(["n", "lambda", "fd_lambda"])
    for i, (lam, fd) in enumerate(zip(eig.lambdas, eig.fd_lambdas)):
        t.append(i + 1, lam, fd)
    modes = Table(["x", *[f"psi_{i + 1}" for i in range(eig.count)]])
    for j, x in enumerate(grid.nodes):
        modes.append(x, *eig.matrix[:, j])
    bundle.tables["eigenvalues"] = t
    bundle.tables["modes"] = modes
    bundle.summary.update(
        orthonormality_defect=eig.orthonormality_defect(),
        max_fd_residual=float(np.max(eig.fd_residuals())),
        first_nonnegative_index=eig.n0,
    )


def _task_phi(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .sturm_liouville import asymptotic_report

    grid = cfg.sgrid()
    rows = asymptotic_report(cfg.potential(grid), grid, [1j * e for e in cfg.eta_list])
    t = Table(["eta", "r0", "r1", "r2"])
    for e, r in zip(cfg.eta_list, rows):
        t.append(e, abs(r.r0), abs(r.r1), abs(r.r2) if r.r2 is not None else math.nan)
    bundle.tables["ratios"] = t
    for key in ("r0", "r1", "r2"):
        v = t.column(key)
        v = v[np.isfinite(v)]
        if v.size:
            bundle.summary[f"{key}_spread"] = float(v.max() / v.min()) if v.min() > 0 else math.inf


def _task_forward(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .forward import BoundaryCondition, extend_boundary_data, run_spectral, solve_ibvp_l1fd
    from .sturm_liouville import eigen_neumann

    grid, tg = cfg.sgrid(), cfg.tgrid()
    p = cfg.potential(grid)
    if cfg.a_modes:
        a = _mode_combo(grid, eigen_neumann(p, grid, max(n for n, _ in cfg.a_modes)), cfg.a_modes)
    else:
        a = SpaceProfile(grid, np.polynomial.polynomial.polyval(grid.nodes, cfg.a_coeffs or (0.0,)))
    g = TimeSeries(tg, np.polynomial.polynomial.polyval(tg.nodes, cfg.g_coeffs or (0.0,)))
    if cfg.solver == "spectral":
        G = extend_boundary_data(g) if np.any(g.values != 0.0) else None
        run = run_spectral(p, a, G, None, grid, tg, cfg.alpha, min(cfg.mode_count, max(1, cfg.cells // 4)))
        V = run.V
        bundle.summary["tail_indicator"] = run.tail_indicator
    else:
        V = solve_ibvp_l1fd(
            p, a, BoundaryCondition("neumann", g), BoundaryCondition("neumann"), None, grid, tg, cfg.alpha
        )
    t = Table(["x", "t", "value"])
    x, tt = grid.nodes, tg.nodes
    for i in range(x.size):
        for k in range(tt.size):
            t.append(x[i], tt[k], V.values[i, k])
    bundle.tables["field"] = t
    bundle.summary["l2l2_norm"] = V.l2l2_norm()


def _task_inverse(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .inverse import ReconstructionConfig, SourceSpec, generate_synthetic_data, reconstruct_f
    from .sturm_liouville import eigensystem

    grid, tg = cfg.sgrid(), cfg.tgrid()
    p = cfg.potential(grid)
    eig = eigensystem(p, grid, max([n for n, _ in cfg.f_modes] + [cfg.mode_count]), cfg.bc, corrected=False)
    f = cfg.f(grid, eig)
    rho = cfg.rho(tg)
    data = generate_synthetic_data(p, SourceSpec(rho, f, cfg.alpha), cfg.bc, grid, tg, cfg.x0, cfg.noise_level, cfg.seed)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConditioningWarning)
        rec = reconstruct_f(data, p, rho, ReconstructionConfig(cfg.mode_count, cfg.tikhonov_lambda, cfg.bc), cfg.alpha)
    traces = Table(["t", "trace0", "trace1"])
    for row in zip(tg.nodes, data.trace0.values, data.trace1.values):
        traces.append(*row)
    prof = Table(["x", "f_true", "f_reconstructed"])
    for row in zip(grid.nodes, f.values, rec.f.values):
        prof.append(*row)
    bundle.tables["traces"] = traces
    bundle.tables["profile"] = prof
    err = SpaceProfile(grid, rec.f.values - f.values).norm() / max(f.norm(), 1e-300)
    bundle.summary.update(
        relative_error=err,
        lambda_reg=rec.lambda_reg,
        residual=rec.residual,
        condition=rec.condition,
        conditioning_warning=bool(caught) or rec.ill_conditioned,
    )
    if rec.ill_conditioned:
        raise _NumericalGuard(f"normal matrix condition number {rec.condition:.3e} exceeds 1e12")


def _task_laplace(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .inverse import (
        LaplaceIdentityConfig,
        LaplaceScenario,
        entire_growth_exponent,
        laplace_identity_residual,
        smallest_m,
    )
    from .sturm_liouville import eigen_neumann

    grid = cfg.sgrid()
    p = cfg.potential(grid)
    eig = eigen_neumann(p, grid, max(n for n, _ in cfg.f_modes))
    a = cfg.f(grid, eig)
    steps = max(1, int(round(cfg.steps * cfg.data_t_end / cfg.t_end)))
    dgrid = TimeGrid(cfg.data_t_end, steps)
    g = TimeSeries(dgrid, np.polynomial.polynomial.polyval(dgrid.nodes, cfg.g_coeffs or (0.0, 0.0, 1.0)))
    m = cfg.m if cfg.m is not None else smallest_m(cfg.alpha)
    lcfg = LaplaceIdentityConfig(m, cfg.s_list)
    rows = laplace_identity_residual(
        LaplaceScenario(p, a, g, cfg.alpha, cfg.horizon, min(cfg.mode_count, cfg.cells // 4)), lcfg
    )
    t = Table(["s", "branch", "r_general", "r_special", "truncation_flag"])
    for r in rows:
        t.append(r.s, r.branch, r.r_general, r.r_special, r.truncation_flag)
    bundle.tables["residuals"] = t
    live = [r for r in rows if not r.truncation_flag]
    bundle.summary.update(
        m=m,
        max_r_special=max((r.r_special for r in live), default=math.nan),
        max_r_general=max((r.r_general for r in live), default=math.nan),
        flagged=len(rows) - len(live),
    )
    if len(cfg.s_list) > 1 and np.any(a.values != 0.0):
        bundle.summary["F_growth_exponent"] = entire_growth_exponent(a, p, cfg.s_list, cfg.alpha)


def _task_sweep(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .acceptance import _random_pair
    from .inverse import UniquenessScenario, uniqueness_gap

    grid, tg = cfg.sgrid(), cfg.tgrid()
    t = Table(["pair", "bc", "delta", "delta_refined", "trace0_gap", "trace1_gap"])
    bcs = ("dirichlet", "neumann")
    jobs = []
    for b, bc in enumerate(bcs):
        sc = UniquenessScenario(cfg.potential(grid), cfg.rho(tg), cfg.alpha, cfg.x0, bc)
        rng = np.random.default_rng(cfg.seed)
        for k in range(cfg.pairs):
            jobs.append((k, b, sc, rng.standard_normal(6), rng.standard_normal(6)))

    def one(job):
        k, b, sc, c1, d = job
        fine = sc.refined()
        g1 = uniqueness_gap(*_random_pair(sc.sgrid, sc.bc, c1, d), sc, min_separation=0.999 * cfg.separation)
        g2 = uniqueness_gap(*_random_pair(fine.sgrid, sc.bc, c1, d), fine, min_separation=0.999 * cfg.separation)
        return (k, b, g1.delta, g2.delta, g1.trace0_gap, g1.trace1_gap)

    for row in _pmap(one, jobs, cfg.workers):
        t.append(*row)
    bundle.tables["gaps"] = t
    if t.rows:
        d = t.column("delta")
        bundle.summary.update(
            min_delta=float(d.min()),
            max_refinement_drift=float(np.max(np.abs(t.column("delta_refined") / d - 1.0))),
            bc_codes={"dirichlet": 0, "neumann": 1},
        )


def _task_selftest(cfg: ExperimentConfig, bundle: ResultBundle) -> None:
    from .acceptance import run_criteria, seeded_criteria

    results = run_criteria()

    # determinism: the seeded experiments again, compared byte for byte
    seeded = {c.number for c in seeded_criteria}
    again = [c() for c in seeded_criteria]
    first = [r for r in results if r.number in seeded]
    same = _csv_bytes(_criteria_table(first)) == _csv_bytes(_criteria_table(again))

    t = _criteria_table(results)
    t.append(12, "harness_determinism", float(same), "seeded_rerun_identical", float(same))
    bundle.tables["criteria"] = t
    report = {
        f"{r.number:02d}": {
            "name": r.name,
            "passed": r.passed,
            "metrics": r.metrics,
            "runtime_s": r.runtime,
            "time_limit_s": r.time_limit,
            "note": r.note,
        }
        for r in results
    }
    report["12"] = {"name": "harness determinism", "passed": same, "metrics": {}, "note": ""}
    bundle.summary["criteria"] = report
    bundle.summary["all_passed"] = all(r.passed for r in results) and same
    for r in results:
        log.info(r.line())
    log.info("criterion 12 %s harness determinism", "PASS" if same else "FAIL")


def _criteria_table(results) -> Table:
    """Long format; runtimes stay out of the CSV so reruns compare equal."""
    t = Table(["criterion", "name", "passed", "metric", "value"])
    for r in results:
        label = r.name.replace(" ", "_")
        for k in sorted(r.metrics):
            t.append(r.number, label, float(r.passed), k, r.metrics[k])
    return t


def _csv_bytes(table: Table) -> bytes:
    return _csv_text(table).encode("ascii")


_TASKS = {
    "mlf": _task_mlf,
    "eigen": _task_eigen,
    "phi-asymptotics": _task_phi,
    "forward": _task_forward,
    "inverse": _task_inverse,
    "verify-laplace": _task_laplace,
    "uniqueness-sweep": _task_sweep,
    "selftest": _task_selftest,
}


class _NumericalGuard(Exception):
    pass


# }}}


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "results"))


def run_subcommand(
    name: str,
    config: Optional[ExperimentConfig | str | os.PathLike] = None,
    out_dir=None,
    workers: Optional[int] = None,
) -> tuple[int, Optional[ResultBundle]]:
    """Run one task and write its outputs; returns ``(exit status, bundle)``.

    Diagnostics go to the ``tfdinv`` logger (stderr under the CLI).
    """
    if name not in _TASKS:
        log.error("unknown subcommand %r; choose from %s", name, ", ".join(SUBCOMMANDS))
        return EXIT_CONFIG, None
    try:
        if config is None:
            cfg = ExperimentConfig()
        elif isinstance(config, ExperimentConfig):
            cfg = config
        else:
            cfg = ExperimentConfig.from_file(config)
        if workers is not None:
            cfg = dataclasses.replace(cfg, workers=workers)
        cfg.validate(name)
    except ConfigurationError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG, None

    out = default_out_dir() if out_dir is None else Path(out_dir)
    bundle = ResultBundle(name, cfg.digest(), started=_now())
    status = EXIT_OK
    try:
        _TASKS[name](cfg, bundle)
    except ConfigurationError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG, None
    except (GrowthOverflowError, SolverError, FloatingPointError, _NumericalGuard) as exc:
        log.error("numerical guard: %s", exc)
        bundle.summary["numerical_guard"] = str(exc)
        status = EXIT_NUMERICAL
    except TfdError as exc:
        log.error("config error: %s", exc)
        return EXIT_CONFIG, None
    bundle.finished = _now()
    if name == "selftest" and status == EXIT_OK and not bundle.summary.get("all_passed", False):
        status = EXIT_ACCEPTANCE
    bundle.write(out)
    return status, bundle
