"""Risk tables over geometric spectra, the condition suite, and config handling.

Config files are flat ``key = value`` text with ``#`` comments and
comma-separated lists.  Unknown keys are rejected.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Iterable, Sequence

from hetshrink.conditions import ordinary_minimax_check, ensemble_check
from hetshrink.estimator import make_rule
from hetshrink.model import casella_g, make_geometric_covariance, stream_key, theta_on_diagonal
from hetshrink.risk import BAYES_ENGINES, ORDINARY_ENGINES

DEFAULT_SEED = 0xC0FFEE
# Under engine=auto, cells with m at or above this use SURE with n_sure draws.
AUTO_SURE_MIN_M = 10.0


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 10
    a_list: tuple[float, ...] = (1.01, 1.05, 1.25, 1.5)
    estimators: tuple[str, ...] = ("GB", "JS")
    m_grid: tuple[float, ...] = (0.0, 2.0, 20.0, 40.0, 60.0, 80.0, 100.0)
    tau_grid: tuple[float, ...] = (1.0, 5.0, 20.0, 40.0, 60.0, 80.0, 100.0)
    n_mc: int = 1_000_000
    n_sure: int = 10_000_000
    seed: int = DEFAULT_SEED
    engine: str = "auto"
    bayes_engine: str = "RB"
    output_format: str = "md"
    workers: int = 1

    def __post_init__(self):
        if self.p < 3:
            raise ConfigError("p must be >= 3")
        for name in ("a_list", "estimators", "m_grid", "tau_grid"):
            if len(getattr(self, name)) == 0:
                raise ConfigError(f"{name} must be non-empty")
        if any(a < 1 for a in self.a_list):
            raise ConfigError("a_list entries must be >= 1")
        if any(m < 0 for m in self.m_grid):
            raise ConfigError("m_grid entries must be >= 0")
        if any(t <= 0 for t in self.tau_grid):
            raise ConfigError("tau_grid entries must be > 0")
        if self.n_mc < 2 or self.n_sure < 2:
            raise ConfigError("sample counts must be >= 2")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.engine.lower() not in ("auto", "mc", "sure"):
            raise ConfigError(f"engine must be auto, mc or sure, not {self.engine!r}")
        if self.bayes_engine.upper() not in BAYES_ENGINES:
            raise ConfigError(f"bayes_engine must be one of {sorted(BAYES_ENGINES)}")
        if self.output_format not in ("csv", "md"):
            raise ConfigError("output_format must be csv or md")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")


@dataclass(frozen=True)
class TableCell:
    estimator: str
    a: float
    index: float
    value: float
    stderr: float
    engine: str
    n: int
    table: str = ""


# -- config parsing ----------------------------------------------------------


def _parse_int(text: str) -> int:
    return int(text, 0)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in text.split(",") if tok.strip())


def _names(text: str) -> tuple[str, ...]:
    return tuple(tok.strip() for tok in text.split(",") if tok.strip())


_CONVERTERS: dict[str, Callable[[str], object]] = {
    "p": _parse_int,
    "a_list": _floats,
    "estimators": _names,
    "m_grid": _floats,
    "tau_grid": _floats,
    "n_mc": _parse_int,
    "n_sure": _parse_int,
    "seed": _parse_int,
    "engine": str.strip,
    "bayes_engine": str.strip,
    "output_format": str.strip,
    "workers": _parse_int,
}
assert set(_CONVERTERS) == {f.name for f in fields(ExperimentConfig)}


def convert_value(key: str, text: str):
    if key not in _CONVERTERS:
        raise ConfigError(f"unknown key {key!r}")
    return _CONVERTERS[key](text)


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, _, val = (part.strip() for part in line.partition("="))
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = convert_value(key, val)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key!r}: {exc}") from None
    try:
        return ExperimentConfig(**values)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def parse_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config_text(path.read_text(), str(path))


def override(config: ExperimentConfig, **changes) -> ExperimentConfig:
    changes = {k: v for k, v in changes.items() if v is not None}
    return replace(config, **changes) if changes else config


# -- tables ------------------------------------------------------------------


def _ordinary_engine(config: ExperimentConfig, m: float) -> tuple[str, int]:
    engine = config.engine.lower()
    if engine == "auto":
        engine = "sure" if m >= AUTO_SURE_MIN_M else "mc"
    return engine.upper(), (config.n_sure if engine == "sure" else config.n_mc)


def table1_cell(config: ExperimentConfig, estimator: str, a: float, m: float) -> TableCell:
    cov = make_geometric_covariance(config.p, a)
    rule = make_rule(estimator, cov)
    engine, n = _ordinary_engine(config, m)
    theta = theta_on_diagonal(m, cov)
    key = stream_key("table1", estimator.upper(), float(a), float(m))
    est = ORDINARY_ENGINES[engine](rule, theta, n, config.seed, key=key)
    value, err = est.relative_difference(cov.trace)
    return TableCell(estimator.upper(), float(a), float(m), value, err, engine, n, "table1")


def table2_cell(config: ExperimentConfig, estimator: str, a: float, tau: float) -> TableCell:
    cov = make_geometric_covariance(config.p, a)
    rule = make_rule(estimator, cov)
    engine = config.bayes_engine.upper()
    key = stream_key("table2", estimator.upper(), float(a), float(tau))
    est = BAYES_ENGINES[engine](rule, tau, config.n_mc, config.seed, key=key)
    value, err = est.relative_difference(cov.trace)
    return TableCell(estimator.upper(), float(a), float(tau), value, err, engine, config.n_mc, "table2")


def _call(job):
    fn, args = job
    return fn(*args)


def _run_cells(config: ExperimentConfig, fn, grid: Sequence[float]) -> list[TableCell]:
    jobs = [
        (fn, (config, est, a, idx))
        for est in config.estimators
        for a in config.a_list
        for idx in grid
    ]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(_call, jobs))
    return [_call(job) for job in jobs]


def run_table1(config: ExperimentConfig) -> list[TableCell]:
    """``1 - R(theta_m)/tr(Sigma)`` for each estimator, spectrum base ``a`` and ``m``."""
    return _run_cells(config, table1_cell, config.m_grid)


def run_table2(config: ExperimentConfig) -> list[TableCell]:
    """``1 - Rbar(tau)/tr(Sigma)`` for each estimator, ``a`` and ``tau``."""
    return _run_cells(config, table2_cell, config.tau_grid)


@dataclass(frozen=True)
class CheckRow:
    estimator: str
    a: float
    kind: str
    holds: bool
    margin: float
    witness: object
    method: str
    valid: bool = True
    message: str = ""


def run_check_suite(config: ExperimentConfig) -> list[CheckRow]:
    """One ordinary and one ensemble verdict per (estimator, a), with ``G = Sigma/sigma_1^2``."""
    rows = []
    for est in config.estimators:
        for a in config.a_list:
            cov = make_geometric_covariance(config.p, a)
            rule = make_rule(est, cov)
            G = casella_g(cov)
            for kind, rep in (
                ("ordinary", ordinary_minimax_check(rule.phi, cov, G)),
                ("ensemble", ensemble_check(rule.phi, cov, G)),
            ):
                rows.append(
                    CheckRow(est.upper(), float(a), kind, rep.holds, rep.margin, rep.witness,
                             rep.method, rep.valid, rep.message)
                )
    return rows


# -- output ------------------------------------------------------------------


def fmt_number(x) -> str:
    if isinstance(x, bool):
        return str(x).lower()
    if isinstance(x, float):
        return f"{x:.6g}"
    return "" if x is None else str(x)


def render(rows: Iterable[Sequence], header: Sequence[str], output_format: str) -> str:
    rows = [[fmt_number(v) for v in row] for row in rows]
    if output_format == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)
        return buf.getvalue()
    if output_format == "md":
        lines = ["| " + " | ".join(header) + " |", "|" + "|".join("---" for _ in header) + "|"]
        lines += ["| " + " | ".join(cell.replace("|", "\\|") for cell in row) + " |" for row in rows]
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown output format {output_format!r}")


CELL_HEADER = ("estimator", "a", "index", "value", "stderr", "engine", "n")
CHECK_HEADER = ("estimator", "a", "kind", "holds", "margin", "witness", "method", "valid", "message")


def render_cells(cells: Iterable[TableCell], output_format: str) -> str:
    return render(
        ((c.estimator, c.a, c.index, c.value, c.stderr, c.engine, c.n) for c in cells),
        CELL_HEADER,
        output_format,
    )


def render_checks(rows: Iterable[CheckRow], output_format: str) -> str:
    return render(
        ((r.estimator, r.a, r.kind, r.holds, r.margin, r.witness, r.method, r.valid, r.message) for r in rows),
        CHECK_HEADER,
        output_format,
    )
