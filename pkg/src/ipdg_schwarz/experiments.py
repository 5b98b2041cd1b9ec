"""Iteration-count experiments over levels, reaction strengths, sources and methods.

A table row is labelled by the number of levels in the hierarchy: a row
``r`` solves on mesh level ``r - 1`` (``2**(r-1)`` cells per side), with
mesh level 0 as the coarsest grid.  Every individual GMRES run is kept as a
:class:`RunRecord`; the "max" columns are recomputed from those records.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from .assembly import ProblemParams, assemble_rhs
from .krylov import GmresBreakdown, SolveConfig, gmres
from .mesh import MAX_LEVEL
from .precond import METHODS, assemble_levels, make_preconditioner
from .reaction import KINDS, make_model

log = logging.getLogger(__name__)

TWO_LEVEL = ("2AS", "2HS", "2MS")
MULTIGRID = ("MGAS", "MGMS")
METHOD_LABELS = {"none": "U"}

FIVE_GROUP_SOURCES = (
    (1.0, 0.0, 1.0, 0.0, 1.0),
    (0.0, 1.0, 0.0, 1.0, 0.0),
    (0.0, 1.0, 1.0, 1.0, 0.0),
    (1.0, 0.0, 0.0, 0.0, 1.0),
)


@dataclass(frozen=True)
class TableSpec:
    """Fixed ingredients of one of the predefined tables."""

    model: str
    groups: int
    epsilons: tuple[float, ...]
    sources: tuple[tuple[float, ...], ...]
    methods: tuple[str, ...]
    per_eps_methods: tuple[str, ...] = ()
    smoothing_steps: tuple[int, ...] = (1,)
    levels: tuple[int, ...] = (2, 3, 4, 5, 6, 7)
    title: str = ""


ALL_METHODS = ("MGAS", "MGMS", "2AS", "2HS", "2MS")

TABLES: dict[str, TableSpec] = {
    "poisson": TableSpec(
        model="zero",
        groups=1,
        epsilons=(1.0,),
        sources=((1.0,),),
        methods=("none", "2AS", "2HS", "2MS", "MGAS", "MGMS"),
        levels=(2, 3, 4, 5, 6, 7, 8),
        title="Poisson, unit source",
    ),
    "two_group": TableSpec(
        model="two_group",
        groups=2,
        epsilons=(1.0, 1e-1, 1e-2, 1e-3, 1e-4),
        sources=((1.0, 0.0), (0.0, 1.0)),
        methods=ALL_METHODS,
        per_eps_methods=("MGAS",),
        levels=(2, 3, 4, 5, 6, 7, 8, 9),
        title="two groups, sources (1,0) and (0,1)",
    ),
    "contrast5": TableSpec(
        model="contrast",
        groups=5,
        epsilons=(1.0, 0.1, 0.01),
        sources=FIVE_GROUP_SOURCES,
        methods=ALL_METHODS,
        per_eps_methods=("MGAS",),
        levels=(2, 3, 4, 5, 6, 7, 8),
        title="five groups, contrast reaction",
    ),
    "contrast5_smoothing": TableSpec(
        model="contrast",
        groups=5,
        epsilons=(1.0, 0.1, 0.01),
        sources=FIVE_GROUP_SOURCES,
        methods=("MGAS",),
        per_eps_methods=("MGAS",),
        smoothing_steps=(2, 4, 8),
        levels=(2, 3, 4, 5, 6, 7, 8),
        title="five groups, contrast reaction, several smoothing steps",
    ),
    "spatial5": TableSpec(
        model="spatial_contrast",
        groups=5,
        epsilons=(1.0, 0.1, 0.01),
        sources=FIVE_GROUP_SOURCES,
        methods=ALL_METHODS,
        per_eps_methods=("MGAS",),
        levels=(2, 3, 4, 5, 6, 7, 8),
        title="five groups, space dependent contrast reaction",
    ),
}


def _parse_floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _parse_ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


def parse_levels(text: str) -> tuple[int, ...]:
    """``"2-7"`` or ``"2,4,6"`` (or a mix) to a sorted tuple of row labels."""
    out: set[int] = set()
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        if "-" in part:
            lo, hi = (int(x) for x in part.split("-", 1))
            out.update(range(lo, hi + 1))
        else:
            out.add(int(part))
    return tuple(sorted(out))


def parse_methods(text: str) -> tuple[str, ...]:
    names = []
    for t in text.split(","):
        t = t.strip()
        if not t:
            continue
        name = "none" if t.upper() in ("U", "NONE") else t.upper()
        if name not in METHODS:
            raise ValueError(f"unknown method {t!r}; choose from U, {', '.join(METHODS[1:])}")
        names.append(name)
    return tuple(names)


def parse_sources(text: str) -> tuple[tuple[float, ...], ...]:
    """Semicolon separated group vectors, e.g. ``"1,0;0,1"``."""
    return tuple(_parse_floats(s) for s in text.split(";") if s.strip())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines the numbers of one table run.

    ``levels`` are row labels (number of levels in the hierarchy).  The
    caps limit the row label per method family; cells beyond a cap are
    skipped and recorded with a reason.
    """

    table: str = "custom"
    model: str = "zero"
    groups: int = 1
    levels: tuple[int, ...] = (2, 3, 4)
    epsilons: tuple[float, ...] = (1.0,)
    methods: tuple[str, ...] = ("MGAS",)
    sources: tuple[tuple[float, ...], ...] = ((1.0,),)
    smoothing_steps: tuple[int, ...] = (1,)
    per_eps_methods: tuple[str, ...] = ()
    penalty: float = 2.0
    degree: int = 1
    tol: float = 1e-8
    maxiter: int = 100
    order: str = "lexicographic"
    sweeps: str = "pre_post"
    two_level_cap: int = 7
    vcycle_cap: int = 9
    vcycle_cap_many_groups: int = 8
    csv_path: str | None = None
    json_path: str | None = None
    text_path: str | None = None

    def __post_init__(self):
        if self.model not in KINDS:
            raise ValueError(f"unknown model {self.model!r}; choose from {KINDS}")
        for m in self.methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}")
        for s in self.sources:
            if len(s) != self.groups:
                raise ValueError(f"source {s} does not have {self.groups} entries")
        if not self.levels or min(self.levels) < 1 or max(self.levels) > MAX_LEVEL + 1:
            raise ValueError(f"levels must lie in 1..{MAX_LEVEL + 1}, got {self.levels}")
        if any(m < 1 for m in self.smoothing_steps):
            raise ValueError("smoothing steps must be positive")
        SolveConfig(self.tol, self.maxiter)

    @classmethod
    def from_table(cls, name: str, **overrides) -> "ExperimentConfig":
        if name not in TABLES:
            raise ValueError(f"unknown table {name!r}; choose from {sorted(TABLES)} or 'custom'")
        table = TABLES[name]
        base = dict(
            table=name,
            model=table.model,
            groups=table.groups,
            levels=table.levels,
            epsilons=table.epsilons,
            methods=table.methods,
            sources=table.sources,
            smoothing_steps=table.smoothing_steps,
            per_eps_methods=table.per_eps_methods,
        )
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def cap_for(self, method: str) -> int:
        if method in TWO_LEVEL:
            return self.two_level_cap
        if self.groups >= 5:
            return self.vcycle_cap_many_groups
        return self.vcycle_cap

    def steps_for(self, method: str) -> tuple[int, ...]:
        """Smoothing steps only vary for the V-cycles."""
        return self.smoothing_steps if method in MULTIGRID else (1,)


# string conversions for the key-value config format
_CONVERTERS: dict[str, Callable[[str], object]] = {
    "table": str.strip,
    "model": str.strip,
    "groups": int,
    "levels": parse_levels,
    "epsilons": _parse_floats,
    "eps": _parse_floats,
    "methods": parse_methods,
    "sources": parse_sources,
    "smoothing_steps": _parse_ints,
    "per_eps_methods": parse_methods,
    "penalty": float,
    "degree": int,
    "tol": float,
    "maxiter": int,
    "order": str.strip,
    "sweeps": str.strip,
    "two_level_cap": int,
    "vcycle_cap": int,
    "vcycle_cap_many_groups": int,
    "csv_path": str.strip,
    "json_path": str.strip,
    "text_path": str.strip,
}


def parse_config_text(text: str) -> dict[str, object]:
    """Parse ``key = value`` lines (``#`` comments) into typed overrides."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    parser.optionxform = str
    parser.read_string("[run]\n" + text)
    out: dict[str, object] = {}
    for key, raw in parser["run"].items():
        key = key.strip().replace("-", "_")
        if key not in _CONVERTERS:
            raise ValueError(f"unknown config key {key!r}")
        out["epsilons" if key == "eps" else key] = _CONVERTERS[key](raw)
    return out


def read_config_file(path) -> dict[str, object]:
    return parse_config_text(Path(path).read_text())


def build_config(overrides: dict[str, object]) -> ExperimentConfig:
    """Predefined table defaults (if ``table`` names one) updated by ``overrides``."""
    overrides = dict(overrides)
    table = overrides.pop("table", "custom")
    if table != "custom":
        return ExperimentConfig.from_table(table, **overrides)
    return ExperimentConfig(table="custom", **overrides)


@dataclass
class RunRecord:
    """One GMRES solve of one table cell."""

    table: str
    levels: int
    mesh_level: int
    method: str
    smoothing_steps: int
    epsilon: float
    source: str
    iterations: int | None
    converged: bool
    true_residual: float | None
    status: str = "ok"
    reason: str = ""
    residuals: list[float] = field(default_factory=list, repr=False)

    CSV_FIELDS = (
        "table",
        "levels",
        "mesh_level",
        "method",
        "smoothing_steps",
        "epsilon",
        "source",
        "iterations",
        "converged",
        "true_residual",
        "status",
        "reason",
    )

    def csv_row(self) -> list[str]:
        return [
            self.table,
            str(self.levels),
            str(self.mesh_level),
            METHOD_LABELS.get(self.method, self.method),
            str(self.smoothing_steps),
            f"{self.epsilon:g}",
            self.source,
            "" if self.iterations is None else str(self.iterations),
            str(self.converged).lower(),
            "" if self.true_residual is None else f"{self.true_residual:.6e}",
            self.status,
            self.reason,
        ]


def source_label(source: Iterable[float]) -> str:
    return "(" + ",".join(f"{s:g}" for s in source) + ")"


def run_table(config: ExperimentConfig, progress: Callable[[RunRecord], None] | None = None) -> list[RunRecord]:
    """Run every cell of ``config`` in a fixed order and return the raw records."""
    solve = SolveConfig(tol=config.tol, maxiter=config.maxiter)
    records: list[RunRecord] = []

    def emit(rec: RunRecord):
        records.append(rec)
        if progress is not None:
            progress(rec)

    for levels in config.levels:
        mesh_level = levels - 1
        for eps in config.epsilons:
            runnable = [
                m for m in config.methods if levels <= config.cap_for(m) and (m == "none" or levels >= 2)
            ]
            ops = None
            if runnable:
                model = make_model(config.model, eps, config.groups)
                params = ProblemParams(model, degree=config.degree, penalty=config.penalty)
                ops = assemble_levels(mesh_level, params)
                rhs = [assemble_rhs(mesh_level, params, s) for s in config.sources]
            for method in config.methods:
                for m in config.steps_for(method):
                    base = dict(
                        table=config.table,
                        levels=levels,
                        mesh_level=mesh_level,
                        method=method,
                        smoothing_steps=m,
                        epsilon=eps,
                    )
                    if method not in runnable:
                        reason = (
                            "needs at least two levels"
                            if levels < 2
                            else f"levels {levels} above cap {config.cap_for(method)}"
                        )
                        for s in config.sources:
                            emit(RunRecord(**base, source=source_label(s), iterations=None,
                                           converged=False, true_residual=None,
                                           status="skipped", reason=reason))
                        continue
                    M = make_preconditioner(method, ops, m=m, order=config.order, sweeps=config.sweeps)
                    for s, b in zip(config.sources, rhs):
                        label = source_label(s)
                        try:
                            _, report = gmres(ops[-1], b, M, solve)
                        except GmresBreakdown as err:
                            emit(RunRecord(**base, source=label, iterations=None, converged=False,
                                           true_residual=None, status="error", reason=str(err)))
                            continue
                        emit(
                            RunRecord(
                                **base,
                                source=label,
                                iterations=report.iterations,
                                converged=report.converged,
                                true_residual=report.true_residual,
                                residuals=list(report.residuals),
                            )
                        )
                        log.info("levels=%d eps=%g %s m=%d %s: %d", levels, eps, method, m, label,
                                 report.iterations)
    return records


def aggregate(records: Iterable[RunRecord], levels: int, method: str, smoothing_steps: int = 1,
              epsilon: float | None = None) -> int | None:
    """Maximum iteration count over the matching completed runs (``None`` if there are none).

    Runs that hit the iteration limit count as ``maxiter + 1`` so that they
    dominate the maximum.
    """
    counts = [
        r.iterations + (0 if r.converged else 1)
        for r in records
        if r.status == "ok"
        and r.levels == levels
        and r.method == method
        and r.smoothing_steps == smoothing_steps
        and (epsilon is None or r.epsilon == epsilon)
    ]
    return max(counts) if counts else None


def table_columns(config: ExperimentConfig) -> list[tuple[str, str, int, float | None]]:
    """``(header, method, m, epsilon or None for max)`` for every column."""
    cols = []
    many_sizes = len(config.smoothing_steps) > 1
    for method in config.methods:
        for m in config.steps_for(method):
            name = METHOD_LABELS.get(method, method)
            if many_sizes and method in MULTIGRID:
                name = f"{name} m={m}"
            if method in config.per_eps_methods and len(config.epsilons) > 1:
                cols.extend((f"{name} eps={e:g}", method, m, e) for e in config.epsilons)
            elif len(config.epsilons) > 1 or len(config.sources) > 1:
                cols.append((f"{name} max", method, m, None))
            else:
                cols.append((name, method, m, None))
    return cols


def format_table(config: ExperimentConfig, records: list[RunRecord]) -> str:
    """Aligned text table, one row per level count."""
    cols = table_columns(config)
    header = ["levels"] + [c[0] for c in cols]
    rows = []
    for levels in config.levels:
        row = [str(levels)]
        for _, method, m, eps in cols:
            value = aggregate(records, levels, method, m, eps)
            if value is None:
                row.append("-")
            elif value > config.maxiter:
                row.append(f">{config.maxiter}")
            else:
                row.append(str(value))
        rows.append(row)
    widths = [max(len(r[i]) for r in [header] + rows) for i in range(len(header))]
    lines = [" | ".join(h.rjust(w) for h, w in zip(header, widths))]
    lines.append("-+-".join("-" * w for w in widths))
    lines += [" | ".join(v.rjust(w) for v, w in zip(r, widths)) for r in rows]
    title = TABLES[config.table].title if config.table in TABLES else "custom"
    return f"# {config.table}: {title}\n" + "\n".join(lines) + "\n"


def records_to_csv(records: Iterable[RunRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(RunRecord.CSV_FIELDS)
    for r in records:
        writer.writerow(r.csv_row())
    return buf.getvalue()


def records_to_json(config: ExperimentConfig, records: Iterable[RunRecord]) -> str:
    payload = {
        "config": asdict(config),
        "records": [
            {f.name: getattr(r, f.name) for f in fields(RunRecord)} for r in records
        ],
    }
    return json.dumps(payload, indent=1, sort_keys=True)


def write_outputs(config: ExperimentConfig, records: list[RunRecord], text: str | None = None) -> list[Path]:
    """Write whichever of the CSV, JSON and text outputs are configured."""
    written = []
    for path, render in (
        (config.csv_path, lambda: records_to_csv(records)),
        (config.json_path, lambda: records_to_json(config, records)),
        (config.text_path, lambda: text if text is not None else format_table(config, records)),
    ):
        if path:
            p = Path(path)
            p.parent.mkdir(parents=True, exist_ok=True)
            p.write_text(render())
            written.append(p)
    return written


def with_output_dir(config: ExperimentConfig, out: str | Path) -> ExperimentConfig:
    """Send all three outputs to ``out/<table>.{csv,json,txt}``."""
    out = Path(out)
    return replace(
        config,
        csv_path=str(out / f"{config.table}.csv"),
        json_path=str(out / f"{config.table}.json"),
        text_path=str(out / f"{config.table}.txt"),
    )


def all_completed(records: Iterable[RunRecord]) -> bool:
    return all(r.status == "ok" for r in records)


def residuals_nonincreasing(record: RunRecord, slack: float = 1e-12) -> bool:
    res = np.asarray(record.residuals)
    if res.size < 2:
        return True
    return bool(np.all(np.diff(res) <= slack * res[0]))
