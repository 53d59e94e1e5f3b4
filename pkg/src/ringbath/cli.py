"""Command-line front end: single runs, parameter sweeps, verification.

Subcommands
-----------
free        free-ring site probabilities (no bath)
evolve      reduced dynamics: probabilities, density matrix, mode occupations
current     bond currents
wavepacket  site profile of a two-packet superposition
sweep       repeat a base run over an axis (flux, lambda, width)
verify      run the self-check suite and emit a JSON report

Output is long-format CSV or JSON with one row per (time, observable,
index) and the columns ``t, delta0_t, observable, site_or_bond_or_mode,
value_re, value_im``.  Every file starts with a metadata header recording
the complete run configuration (stripping the leading ``# `` from the
header lines yields a valid config file for ``--config``), the winding
truncation actually used, its tail bound, and the code version, so a
result file alone suffices to rerun the computation.

Exit codes: 0 success, 1 configuration or usage error, 2 numerical guard
tripped during computation (partial output is removed), 3 verification
failure.
"""

from __future__ import annotations

import argparse
import contextlib
import dataclasses
import json
import math
import os
import sys
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from . import __version__
from .bath import BathSpec, FixedCouplings, GaussianEnsemble
from .besselsum import choose_truncation
from .reduced import current_reduced, density_reduced
from .ring import (
    DEFAULT_TOL,
    DensityMatrix,
    RingConfig,
    SumForm,
    TimeGrid,
    current_free,
    density_free,
    momentum_occupations,
)
from .verification import DEFAULT_SEED, run_suite
from .wavepacket import WavepacketSpec, build_state

__all__ = [
    "CliError",
    "RunConfig",
    "SweepSpec",
    "build_run_config",
    "config_to_flat",
    "execute_run",
    "main",
    "parse_flat_text",
    "run_config_from_flat",
]

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2
EXIT_VERIFY = 3

OBSERVABLES = ("prob", "current", "density", "momentum_occupations")
COLUMNS = ("t", "delta0_t", "observable", "site_or_bond_or_mode", "value_re", "value_im")

_COMMAND_OBSERVABLES = {
    "free": ("prob",),
    "evolve": ("prob", "density", "momentum_occupations"),
    "current": ("current",),
    "wavepacket": ("prob",),
}


class CliError(Exception):
    """Configuration or usage problem, reported with exit code 1."""


class _ComputeFailure(Exception):
    """Wrapper marking a failure inside the numerical phase (exit code 2)."""


# ---------------------------------------------------------------------------
# Run configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RunConfig:
    """Complete, serializable description of one simulation run.

    Exactly one of ``initial_site``, ``wavepacket``, ``matrix`` is set.
    ``observables`` is stored in canonical order, so two configs that
    request the same set compare equal.
    """

    ring: RingConfig
    grid: TimeGrid
    observables: tuple[str, ...]
    bath: BathSpec | None = None
    initial_site: int | None = None
    wavepacket: WavepacketSpec | None = None
    matrix: DensityMatrix | None = None
    sum_form: SumForm = SumForm()
    tolerance: float = DEFAULT_TOL
    out_format: str = "csv"
    seed: int | None = None

    def __post_init__(self) -> None:
        variants = [
            v is not None for v in (self.initial_site, self.wavepacket, self.matrix)
        ]
        if sum(variants) != 1:
            raise ValueError(
                "exactly one initial-state variant (site, wavepacket, matrix) "
                f"must be set, got {sum(variants)}"
            )
        if not self.observables:
            raise ValueError("observables must be nonempty")
        unknown = [o for o in self.observables if o not in OBSERVABLES]
        if unknown:
            raise ValueError(
                f"unknown observables {unknown}; choose from {list(OBSERVABLES)}"
            )
        requested = set(self.observables)
        object.__setattr__(
            self, "observables", tuple(o for o in OBSERVABLES if o in requested)
        )
        if self.out_format not in ("csv", "json"):
            raise ValueError(f"output format must be csv or json, got {self.out_format!r}")
        if not (math.isfinite(self.tolerance) and 0.0 < self.tolerance < 1.0):
            raise ValueError(f"tolerance must lie in (0, 1), got {self.tolerance}")
        if self.initial_site is not None and not (
            0 <= self.initial_site < self.ring.n_sites
        ):
            raise ValueError(
                f"initial site {self.initial_site} outside ring of "
                f"{self.ring.n_sites} sites"
            )
        if self.wavepacket is not None and self.wavepacket.n_sites != self.ring.n_sites:
            raise ValueError(
                f"wavepacket over {self.wavepacket.n_sites} sites does not match "
                f"ring of {self.ring.n_sites}"
            )
        if self.matrix is not None and self.matrix.dim != self.ring.n_sites:
            raise ValueError(
                f"initial matrix dim {self.matrix.dim} does not match ring of "
                f"{self.ring.n_sites} sites"
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, RunConfig):
            return NotImplemented
        plain = (
            "ring",
            "grid",
            "observables",
            "bath",
            "initial_site",
            "wavepacket",
            "sum_form",
            "tolerance",
            "out_format",
            "seed",
        )
        for name in plain:
            if getattr(self, name) != getattr(other, name):
                return False
        if (self.matrix is None) != (other.matrix is None):
            return False
        return self.matrix is None or bool(
            np.array_equal(self.matrix.entries, other.matrix.entries)
        )

    def initial_density(self) -> DensityMatrix:
        if self.initial_site is not None:
            return DensityMatrix.site_state(self.ring.n_sites, self.initial_site)
        if self.wavepacket is not None:
            return build_state(self.wavepacket).density()
        return self.matrix


@dataclass(frozen=True)
class SweepSpec:
    """One axis swept over explicit values on top of a base run."""

    axis: str
    values: tuple[float, ...]
    base: RunConfig

    def __post_init__(self) -> None:
        if self.axis not in ("flux", "lambda", "width"):
            raise ValueError(f"axis must be flux, lambda, or width, got {self.axis!r}")
        if not self.values:
            raise ValueError("sweep values must be nonempty")
        for v in self.values:
            if not math.isfinite(v):
                raise ValueError(f"sweep values must be finite, got {v}")
        if self.axis == "width" and self.base.wavepacket is None:
            raise ValueError("width sweep requires a wavepacket initial state")

    def configs(self) -> list[RunConfig]:
        return [_apply_axis(self.base, self.axis, v) for v in self.values]


def _apply_axis(base: RunConfig, axis: str, value: float) -> RunConfig:
    if axis == "flux":
        ring = dataclasses.replace(base.ring, flux=float(value))
        return dataclasses.replace(base, ring=ring)
    if axis == "lambda":
        return dataclasses.replace(base, bath=GaussianEnsemble(float(value)))
    packet = dataclasses.replace(base.wavepacket, width=float(value))
    return dataclasses.replace(base, wavepacket=packet)


# ---------------------------------------------------------------------------
# Flat config text format
# ---------------------------------------------------------------------------


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _fmt_float_list(vals) -> str:
    return ",".join(_fmt_float(v) for v in vals)


def parse_flat_text(text: str, source: str = "<config>") -> dict[str, str]:
    """Parse ``key = value`` lines into a mapping.

    Blank lines and lines starting with ``#`` are skipped; a trailing
    `` #`` starts an inline comment.  Duplicate keys are rejected with the
    offending line number.
    """
    mapping: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise CliError(f"{source}:{lineno}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.split(" #", 1)[0].strip()
        if not key:
            raise CliError(f"{source}:{lineno}: missing key before '='")
        if key in mapping:
            raise CliError(f"{source}:{lineno}: duplicate key {key!r}")
        mapping[key] = value
    return mapping


def config_to_flat(config: RunConfig) -> dict[str, str]:
    """Serialize a RunConfig to the flat text mapping (exact round trip)."""
    flat: dict[str, str] = {
        "ring.sites": str(config.ring.n_sites),
        "ring.hop": _fmt_float(config.ring.hop),
        "ring.flux": _fmt_float(config.ring.flux),
    }
    if isinstance(config.bath, GaussianEnsemble):
        flat["bath.lambda"] = _fmt_float(config.bath.lam)
    elif isinstance(config.bath, FixedCouplings):
        flat["bath.alphas"] = _fmt_float_list(config.bath.alphas)
        flat["bath.polarizations"] = _fmt_float_list(config.bath.polarizations)
    if config.initial_site is not None:
        flat["initial.site"] = str(config.initial_site)
    elif config.wavepacket is not None:
        packet = config.wavepacket
        flat["initial.packet.width"] = _fmt_float(packet.width)
        flat["initial.packet.offset"] = str(packet.offset)
        flat["initial.packet.k_center"] = _fmt_float(packet.k_center)
        flat["initial.packet.second"] = "true" if packet.include_second else "false"
    else:
        flat["initial.matrix"] = ";".join(
            ",".join(repr(z) for z in row) for row in config.matrix.entries.tolist()
        )
    flat["grid.times"] = _fmt_float_list(config.grid.times)
    flat["observables"] = ",".join(config.observables)
    flat["sum_form"] = config.sum_form.variant
    flat["tolerance"] = _fmt_float(config.tolerance)
    flat["output.format"] = config.out_format
    if config.seed is not None:
        flat["seed"] = str(config.seed)
    return flat


def _parse_int(flat: Mapping[str, str], key: str) -> int:
    try:
        return int(flat[key])
    except ValueError:
        raise CliError(f"field {key}: expected an integer, got {flat[key]!r}") from None


def _parse_float(flat: Mapping[str, str], key: str) -> float:
    try:
        return float(flat[key])
    except ValueError:
        raise CliError(f"field {key}: expected a number, got {flat[key]!r}") from None


def _parse_float_list(text: str, key: str) -> tuple[float, ...]:
    items = [s.strip() for s in text.split(",") if s.strip()]
    if not items:
        raise CliError(f"field {key}: expected a comma-separated list of numbers")
    try:
        return tuple(float(s) for s in items)
    except ValueError:
        raise CliError(f"field {key}: expected numbers, got {text!r}") from None


def _parse_bool(flat: Mapping[str, str], key: str) -> bool:
    value = flat[key].lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise CliError(f"field {key}: expected true or false, got {flat[key]!r}")


def _parse_matrix(text: str, n: int) -> DensityMatrix:
    rows = [r for r in text.split(";") if r.strip()]
    if len(rows) != n:
        raise CliError(f"field initial.matrix: expected {n} rows, got {len(rows)}")
    mat = np.zeros((n, n), dtype=complex)
    for i, row in enumerate(rows):
        cells = [c.strip() for c in row.split(",")]
        if len(cells) != n:
            raise CliError(
                f"field initial.matrix: row {i} has {len(cells)} entries, expected {n}"
            )
        try:
            mat[i] = [complex(c) for c in cells]
        except ValueError:
            raise CliError(
                f"field initial.matrix: row {i} holds a non-complex entry"
            ) from None
    return DensityMatrix.from_entries(mat)


_KNOWN_KEYS = {
    "ring.sites",
    "ring.hop",
    "ring.flux",
    "bath.lambda",
    "bath.alphas",
    "bath.polarizations",
    "initial.site",
    "initial.packet.width",
    "initial.packet.offset",
    "initial.packet.k_center",
    "initial.packet.second",
    "initial.matrix",
    "grid.times",
    "grid.tmax",
    "grid.steps",
    "observables",
    "sum_form",
    "tolerance",
    "output.format",
    "seed",
}


def run_config_from_flat(flat: Mapping[str, str]) -> RunConfig:
    """Build a RunConfig from a flat mapping, with field-level diagnostics.

    Keys under ``meta.`` and ``sweep.`` are ignored so that a result-file
    header can be fed back in unchanged.
    """
    flat = {
        k: v
        for k, v in flat.items()
        if not (k.startswith("meta.") or k.startswith("sweep."))
    }
    unknown = sorted(set(flat) - _KNOWN_KEYS)
    if unknown:
        raise CliError(f"unknown config fields: {', '.join(unknown)}")
    if "ring.sites" not in flat:
        raise CliError("field ring.sites is required")
    ring = RingConfig(
        n_sites=_parse_int(flat, "ring.sites"),
        hop=_parse_float(flat, "ring.hop") if "ring.hop" in flat else 1.0,
        flux=_parse_float(flat, "ring.flux") if "ring.flux" in flat else 0.0,
    )

    bath: BathSpec | None = None
    if "bath.lambda" in flat and "bath.alphas" in flat:
        raise CliError("fields bath.lambda and bath.alphas are mutually exclusive")
    if "bath.polarizations" in flat and "bath.alphas" not in flat:
        raise CliError("field bath.polarizations requires bath.alphas")
    if "bath.lambda" in flat:
        bath = GaussianEnsemble(_parse_float(flat, "bath.lambda"))
    elif "bath.alphas" in flat:
        alphas = _parse_float_list(flat["bath.alphas"], "bath.alphas")
        pols = None
        if "bath.polarizations" in flat:
            pols = _parse_float_list(flat["bath.polarizations"], "bath.polarizations")
        bath = FixedCouplings(alphas, polarizations=pols)

    initial_site = None
    packet = None
    matrix = None
    has_packet = any(k.startswith("initial.packet.") for k in flat)
    chosen = sum(("initial.site" in flat, has_packet, "initial.matrix" in flat))
    if chosen != 1:
        raise CliError(
            "exactly one initial-state variant is required: initial.site, "
            "initial.packet.*, or initial.matrix"
        )
    if "initial.site" in flat:
        initial_site = _parse_int(flat, "initial.site")
    elif has_packet:
        if "initial.packet.width" not in flat:
            raise CliError("field initial.packet.width is required")
        if "initial.packet.offset" not in flat:
            raise CliError("field initial.packet.offset is required")
        packet = WavepacketSpec(
            n_sites=ring.n_sites,
            width=_parse_float(flat, "initial.packet.width"),
            offset=_parse_int(flat, "initial.packet.offset"),
            k_center=(
                _parse_float(flat, "initial.packet.k_center")
                if "initial.packet.k_center" in flat
                else math.pi / 2.0
            ),
            include_second=(
                _parse_bool(flat, "initial.packet.second")
                if "initial.packet.second" in flat
                else True
            ),
        )
    else:
        matrix = _parse_matrix(flat["initial.matrix"], ring.n_sites)

    if "grid.times" in flat:
        if "grid.tmax" in flat or "grid.steps" in flat:
            raise CliError("field grid.times excludes grid.tmax and grid.steps")
        grid = TimeGrid(_parse_float_list(flat["grid.times"], "grid.times"))
    elif "grid.tmax" in flat and "grid.steps" in flat:
        tmax = _parse_float(flat, "grid.tmax")
        steps = _parse_int(flat, "grid.steps")
        if steps < 1:
            raise CliError(f"field grid.steps: must be at least 1, got {steps}")
        if not (math.isfinite(tmax) and tmax >= 0.0):
            raise CliError(f"field grid.tmax: must be finite and >= 0, got {tmax}")
        grid = TimeGrid(np.linspace(0.0, tmax, steps + 1))
    else:
        raise CliError("a time grid is required: grid.times, or grid.tmax with grid.steps")

    if "observables" not in flat:
        raise CliError("field observables is required")
    observables = tuple(
        s.strip() for s in flat["observables"].split(",") if s.strip()
    )

    return RunConfig(
        ring=ring,
        grid=grid,
        observables=observables,
        bath=bath,
        initial_site=initial_site,
        wavepacket=packet,
        matrix=matrix,
        sum_form=SumForm(flat.get("sum_form", "auto")),
        tolerance=_parse_float(flat, "tolerance") if "tolerance" in flat else DEFAULT_TOL,
        out_format=flat.get("output.format", "csv"),
        seed=_parse_int(flat, "seed") if "seed" in flat else None,
    )


# ---------------------------------------------------------------------------
# Execution
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RunResult:
    """Long-format rows plus the truncation certificate of one run."""

    rows: tuple[tuple[float, str, str, float, float], ...]
    p_max: int
    tail_bound: float


def _effective_bath(bath: BathSpec | None) -> BathSpec | None:
    """Map trivially empty baths to None so they share the free code path.

    A Gaussian ensemble at lambda 0 or fixed couplings that are all zero
    dephase nothing; routing them through the free evolution makes the
    empty-bath baseline bit-identical to a free run.
    """
    if bath is None:
        return None
    if isinstance(bath, GaussianEnsemble) and bath.lam == 0.0:
        return None
    if isinstance(bath, FixedCouplings) and all(a == 0.0 for a in bath.alphas):
        return None
    return bath


def execute_run(config: RunConfig) -> RunResult:
    """Evolve the configured state and tabulate the requested observables."""
    cfg = config.ring
    rho_in = config.initial_density()
    bath = _effective_bath(config.bath)
    grid = config.grid
    tol = config.tolerance
    t_max = max(grid.times, default=0.0)
    scale = 2.0 if bath is None else 4.0
    trunc = choose_truncation(scale * cfg.hop * t_max, cfg.n_sites, tol)
    if bath is None:
        states = density_free(cfg, rho_in, grid, config.sum_form, tol)
    else:
        states = density_reduced(cfg, bath, rho_in, grid, config.sum_form, tol)

    rows: list[tuple[float, str, str, float, float]] = []
    for t, rho in zip(grid, states):
        for obs in config.observables:
            if obs == "prob":
                for j, p in enumerate(rho.probabilities()):
                    rows.append((t, "prob", str(j), float(p), 0.0))
            elif obs == "current":
                for j in range(cfg.n_sites):
                    if bath is None:
                        val = current_free(cfg, rho, j)
                    else:
                        val = current_reduced(cfg, bath, rho_in, j, t, tol)
                    rows.append((t, "current", str(j), float(val), 0.0))
            elif obs == "density":
                for j in range(cfg.n_sites):
                    for l in range(cfg.n_sites):
                        z = rho.entries[j, l]
                        rows.append((t, "density", f"{j}:{l}", float(z.real), float(z.imag)))
            else:
                for n, p in enumerate(momentum_occupations(cfg, rho)):
                    rows.append((t, "momentum_occupations", str(n), float(p), 0.0))
    return RunResult(rows=tuple(rows), p_max=trunc.p_max, tail_bound=trunc.tail_bound)


def _metadata(config: RunConfig, command: str, result: RunResult) -> dict[str, str]:
    meta = config_to_flat(config)
    meta["meta.version"] = __version__
    meta["meta.command"] = command
    meta["meta.truncation_p_max"] = str(result.p_max)
    meta["meta.tail_bound"] = _fmt_float(result.tail_bound)
    return meta


def _render_csv(meta: dict[str, str], rows, hop: float, prefix: tuple = ()) -> str:
    lines = [f"# {k} = {v}" for k, v in meta.items()]
    header = COLUMNS if not prefix else (prefix[0],) + COLUMNS
    lines.append(",".join(header))
    for row in rows:
        lead = () if not prefix else (_fmt_float(row[0]),)
        t, obs, idx, re_, im_ = row[-5:]
        lines.append(
            ",".join(
                lead
                + (
                    _fmt_float(t),
                    _fmt_float(hop * t),
                    obs,
                    idx,
                    _fmt_float(re_),
                    _fmt_float(im_),
                )
            )
        )
    return "\n".join(lines) + "\n"


def _render_json(meta: dict[str, str], rows, hop: float, prefix: tuple = ()) -> str:
    header = COLUMNS if not prefix else (prefix[0],) + COLUMNS
    out_rows = []
    for row in rows:
        lead = () if not prefix else (row[0],)
        t, obs, idx, re_, im_ = row[-5:]
        out_rows.append(list(lead) + [t, hop * t, obs, idx, re_, im_])
    payload = {"meta": meta, "columns": list(header), "rows": out_rows}
    return json.dumps(payload, indent=2) + "\n"


def _render(config: RunConfig, meta: dict[str, str], rows, prefix: tuple = ()) -> str:
    if config.out_format == "csv":
        return _render_csv(meta, rows, config.ring.hop, prefix)
    return _render_json(meta, rows, config.ring.hop, prefix)


def _write_text(path: str, text: str) -> None:
    """Atomic write: the final file appears only when complete."""
    tmp = path + ".tmp"
    try:
        with open(tmp, "w", encoding="ascii", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(OSError):
            os.remove(tmp)
        raise


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        _write_text(out_path, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# Flag handling
# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        raise CliError(message)


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="flat key = value config file; flags override")
    parser.add_argument("--sites", type=int, help="number of ring sites (N >= 3)")
    parser.add_argument("--hop", type=float, help="hopping amplitude Delta0 (default 1)")
    parser.add_argument("--flux", type=float, help="total threaded flux in radians")
    parser.add_argument(
        "--lambda",
        dest="lam",
        type=float,
        help="Gaussian-ensemble dephasing strength (excludes --alphas)",
    )
    parser.add_argument(
        "--alphas", help="comma-separated fixed bath couplings, e.g. 0.3,0.4"
    )
    parser.add_argument(
        "--polarizations",
        help="comma-separated initial spin projections, one per coupling",
    )
    parser.add_argument(
        "--initial-site", dest="initial_site", type=int, help="start the particle here"
    )
    parser.add_argument(
        "--wavepacket-file",
        dest="wavepacket_file",
        help="flat file with width/offset/k_center/second keys",
    )
    parser.add_argument("--times", help="explicit comma-separated evaluation times")
    parser.add_argument("--tmax", type=float, help="grid end time (with --steps)")
    parser.add_argument("--steps", type=int, help="number of grid intervals (with --tmax)")
    parser.add_argument(
        "--form", choices=("single", "double", "auto"), help="winding-sum route"
    )
    parser.add_argument("--tol", type=float, help="truncation tail tolerance")
    parser.add_argument("--seed", type=int, help="seed recorded with the run")
    parser.add_argument("--out", help="output path (default: stdout)")
    parser.add_argument(
        "--format", dest="out_format", choices=("csv", "json"), help="output format"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ringbath", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"ringbath {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, text in (
        ("free", "free-ring site probabilities"),
        ("evolve", "reduced density matrix, probabilities, mode occupations"),
        ("current", "bond currents"),
        ("wavepacket", "two-packet interference profile"),
    ):
        p = sub.add_parser(name, help=text)
        _add_common_flags(p)
        p.set_defaults(handler=_handle_run, command_name=name)

    p = sub.add_parser("sweep", help="repeat a base run over one axis")
    _add_common_flags(p)
    p.add_argument("--axis", required=True, choices=("flux", "lambda", "width"))
    p.add_argument("--values", required=True, help="comma-separated axis values")
    p.add_argument(
        "--base",
        default="free",
        choices=("free", "evolve", "current", "wavepacket"),
        help="subcommand shape of the base run",
    )
    p.set_defaults(handler=_handle_sweep, command_name="sweep")

    p = sub.add_parser("verify", help="run the self-check suite")
    p.add_argument("--level", default="quick", choices=("quick", "full"))
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", help="write the JSON report here (default: stdout)")
    p.set_defaults(handler=_handle_verify, command_name="verify")
    return parser


def _read_config_file(path: str) -> dict[str, str]:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise CliError(f"cannot read config file {path}: {exc}") from None
    return parse_flat_text(text, source=path)


def _read_wavepacket_file(path: str) -> dict[str, str]:
    allowed = {"width", "offset", "k_center", "second"}
    flat = _read_config_file(path)
    unknown = sorted(set(flat) - allowed)
    if unknown:
        raise CliError(
            f"{path}: unknown wavepacket fields {', '.join(unknown)}; "
            f"expected {sorted(allowed)}"
        )
    return {f"initial.packet.{k}": v for k, v in flat.items()}


def _flags_to_flat(args: argparse.Namespace, command: str) -> dict[str, str]:
    over: dict[str, str] = {}
    if args.sites is not None:
        over["ring.sites"] = str(args.sites)
    if args.hop is not None:
        over["ring.hop"] = _fmt_float(args.hop)
    if args.flux is not None:
        over["ring.flux"] = _fmt_float(args.flux)
    if args.lam is not None and args.alphas is not None:
        raise CliError("--lambda and --alphas are mutually exclusive")
    if args.polarizations is not None and args.alphas is None:
        raise CliError("--polarizations requires --alphas")
    if args.lam is not None:
        over["bath.lambda"] = _fmt_float(args.lam)
    if args.alphas is not None:
        over["bath.alphas"] = args.alphas
        if args.polarizations is not None:
            over["bath.polarizations"] = args.polarizations
    if args.initial_site is not None and args.wavepacket_file is not None:
        raise CliError("--initial-site and --wavepacket-file are mutually exclusive")
    if args.initial_site is not None:
        over["initial.site"] = str(args.initial_site)
    if args.wavepacket_file is not None:
        over.update(_read_wavepacket_file(args.wavepacket_file))
    if args.times is not None and (args.tmax is not None or args.steps is not None):
        raise CliError("--times excludes --tmax and --steps")
    if args.times is not None:
        over["grid.times"] = args.times
    if args.tmax is not None:
        over["grid.tmax"] = _fmt_float(args.tmax)
    if args.steps is not None:
        over["grid.steps"] = str(args.steps)
    if args.form is not None:
        over["sum_form"] = args.form
    if args.tol is not None:
        over["tolerance"] = _fmt_float(args.tol)
    if args.seed is not None:
        over["seed"] = str(args.seed)
    if args.out_format is not None:
        over["output.format"] = args.out_format
    return over


def _merge_flat(file_flat: dict[str, str], flag_flat: dict[str, str]) -> dict[str, str]:
    """Overlay flag-derived keys on file keys, flags winning per group.

    When flags pick a bath, an initial state, or a grid, the file's version
    of that whole group is dropped so the two sources cannot produce a
    contradictory mixture.
    """
    merged = dict(file_flat)
    for group in ("bath.", "initial.", "grid."):
        if any(k.startswith(group) for k in flag_flat):
            for key in [k for k in merged if k.startswith(group)]:
                del merged[key]
    merged.update(flag_flat)
    return merged


def build_run_config(command: str, args: argparse.Namespace) -> RunConfig:
    """Assemble the RunConfig for a run-style subcommand from file + flags."""
    file_flat = _read_config_file(args.config) if args.config else {}
    flat = _merge_flat(file_flat, _flags_to_flat(args, command))
    if command == "wavepacket" and not any(
        k.startswith("initial.packet.") for k in flat
    ):
        raise CliError("the wavepacket subcommand needs --wavepacket-file or packet keys")
    if not any(k.startswith("initial.") for k in flat):
        flat["initial.site"] = "0"
    flat.setdefault("observables", ",".join(_COMMAND_OBSERVABLES[command]))
    return run_config_from_flat(flat)


# ---------------------------------------------------------------------------
# Subcommand handlers
# ---------------------------------------------------------------------------


def _guarded_run(config: RunConfig) -> RunResult:
    try:
        return execute_run(config)
    except Exception as exc:
        raise _ComputeFailure(str(exc)) from exc


def _handle_run(args: argparse.Namespace) -> int:
    command = args.command_name
    config = build_run_config(command, args)
    result = _guarded_run(config)
    text = _render(config, _metadata(config, command, result), result.rows)
    _emit(text, args.out)
    return EXIT_OK


def _handle_sweep(args: argparse.Namespace) -> int:
    if not args.out:
        raise CliError("sweep requires --out pointing at an output directory")
    values = _parse_float_list(args.values, "values")
    base = build_run_config(args.base, args)
    spec = SweepSpec(axis=args.axis, values=values, base=base)
    configs = spec.configs()

    os.makedirs(args.out, exist_ok=True)
    ext = base.out_format
    combined_rows: list[tuple] = []
    prob_stacks: list[list[float]] = []
    for value, config in zip(spec.values, configs):
        result = _guarded_run(config)
        meta = _metadata(config, args.base, result)
        meta["sweep.axis"] = spec.axis
        meta["sweep.value"] = _fmt_float(value)
        _write_text(
            os.path.join(args.out, f"{spec.axis}={_fmt_float(value)}.{ext}"),
            _render(config, meta, result.rows),
        )
        combined_rows.extend((value,) + row for row in result.rows)
        prob_stacks.append([r[3] for r in result.rows if r[1] == "prob"])

    meta = config_to_flat(base)
    meta["meta.version"] = __version__
    meta["meta.command"] = "sweep"
    meta["sweep.axis"] = spec.axis
    meta["sweep.values"] = _fmt_float_list(spec.values)
    meta["sweep.base"] = args.base
    _write_text(
        os.path.join(args.out, f"combined.{ext}"),
        _render(base, meta, combined_rows, prefix=(spec.axis,)),
    )

    for line in _sweep_report(spec, configs, prob_stacks):
        print(line)
    return EXIT_OK


def _sweep_report(
    spec: SweepSpec, configs: list[RunConfig], prob_stacks: list[list[float]]
) -> list[str]:
    """Deterministic summary lines printed after a sweep.

    A flux sweep reports how far the site probabilities move across flux
    values; a lambda sweep reports, per dephasing strength, the largest
    spread between flux 0 and flux pi/2 (the flux-sensitivity metric whose
    suppression with growing lambda is the decoherence signature).
    """
    lines: list[str] = []
    if spec.axis == "flux" and "prob" in spec.base.observables:
        arr = np.array(prob_stacks)
        dev = float(np.max(arr.max(axis=0) - arr.min(axis=0))) if arr.size else 0.0
        lines.append(f"cross_flux_deviation = {_fmt_float(dev)}")
    elif spec.axis == "lambda" and "prob" in spec.base.observables:
        for value, config in zip(spec.values, configs):
            spreads = []
            for flux in (0.0, math.pi / 2.0):
                ring = dataclasses.replace(config.ring, flux=flux)
                probe = dataclasses.replace(config, ring=ring)
                rows = [r for r in _guarded_run(probe).rows if r[1] == "prob"]
                spreads.append([r[3] for r in rows])
            arr = np.abs(np.array(spreads[0]) - np.array(spreads[1]))
            metric = float(arr.max()) if arr.size else 0.0
            lines.append(
                f"phi_sensitivity lambda={_fmt_float(value)} = {_fmt_float(metric)}"
            )
    return lines


def _handle_verify(args: argparse.Namespace) -> int:
    try:
        results = run_suite(args.level, args.seed)
    except Exception as exc:
        raise _ComputeFailure(str(exc)) from exc
    report = {
        "version": __version__,
        "level": args.level,
        "seed": args.seed,
        "passed": all(r.passed for r in results),
        "checks": [r.as_dict() for r in results],
    }
    text = json.dumps(report, indent=2) + "\n"
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        bound = "<" if r.require == "below" else ">"
        print(
            f"{status} {r.name}: observed {r.observed:.6g} "
            f"(require {bound} {r.tolerance:g})",
            file=sys.stderr,
        )
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["passed"] else EXIT_VERIFY


def main(argv: list[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.handler(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _ComputeFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
