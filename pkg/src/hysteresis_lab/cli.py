"""Command-line interface: config-driven runs with CSV/JSON/plot-script output.

Units convention across all configs: frequencies in units of the decay rate,
times in its inverse. Every run writes a manifest.json recording the resolved
configuration and the produced files; serial reruns are bit-identical.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import __version__
from .analysis import (
    constrained_characteristic_time,
    characteristic_time_map,
    fit_double_power_law,
    fit_power_law,
    fit_relaxation_area,
    hysteresis_area,
    kz_scan,
    run_area_scan,
)
from .errors import SchemaError, SimulationError
from .fock import ResonatorParams, with_auto_cutoff
from .lindblad import evolve
from .spectral import slow_mode_scan
from .steady_state import steady_state_numeric
from .sweeps import SweepProtocol

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_SIMULATION = 3
EXIT_CUTOFF = 4

SUBCOMMANDS = (
    "sweep",
    "steadystate",
    "spectrum",
    "area-scan",
    "resonance-map",
    "kz",
    "dimer",
    "qa",
)

SCAN_KINDS = ("quantum", "mean-field", "qa", "dimer", "dimer-mean-field")


# ---------------------------------------------------------------------------
# Config loading and validation


def _resolve_config_path(raw: str) -> Path:
    """An existing file wins; otherwise fall back to a packaged recipe name."""
    path = Path(raw)
    if path.is_file():
        return path
    from importlib.resources import files

    name = path.name[: -len(".toml")] if path.name.endswith(".toml") else path.name
    candidate = files("hysteresis_lab").joinpath("recipes", f"{name}.toml")
    if candidate.is_file():
        return Path(str(candidate))
    raise SchemaError(f"config file not found: {raw}")


def load_config(raw_path: str) -> dict[str, Any]:
    path = _resolve_config_path(raw_path)
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise SchemaError(f"invalid TOML in {path}: {exc}") from exc


def _check_keys(table: str, data: dict[str, Any], allowed: set[str]) -> None:
    unknown = set(data) - allowed
    if unknown:
        raise SchemaError(f"[{table}] unknown keys: {sorted(unknown)}")


def _get(
    table: str,
    data: dict[str, Any],
    key: str,
    kinds: tuple[type, ...],
    default: Any = None,
    required: bool = False,
    check: Callable[[Any], bool] | None = None,
    what: str = "",
) -> Any:
    if key not in data:
        if required:
            raise SchemaError(f"[{table}] missing required key '{key}'")
        return default
    value = data[key]
    if isinstance(value, bool) and bool not in kinds:
        raise SchemaError(f"[{table}] '{key}' has wrong type")
    if not isinstance(value, kinds):
        raise SchemaError(f"[{table}] '{key}' has wrong type")
    if check is not None and not check(value):
        raise SchemaError(f"[{table}] '{key}' {what}")
    return value


def _system_params(config: dict[str, Any], *, drive_max: float | None = None) -> ResonatorParams:
    table = config.get("system")
    if not isinstance(table, dict):
        raise SchemaError("missing [system] table")
    _check_keys("system", table, {"detuning", "kerr", "decay", "thermal", "cutoff"})
    detuning = float(_get("system", table, "detuning", (int, float), required=True))
    kerr = float(_get("system", table, "kerr", (int, float), required=True))
    decay = float(
        _get("system", table, "decay", (int, float), 1.0, check=lambda v: v > 0, what="must be > 0")
    )
    thermal = float(
        _get("system", table, "thermal", (int, float), 0.0, check=lambda v: v >= 0, what="must be >= 0")
    )
    cutoff = _get("system", table, "cutoff", (int, str), "auto")
    if isinstance(cutoff, str):
        if cutoff != "auto":
            raise SchemaError("[system] cutoff must be an integer or 'auto'")
        if drive_max is None:
            raise SchemaError("[system] cutoff 'auto' is not available for this subcommand")
        base = ResonatorParams(detuning, kerr, decay, thermal, cutoff=1)
        return with_auto_cutoff(base, drive_max)
    if cutoff < 1:
        raise SchemaError("[system] cutoff must be at least 1")
    return ResonatorParams(detuning, kerr, decay, thermal, int(cutoff))


def _protocol(config: dict[str, Any], *, need_time: bool = True) -> SweepProtocol:
    table = config.get("protocol")
    if not isinstance(table, dict):
        raise SchemaError("missing [protocol] table")
    _check_keys("protocol", table, {"drive_start", "drive_span", "ramp_time", "rate", "samples"})
    start = float(
        _get(
            "protocol", table, "drive_start", (int, float), required=True,
            check=lambda v: v >= 0, what="must be >= 0",
        )
    )
    span = float(
        _get(
            "protocol", table, "drive_span", (int, float), required=True,
            check=lambda v: v > 0, what="must be > 0",
        )
    )
    samples = int(
        _get("protocol", table, "samples", (int,), 201, check=lambda v: v >= 2, what="must be >= 2")
    )
    has_ramp = "ramp_time" in table
    has_rate = "rate" in table
    if not need_time:
        # rate scans carry their own time grid; the protocol is just the window
        if has_ramp or has_rate:
            raise SchemaError("[protocol] ramp_time/rate belong in the scan table here")
        return SweepProtocol(start, span, 1.0, samples)
    if has_ramp == has_rate:
        raise SchemaError("[protocol] needs exactly one of 'ramp_time' or 'rate'")
    if has_ramp:
        ramp = float(
            _get("protocol", table, "ramp_time", (int, float), check=lambda v: v > 0, what="must be > 0")
        )
    else:
        rate = float(
            _get("protocol", table, "rate", (int, float), check=lambda v: v > 0, what="must be > 0")
        )
        ramp = rate * span
    return SweepProtocol(start, span, ramp, samples)


def _integrator(config: dict[str, Any]) -> tuple[float, float]:
    table = config.get("integrator", {})
    if not isinstance(table, dict):
        raise SchemaError("[integrator] must be a table")
    _check_keys("integrator", table, {"rtol", "atol"})
    rtol = float(
        _get("integrator", table, "rtol", (int, float), 1e-8, check=lambda v: v > 0, what="must be > 0")
    )
    atol = float(
        _get("integrator", table, "atol", (int, float), 1e-10, check=lambda v: v > 0, what="must be > 0")
    )
    return rtol, atol


def _rates(table_name: str, table: dict[str, Any]) -> np.ndarray:
    explicit = "rates" in table
    ranged = {"rate_min", "rate_max", "points"} & set(table)
    if explicit and ranged:
        raise SchemaError(f"[{table_name}] give either 'rates' or a rate range, not both")
    if explicit:
        rates = table["rates"]
        if not isinstance(rates, list) or not rates or not all(
            isinstance(r, (int, float)) and not isinstance(r, bool) and r > 0 for r in rates
        ):
            raise SchemaError(f"[{table_name}] 'rates' must be a non-empty list of positive numbers")
        return np.asarray([float(r) for r in rates])
    if len(ranged) != 3:
        raise SchemaError(f"[{table_name}] needs 'rates' or all of rate_min/rate_max/points")
    lo = float(_get(table_name, table, "rate_min", (int, float), check=lambda v: v > 0, what="must be > 0"))
    hi = float(_get(table_name, table, "rate_max", (int, float), check=lambda v: v > lo, what="must exceed rate_min"))
    pts = int(_get(table_name, table, "points", (int,), check=lambda v: v >= 2, what="must be >= 2"))
    return np.logspace(np.log10(lo), np.log10(hi), pts)


def _run_table(config: dict[str, Any], default_label: str) -> dict[str, Any]:
    table = config.get("run", {})
    if not isinstance(table, dict):
        raise SchemaError("[run] must be a table")
    _check_keys("run", table, {"label", "out", "jobs"})
    return {
        "label": _get("run", table, "label", (str,), default_label),
        "out": _get("run", table, "out", (str,), "results"),
        "jobs": int(_get("run", table, "jobs", (int,), 1, check=lambda v: v >= 1, what="must be >= 1")),
    }


# ---------------------------------------------------------------------------
# Output helpers


def _fmt(value: float) -> str:
    return format(float(value), ".17g")


def write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    rows = zip(*columns)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _write_json(path: Path, payload: dict[str, Any]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _write_manifest(
    out: Path, subcommand: str, run: dict[str, Any], resolved: dict[str, Any], outputs: list[str]
) -> None:
    _write_json(
        out / "manifest.json",
        {
            "version": __version__,
            "subcommand": subcommand,
            "run": run,
            "config": resolved,
            "outputs": sorted(outputs),
        },
    )


def _write_plot_script(path: Path, body: str) -> None:
    head = (
        "#!/usr/bin/env python3\n"
        '"""Generated plotting script; run it next to the CSV files."""\n'
        "import numpy as np\n"
        "import matplotlib\n"
        'matplotlib.use("Agg")\n'
        "import matplotlib.pyplot as plt\n\n"
    )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(head + body)


def _params_dict(params: ResonatorParams) -> dict[str, Any]:
    return {
        "detuning": params.detuning,
        "kerr": params.kerr,
        "decay": params.decay,
        "thermal": params.thermal,
        "cutoff": params.cutoff,
    }


def _protocol_dict(protocol: SweepProtocol) -> dict[str, Any]:
    return {
        "drive_start": protocol.drive_start,
        "drive_span": protocol.drive_span,
        "ramp_time": protocol.ramp_time,
        "samples": protocol.samples,
    }


# ---------------------------------------------------------------------------
# Subcommand implementations


def _cmd_sweep(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "protocol", "integrator"})
    protocol = _protocol(config)
    params = _system_params(
        config, drive_max=protocol.drive_start + protocol.drive_span
    )
    rtol, atol = _integrator(config)
    rho0 = steady_state_numeric(protocol.drive_start, params)
    trace = evolve(rho0, protocol, params, rtol=rtol, atol=atol)

    label = run["label"]
    csv_path = out / f"{label}_trace.csv"
    write_csv(
        csv_path,
        ["F", "n_up", "n_down", "g2_up", "g2_down"],
        [trace.drive, trace.n_up, trace.n_down, trace.g2_up, trace.g2_down],
    )
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 7))\n"
        'ax1.plot(data["F"], data["n_up"], label="up leg")\n'
        'ax1.plot(data["F"], data["n_down"], label="down leg")\n'
        'ax1.set_ylabel("photon number")\n'
        "ax1.legend()\n"
        'ax2.plot(data["F"], data["g2_up"], label="up leg")\n'
        'ax2.plot(data["F"], data["g2_down"], label="down leg")\n'
        'ax2.set_xlabel("drive amplitude")\n'
        'ax2.set_ylabel("g2(0)")\n'
        "ax2.legend()\n"
        f'fig.savefig("{label}_trace.png", dpi=160, bbox_inches="tight")\n',
    )
    resolved = {
        "system": _params_dict(params),
        "protocol": _protocol_dict(trace.protocol),
        "integrator": {"rtol": rtol, "atol": atol},
    }
    _write_manifest(out, "sweep", run, resolved, [csv_path.name, plot.name])
    if not trace.metadata.get("cutoff_safe", True):
        print(
            f"warning: Fock tail exceeded tolerance (max {trace.metadata['max_tail']:.2e}); "
            "results kept, treat them as cutoff-limited",
            file=sys.stderr,
        )
        return EXIT_CUTOFF
    return EXIT_OK


def _grid_table(config: dict[str, Any]) -> np.ndarray:
    table = config.get("grid")
    if not isinstance(table, dict):
        raise SchemaError("missing [grid] table")
    _check_keys("grid", table, {"drive_min", "drive_max", "points"})
    lo = float(
        _get("grid", table, "drive_min", (int, float), required=True, check=lambda v: v >= 0, what="must be >= 0")
    )
    hi = float(
        _get("grid", table, "drive_max", (int, float), required=True, check=lambda v: v > lo, what="must exceed drive_min")
    )
    pts = int(_get("grid", table, "points", (int,), required=True, check=lambda v: v >= 3, what="must be >= 3"))
    return np.linspace(lo, hi, pts)


def _cmd_steadystate(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "grid"})
    grid = _grid_table(config)
    params = _system_params(config, drive_max=float(grid[-1]))
    n_vals, g2_vals, re_a, im_a = [], [], [], []
    from .fock import destroy, expectation, photon_number, second_order_coherence

    a_op = destroy(params.dim)
    for f in grid:
        rho = steady_state_numeric(float(f), params)
        n_vals.append(photon_number(rho.matrix))
        g2_vals.append(second_order_coherence(rho.matrix))
        coh = expectation(a_op, rho.matrix)
        re_a.append(coh.real)
        im_a.append(coh.imag)

    label = run["label"]
    csv_path = out / f"{label}_steady.csv"
    write_csv(
        csv_path,
        ["F", "n", "g2", "re_a", "im_a"],
        [grid, np.array(n_vals), np.array(g2_vals), np.array(re_a), np.array(im_a)],
    )
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, ax = plt.subplots(figsize=(6, 4))\n"
        'ax.plot(data["F"], data["n"])\n'
        'ax.set_xlabel("drive amplitude")\n'
        'ax.set_ylabel("stationary photon number")\n'
        f'fig.savefig("{label}_steady.png", dpi=160, bbox_inches="tight")\n',
    )
    resolved = {"system": _params_dict(params), "grid": [float(grid[0]), float(grid[-1]), len(grid)]}
    _write_manifest(out, "steadystate", run, resolved, [csv_path.name, plot.name])
    return EXIT_OK


def _cmd_spectrum(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "grid"})
    grid = _grid_table(config)
    params = _system_params(config)
    results, transition = slow_mode_scan(grid, params, jobs=run["jobs"])

    label = run["label"]
    csv_path = out / f"{label}_spectrum.csv"
    write_csv(
        csv_path,
        ["F", "re_lambda", "im_lambda", "tau_R"],
        [
            np.array([r.drive for r in results]),
            np.array([r.slow_eigenvalue.real for r in results]),
            np.array([r.slow_eigenvalue.imag for r in results]),
            np.array([r.relaxation_time for r in results]),
        ],
    )
    trans_path = out / f"{label}_transition.json"
    _write_json(
        trans_path,
        {
            "transition_drive": transition.transition_drive,
            "tunneling_time": transition.tunneling_time,
            "soft_window": list(transition.soft_window),
        },
    )
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 7))\n"
        'ax1.plot(data["F"], -data["re_lambda"], label="damping rate")\n'
        'ax1.set_yscale("log")\n'
        'ax1.set_ylabel("-Re lambda_slow")\n'
        'ax2.plot(data["F"], np.abs(data["im_lambda"]), label="|frequency|")\n'
        'ax2.set_xlabel("drive amplitude")\n'
        'ax2.set_ylabel("|Im lambda_slow|")\n'
        f'fig.savefig("{label}_spectrum.png", dpi=160, bbox_inches="tight")\n',
    )
    resolved = {"system": _params_dict(params), "grid": [float(grid[0]), float(grid[-1]), len(grid)]}
    _write_manifest(
        out, "spectrum", run, resolved, [csv_path.name, trans_path.name, plot.name]
    )
    return EXIT_OK


def _fit_payload(ramp_times: np.ndarray, areas: np.ndarray, span: float, kind: str) -> dict[str, Any]:
    payload: dict[str, Any]
    try:
        fit = fit_double_power_law(ramp_times, areas, span)
        payload = {
            "fit_mode": "double",
            "exponent_slow": fit.exponent_slow,
            "stderr_slow": fit.stderr_slow,
            "exponent_fast": fit.exponent_fast,
            "stderr_fast": fit.stderr_fast,
            "crossover": fit.crossover,
            "tau": fit.characteristic_time,
        }
    except ValueError:
        single = fit_power_law(ramp_times, areas)
        payload = {
            "fit_mode": "single",
            "exponent_slow": single.exponent,
            "stderr_slow": single.exponent_stderr,
            "tau": constrained_characteristic_time(ramp_times / span, areas),
        }
    if kind in ("mean-field", "dimer-mean-field"):
        try:
            relax = fit_relaxation_area(ramp_times, areas)
            payload.update(
                {
                    "offset": relax.offset,
                    "offset_stderr": relax.offset_stderr,
                    "exponent_offset_corrected": -relax.exponent,
                    "exponent_offset_corrected_stderr": relax.exponent_stderr,
                }
            )
        except (ValueError, RuntimeError):
            pass
    return payload


def _cmd_area_scan(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "protocol", "integrator", "scan", "dimer"})
    table = config.get("scan")
    if not isinstance(table, dict):
        raise SchemaError("missing [scan] table")
    _check_keys("scan", table, {"kind", "rates", "rate_min", "rate_max", "points", "fit"})
    kind = _get("scan", table, "kind", (str,), "quantum", check=lambda v: v in SCAN_KINDS,
                what=f"must be one of {SCAN_KINDS}")
    rates = _rates("scan", table)
    do_fit = bool(_get("scan", table, "fit", (bool,), True))

    protocol = _protocol(config, need_time=False)
    rtol, atol = _integrator(config)
    drive_max = protocol.drive_start + protocol.drive_span
    if kind in ("dimer", "dimer-mean-field"):
        params: Any = _dimer_params(config, drive_max=drive_max)
        resolved_system = _dimer_dict(params)
    else:
        params = _system_params(config, drive_max=drive_max)
        resolved_system = _params_dict(params)

    scan = run_area_scan(
        kind,
        rates,
        protocol.drive_start,
        protocol.drive_span,
        params,
        samples=protocol.samples,
        rtol=rtol,
        atol=atol,
        jobs=run["jobs"],
    )
    label = run["label"]
    csv_path = out / f"{label}_area.csv"
    write_csv(
        csv_path,
        ["rate", "t_s", "area"],
        [scan.rates, scan.ramp_times, scan.areas],
    )
    outputs = [csv_path.name]
    if do_fit:
        fit_path = out / "fit.json"
        _write_json(fit_path, _fit_payload(scan.ramp_times, scan.areas, scan.drive_span, kind))
        outputs.append(fit_path.name)
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, ax = plt.subplots(figsize=(6, 4))\n"
        'ax.loglog(data["rate"], data["area"], "o-")\n'
        'ax.set_xlabel("ramp time / drive span")\n'
        'ax.set_ylabel("loop area")\n'
        f'fig.savefig("{label}_area.png", dpi=160, bbox_inches="tight")\n',
    )
    outputs.append(plot.name)
    resolved = {
        "system": resolved_system,
        "protocol": {
            "drive_start": protocol.drive_start,
            "drive_span": protocol.drive_span,
            "samples": protocol.samples,
        },
        "integrator": {"rtol": rtol, "atol": atol},
        "scan": {"kind": kind, "rates": [float(r) for r in scan.rates]},
    }
    _write_manifest(out, "area-scan", run, resolved, outputs)
    if not scan.metadata.get("cutoff_safe", True):
        print(
            "warning: Fock tail exceeded tolerance in at least one sweep; "
            "results kept, treat them as cutoff-limited",
            file=sys.stderr,
        )
        return EXIT_CUTOFF
    return EXIT_OK


def _cmd_resonance_map(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "map"})
    table = config.get("map")
    if not isinstance(table, dict):
        raise SchemaError("missing [map] table")
    _check_keys(
        "map", table, {"kerr_min", "kerr_max", "step", "rates", "rate_min", "rate_max", "points", "margin", "samples"}
    )
    lo = float(_get("map", table, "kerr_min", (int, float), required=True, check=lambda v: v > 0, what="must be > 0"))
    hi = float(_get("map", table, "kerr_max", (int, float), required=True, check=lambda v: v > lo, what="must exceed kerr_min"))
    step = float(_get("map", table, "step", (int, float), required=True, check=lambda v: v > 0, what="must be > 0"))
    margin = float(_get("map", table, "margin", (int, float), 0.75, check=lambda v: v >= 0, what="must be >= 0"))
    samples = int(_get("map", table, "samples", (int,), 201, check=lambda v: v >= 2, what="must be >= 2"))
    rates = _rates("map", table)

    system = config.get("system")
    if not isinstance(system, dict):
        raise SchemaError("missing [system] table")
    if system.get("cutoff", "auto") != "auto":
        raise SchemaError("[system] the resonance map chooses cutoffs per grid point; use 'auto'")
    base = _system_params({"system": {**system, "cutoff": 1}})
    kerr_grid = np.arange(lo, hi + 0.5 * step, step)

    result = characteristic_time_map(
        kerr_grid, base, rates, margin=margin, samples=samples, jobs=run["jobs"]
    )
    label = run["label"]
    csv_path = out / f"{label}_map.csv"
    write_csv(
        csv_path,
        ["U", "tau", "window_lo", "window_hi"],
        [
            result.kerr_grid,
            result.characteristic_times,
            np.array([w[0] for w in result.windows]),
            np.array([w[1] for w in result.windows]),
        ],
    )
    minima_path = out / f"{label}_minima.json"
    _write_json(minima_path, {"minima": [float(u) for u in result.minima]})
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, ax = plt.subplots(figsize=(6, 4))\n"
        'ax.semilogy(data["U"], data["tau"], "o-")\n'
        'ax.set_xlabel("interaction strength")\n'
        'ax.set_ylabel("characteristic time")\n'
        f'fig.savefig("{label}_map.png", dpi=160, bbox_inches="tight")\n',
    )
    resolved = {
        "system": {**system, "cutoff": "auto"},
        "map": {
            "kerr_grid": [float(u) for u in result.kerr_grid],
            "rates": [float(r) for r in rates],
            "margin": margin,
            "samples": samples,
        },
    }
    _write_manifest(
        out, "resonance-map", run, resolved, [csv_path.name, minima_path.name, plot.name]
    )
    return EXIT_OK


def _cmd_kz(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "grid", "kz"})
    grid = _grid_table(config)
    params = _system_params(config)
    table = config.get("kz")
    if not isinstance(table, dict):
        raise SchemaError("missing [kz] table")
    _check_keys("kz", table, {"rates", "rate_min", "rate_max", "points", "drive_span"})
    rates = _rates("kz", table)
    span = float(
        _get("kz", table, "drive_span", (int, float), required=True, check=lambda v: v > 0, what="must be > 0")
    )

    results, transition = slow_mode_scan(grid, params, jobs=run["jobs"])
    scan = kz_scan(rates * span, results, transition, span)

    label = run["label"]
    csv_path = out / f"{label}_kz.csv"
    write_csv(
        csv_path,
        ["rate", "t_s", "delta_F", "asymptote"],
        [scan.ramp_times / span, scan.ramp_times, scan.widths, scan.asymptotes],
    )
    trans_path = out / f"{label}_transition.json"
    _write_json(
        trans_path,
        {
            "transition_drive": transition.transition_drive,
            "tunneling_time": transition.tunneling_time,
            "soft_window": list(transition.soft_window),
        },
    )
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, ax = plt.subplots(figsize=(6, 4))\n"
        'ax.loglog(data["rate"], data["delta_F"], "o-", label="measured width")\n'
        'ax.loglog(data["rate"], data["asymptote"], "--", label="slow-sweep asymptote")\n'
        'ax.set_xlabel("ramp time / drive span")\n'
        'ax.set_ylabel("freeze-out width")\n'
        "ax.legend()\n"
        f'fig.savefig("{label}_kz.png", dpi=160, bbox_inches="tight")\n',
    )
    resolved = {
        "system": _params_dict(params),
        "grid": [float(grid[0]), float(grid[-1]), len(grid)],
        "kz": {"rates": [float(r) for r in rates], "drive_span": span},
    }
    _write_manifest(
        out, "kz", run, resolved, [csv_path.name, trans_path.name, plot.name]
    )
    return EXIT_OK


def _dimer_params(config: dict[str, Any], *, drive_max: float):
    from .dimer import DimerParams
    from .fock import safe_cutoff

    table = config.get("dimer")
    if not isinstance(table, dict):
        raise SchemaError("missing [dimer] table")
    _check_keys("dimer", table, {"hopping", "site_cutoff"})
    hopping = float(_get("dimer", table, "hopping", (int, float), required=True))
    site_cutoff = _get("dimer", table, "site_cutoff", (int,), 12)
    if site_cutoff < 1:
        raise SchemaError("[dimer] site_cutoff must be at least 1")
    system = config.get("system")
    if not isinstance(system, dict):
        raise SchemaError("missing [system] table")
    site_config = {"system": {**system, "cutoff": int(site_cutoff)}}
    site = _system_params(site_config)
    try:
        return DimerParams(site=site, hopping=hopping)
    except ValueError as exc:
        raise SchemaError(str(exc)) from exc


def _dimer_dict(params) -> dict[str, Any]:
    return {**_params_dict(params.site), "hopping": params.hopping}


def _cmd_dimer(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    from .dimer import dimer_steady_state, evolve_dimer

    _check_keys("", config, {"run", "system", "protocol", "integrator", "dimer"})
    protocol = _protocol(config)
    params = _dimer_params(config, drive_max=protocol.drive_start + protocol.drive_span)
    rtol, atol = _integrator(config)
    rho0 = dimer_steady_state(protocol.drive_start, params)
    trace = evolve_dimer(rho0, protocol, params, rtol=rtol, atol=atol)

    label = run["label"]
    csv_path = out / f"{label}_trace.csv"
    write_csv(
        csv_path,
        ["F", "n1_up", "n1_down", "n2_up", "n2_down", "g2_up", "g2_down", "g2x_up", "g2x_down"],
        [
            trace.drive,
            trace.n1_up,
            trace.n1_down,
            trace.n2_up,
            trace.n2_down,
            trace.g2_local_up,
            trace.g2_local_down,
            trace.g2_cross_up,
            trace.g2_cross_down,
        ],
    )
    plot = out / f"{label}_plot.py"
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, (ax1, ax2) = plt.subplots(2, 1, sharex=True, figsize=(6, 7))\n"
        'ax1.plot(data["F"], data["n1_up"], label="site 1 up")\n'
        'ax1.plot(data["F"], data["n1_down"], label="site 1 down")\n'
        'ax1.set_ylabel("photon number")\n'
        "ax1.legend()\n"
        'ax2.plot(data["F"], data["g2x_up"], label="cross g2 up")\n'
        'ax2.plot(data["F"], data["g2x_down"], label="cross g2 down")\n'
        'ax2.set_xlabel("drive amplitude")\n'
        'ax2.set_ylabel("g2_12(0)")\n'
        "ax2.legend()\n"
        f'fig.savefig("{label}_trace.png", dpi=160, bbox_inches="tight")\n',
    )
    resolved = {
        "system": _dimer_dict(params),
        "protocol": _protocol_dict(protocol),
        "integrator": {"rtol": rtol, "atol": atol},
    }
    _write_manifest(out, "dimer", run, resolved, [csv_path.name, plot.name])
    if not trace.metadata.get("cutoff_safe", True):
        print(
            f"warning: Fock tail exceeded tolerance (max {trace.metadata['max_tail']:.2e}); "
            "results kept, treat them as cutoff-limited",
            file=sys.stderr,
        )
        return EXIT_CUTOFF
    return EXIT_OK


def _cmd_qa(config: dict[str, Any], run: dict[str, Any], out: Path) -> int:
    _check_keys("", config, {"run", "system", "protocol", "integrator", "scan"})
    table = config.get("scan")
    if not isinstance(table, dict):
        raise SchemaError("missing [scan] table")
    _check_keys("scan", table, {"rates", "rate_min", "rate_max", "points", "compare_exact"})
    rates = _rates("scan", table)
    compare = bool(_get("scan", table, "compare_exact", (bool,), True))

    protocol = _protocol(config, need_time=False)
    rtol, atol = _integrator(config)
    params = _system_params(config, drive_max=protocol.drive_start + protocol.drive_span)

    qa = run_area_scan(
        "qa",
        rates,
        protocol.drive_start,
        protocol.drive_span,
        params,
        samples=protocol.samples,
        jobs=run["jobs"],
    )
    label = run["label"]
    outputs = []
    fit_payload = {"qa": _fit_payload(qa.ramp_times, qa.areas, qa.drive_span, "qa")}
    if compare:
        exact = run_area_scan(
            "quantum",
            rates,
            protocol.drive_start,
            protocol.drive_span,
            params,
            samples=protocol.samples,
            rtol=rtol,
            atol=atol,
            jobs=run["jobs"],
        )
        fit_payload["exact"] = _fit_payload(exact.ramp_times, exact.areas, exact.drive_span, "quantum")
        csv_path = out / f"{label}_area.csv"
        write_csv(
            csv_path,
            ["rate", "t_s", "area_qa", "area_exact"],
            [qa.rates, qa.ramp_times, qa.areas, exact.areas],
        )
    else:
        csv_path = out / f"{label}_area.csv"
        write_csv(csv_path, ["rate", "t_s", "area_qa"], [qa.rates, qa.ramp_times, qa.areas])
    outputs.append(csv_path.name)
    fit_path = out / "fit.json"
    _write_json(fit_path, fit_payload)
    outputs.append(fit_path.name)
    plot = out / f"{label}_plot.py"
    cols = 'ax.loglog(data["rate"], data["area_qa"], "o-", label="quasi-adiabatic")\n'
    if compare:
        cols += 'ax.loglog(data["rate"], data["area_exact"], "s-", label="exact")\n'
    _write_plot_script(
        plot,
        f'data = np.genfromtxt("{csv_path.name}", delimiter=",", names=True)\n'
        "fig, ax = plt.subplots(figsize=(6, 4))\n" + cols +
        'ax.set_xlabel("ramp time / drive span")\n'
        'ax.set_ylabel("loop area")\n'
        "ax.legend()\n"
        f'fig.savefig("{label}_area.png", dpi=160, bbox_inches="tight")\n',
    )
    outputs.append(plot.name)
    resolved = {
        "system": _params_dict(params),
        "protocol": {
            "drive_start": protocol.drive_start,
            "drive_span": protocol.drive_span,
            "samples": protocol.samples,
        },
        "integrator": {"rtol": rtol, "atol": atol},
        "scan": {"rates": [float(r) for r in rates], "compare_exact": compare},
    }
    _write_manifest(out, "qa", run, resolved, outputs)
    return EXIT_OK


_DISPATCH = {
    "sweep": _cmd_sweep,
    "steadystate": _cmd_steadystate,
    "spectrum": _cmd_spectrum,
    "area-scan": _cmd_area_scan,
    "resonance-map": _cmd_resonance_map,
    "kz": _cmd_kz,
    "dimer": _cmd_dimer,
    "qa": _cmd_qa,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hysteresis-lab",
        description="Driven-dissipative Kerr resonator sweeps, spectra, and scans.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name, help=f"run the {name} recipe")
        p.add_argument("--config", required=True, help="TOML config path or packaged recipe name")
        p.add_argument("--jobs", type=int, default=None, help="worker pool width for scans")
        p.add_argument("--out", default=None, help="output directory (default from config)")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config)
        if not isinstance(config, dict):
            raise SchemaError("config root must be a table")
        run = _run_table(config, args.subcommand.replace("-", "_"))
        if args.jobs is not None:
            if args.jobs < 1:
                raise SchemaError("--jobs must be >= 1")
            run["jobs"] = args.jobs
        if args.out is not None:
            run["out"] = args.out
        out = Path(run["out"])
        out.mkdir(parents=True, exist_ok=True)
        return _DISPATCH[args.subcommand](config, run, out)
    except SchemaError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except SimulationError as exc:
        print(f"simulation error: {exc}", file=sys.stderr)
        return EXIT_SIMULATION


if __name__ == "__main__":
    sys.exit(main())
