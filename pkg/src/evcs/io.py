"""Scenario and search-space files, result bundles, and flat-file output.

Scenario files are INI-style text with named sections; all numbers are plain
decimals and ``#``/``;`` comments are allowed.  Unknown sections or keys are
rejected.  Missing keys take the documented defaults: splitter phases 0,
truncation 16/9, phi = theta = pi, t1 = 1; a missing t2 is solved from the
heralding condition when gamma0 > 0 (and defaults to 1 otherwise).

Result bundles are deterministic JSON (sorted keys, no timestamps): feeding
the echoed scenario back into the tool reproduces the bundle byte for byte.
"""

import configparser
import json
import math
import os
import tempfile
from typing import Any

import numpy as np

from . import __version__
from .errors import ScenarioParseError, ValidationError
from .fit import FitResult, fit_entangled
from .network import BeamSplitterSpec, solve_t2, t2_closed_forms, zero_sum_residual
from .search import ScenarioRow, SearchSpace, evaluate_scenario
from .simulator import (
    HeraldedGrid,
    ScenarioSpec,
    herald_single,
    joint_amplitudes,
    make_scenario,
    smallv_metric,
)

__all__ = [
    "parse_scenario_text",
    "parse_scenario_file",
    "scenario_to_dict",
    "scenario_from_dict",
    "parse_search_text",
    "parse_search_file",
    "simulate_bundle",
    "grid_to_dict",
    "grid_from_dict",
    "fit_to_dict",
    "write_json_atomic",
    "write_text_atomic",
]

_SCENARIO_SCHEMA = {
    "squeeze": {"s", "phi"},
    "beams": {"beta0", "gamma0", "theta"},
    "splitters": {"t1", "t2", "phi_tau1", "phi_rho1", "phi_tau2", "phi_rho2"},
    "truncation": {"input_cap", "output_cap"},
}

_SEARCH_SCHEMA = {
    "fixed": {"s", "gamma0", "phi", "theta"},
    "grid": {"beta0_min", "beta0_max", "beta0_step", "t1_min", "t1_max", "t1_step"},
    "objective": {"kind", "pu_floor", "target_alpha", "top_k"},
    "truncation": {"input_cap", "output_cap"},
    "overrides": {"t2"},
}


def _read_ini(text: str, schema: dict, label: str) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ScenarioParseError(f"cannot parse {label}: {exc}") from exc
    out: dict[str, dict[str, str]] = {}
    for section in parser.sections():
        if section not in schema:
            raise ScenarioParseError(f"unknown section [{section}] in {label}")
        for key in parser[section]:
            if key not in schema[section]:
                raise ScenarioParseError(f"unknown key '{key}' in [{section}] of {label}")
        out[section] = dict(parser[section])
    return out


def _get_float(sections: dict, section: str, key: str, default: float) -> float:
    raw = sections.get(section, {}).get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError as exc:
        raise ScenarioParseError(f"[{section}] {key} = {raw!r} is not a number") from exc


def _get_int(sections: dict, section: str, key: str, default: int) -> int:
    raw = sections.get(section, {}).get(key)
    if raw is None:
        return default
    try:
        return int(raw)
    except ValueError as exc:
        raise ScenarioParseError(f"[{section}] {key} = {raw!r} is not an integer") from exc


def parse_scenario_text(text: str, overrides: dict[str, Any] | None = None) -> ScenarioSpec:
    """Build a ScenarioSpec from INI text, resolving a missing t2 from the
    heralding condition.  ``overrides`` may replace phi, theta, trunc_in,
    trunc_out before construction (CLI flags)."""
    sections = _read_ini(text, _SCENARIO_SCHEMA, "scenario file")
    overrides = overrides or {}
    s = _get_float(sections, "squeeze", "s", 0.0)
    phi = overrides.get("phi", _get_float(sections, "squeeze", "phi", math.pi))
    beta0 = _get_float(sections, "beams", "beta0", 0.0)
    gamma0 = _get_float(sections, "beams", "gamma0", 0.0)
    theta = overrides.get("theta", _get_float(sections, "beams", "theta", math.pi))
    t1 = _get_float(sections, "splitters", "t1", 1.0)
    phases = tuple(
        _get_float(sections, "splitters", key, 0.0)
        for key in ("phi_tau1", "phi_rho1", "phi_tau2", "phi_rho2")
    )
    trunc_in = int(overrides.get("trunc_in", _get_int(sections, "truncation", "input_cap", 16)))
    trunc_out = int(overrides.get("trunc_out", _get_int(sections, "truncation", "output_cap", 9)))

    t2_raw = sections.get("splitters", {}).get("t2")
    if t2_raw is not None:
        try:
            t2 = float(t2_raw)
        except ValueError as exc:
            raise ScenarioParseError(f"[splitters] t2 = {t2_raw!r} is not a number") from exc
    elif gamma0 > 0.0:
        gamma = gamma0 * complex(math.cos(theta), math.sin(theta))
        t2 = solve_t2(complex(beta0), gamma, BeamSplitterSpec(t1, phases[0], phases[1]),
                      phi_tau2=phases[2], phi_rho2=phases[3])
    else:
        t2 = 1.0
    return make_scenario(
        s, beta0, gamma0, t1, t2, phi=phi, theta=theta,
        bs_phases=phases, trunc_in=trunc_in, trunc_out=trunc_out,
    )


def parse_scenario_file(path: str, overrides: dict[str, Any] | None = None) -> ScenarioSpec:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario file {path}: {exc}") from exc
    return parse_scenario_text(text, overrides)


def scenario_to_dict(spec: ScenarioSpec) -> dict:
    return {
        "squeeze": {"s": spec.squeeze.s, "phi": spec.squeeze.phi},
        "beams": {
            "beta0": spec.beta.magnitude,
            "gamma0": spec.gamma.magnitude,
            "theta": spec.gamma.phase,
        },
        "splitters": {
            "t1": spec.bs1.t,
            "t2": spec.bs2.t,
            "phi_tau1": spec.bs1.phi_tau,
            "phi_rho1": spec.bs1.phi_rho,
            "phi_tau2": spec.bs2.phi_tau,
            "phi_rho2": spec.bs2.phi_rho,
        },
        "truncation": {"input_cap": spec.trunc_in, "output_cap": spec.trunc_out},
    }


def scenario_from_dict(data: dict) -> ScenarioSpec:
    sq, beams, sp, tr = data["squeeze"], data["beams"], data["splitters"], data["truncation"]
    return make_scenario(
        sq["s"], beams["beta0"], beams["gamma0"], sp["t1"], sp["t2"],
        phi=sq["phi"], theta=beams["theta"],
        bs_phases=(sp["phi_tau1"], sp["phi_rho1"], sp["phi_tau2"], sp["phi_rho2"]),
        trunc_in=tr["input_cap"], trunc_out=tr["output_cap"],
    )


def parse_search_text(text: str) -> SearchSpace:
    sections = _read_ini(text, _SEARCH_SCHEMA, "search file")
    grid = sections.get("grid", {})
    for key in ("beta0_min", "beta0_max", "beta0_step", "t1_min", "t1_max", "t1_step"):
        if key not in grid:
            raise ScenarioParseError(f"search file is missing [grid] {key}")
    target_raw = sections.get("objective", {}).get("target_alpha")
    t2_raw = sections.get("overrides", {}).get("t2")
    return SearchSpace(
        beta0_min=_get_float(sections, "grid", "beta0_min", 0.0),
        beta0_max=_get_float(sections, "grid", "beta0_max", 0.0),
        beta0_step=_get_float(sections, "grid", "beta0_step", 0.0),
        t1_min=_get_float(sections, "grid", "t1_min", 0.0),
        t1_max=_get_float(sections, "grid", "t1_max", 0.0),
        t1_step=_get_float(sections, "grid", "t1_step", 0.0),
        s=_get_float(sections, "fixed", "s", 0.0),
        gamma0=_get_float(sections, "fixed", "gamma0", 0.0),
        phi=_get_float(sections, "fixed", "phi", math.pi),
        theta=_get_float(sections, "fixed", "theta", math.pi),
        objective=sections.get("objective", {}).get("kind", "max_pu"),
        pu_floor=_get_float(sections, "objective", "pu_floor", 0.0),
        target_alpha=float(target_raw) if target_raw is not None else None,
        top_k=_get_int(sections, "objective", "top_k", 10),
        trunc_in=_get_int(sections, "truncation", "input_cap", 16),
        trunc_out=_get_int(sections, "truncation", "output_cap", 9),
        t2_override=float(t2_raw) if t2_raw is not None else None,
    )


def parse_search_file(path: str) -> SearchSpace:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read search file {path}: {exc}") from exc
    return parse_search_text(text)


def grid_to_dict(grid: HeraldedGrid) -> dict:
    return {
        "trunc_out": grid.trunc_out,
        "amp_real": grid.c.real.tolist(),
        "amp_imag": grid.c.imag.tolist(),
        "p": grid.p.tolist(),
        "pr": grid.pr,
        "pu": grid.pu,
    }


def grid_from_dict(data: dict) -> HeraldedGrid:
    if "heralded_grid" in data:
        data = data["heralded_grid"]
    try:
        c = np.array(data["amp_real"], dtype=float) + 1j * np.array(data["amp_imag"], dtype=float)
    except KeyError as exc:
        raise ScenarioParseError(f"grid JSON is missing {exc}") from exc
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValidationError("grid amplitudes must form a square matrix")
    return HeraldedGrid(c=c)


def fit_to_dict(fit: FitResult) -> dict:
    out = {
        "convention": fit.convention,
        "alpha": fit.alpha,
        "f": fit.f,
        "er": fit.er,
        "n_max_used": fit.n_max_used,
        "converged": fit.converged,
        "gradient_norm": fit.gradient_norm,
    }
    if fit.alt is not None:
        out["alt"] = fit_to_dict(fit.alt)
    return out


def _row_to_dict(row: ScenarioRow) -> dict:
    return {
        "label": row.label,
        "s": row.s,
        "beta0": row.beta0,
        "gamma0": row.gamma0,
        "t1": row.t1,
        "t2": row.t2,
        "pr": row.pr,
        "pu": row.pu,
        "pu_percent": 100.0 * row.pu,
        "alpha": row.alpha,
        "f": row.f,
        "er": row.er,
    }


def simulate_bundle(spec: ScenarioSpec, convention: str = "standard") -> dict:
    """Run the full pipeline on one scenario and assemble the result bundle."""
    tensor = joint_amplitudes(spec)
    grid = herald_single(tensor)
    fit = fit_entangled(grid, n_max=spec.trunc_out, convention=convention)
    row = evaluate_scenario(spec, convention=convention)
    try:
        smallv = smallv_metric(spec)
    except ZeroDivisionError:
        smallv = None
    linear, squared = t2_closed_forms(spec.beta.magnitude, spec.gamma.magnitude, spec.bs1.t)
    return {
        "tool": {"name": "evcs", "version": __version__},
        "scenario": scenario_to_dict(spec),
        "captured_mass": {
            "box": tensor.captured_mass,
            "outside_box": tensor.mass_outside_box,
            "total": tensor.total_mass,
        },
        "heralded_grid": grid_to_dict(grid),
        "row": _row_to_dict(row),
        "fit": fit_to_dict(fit),
        "diagnostics": {
            "zero_sum_residual": zero_sum_residual(spec.beta_amp, spec.gamma_amp, spec.qmap),
            "t2_closed_form_linear": _nan_to_none(linear),
            "t2_closed_form_squared": _nan_to_none(squared),
            "smallv": smallv,
        },
    }


def _nan_to_none(x: float) -> float | None:
    return None if math.isnan(x) else x


def dumps_bundle(bundle: dict) -> str:
    return json.dumps(bundle, sort_keys=True, indent=2)


def write_text_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".evcs-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.chmod(tmp, 0o644)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path: str, data: dict) -> None:
    write_text_atomic(path, dumps_bundle(data) + "\n")
