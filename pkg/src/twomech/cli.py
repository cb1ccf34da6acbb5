"""Command-line front end.

Each run is described by a key = value text file plus ``--set`` overrides.
Values are small arithmetic expressions: numbers, ``pi``, ``+ - * / **``,
lists/tuples and the grid helpers ``linspace(a, b, n)`` / ``arange(a, b, step)``.
A bare word that is not an expression is read as a string.

Exit codes: 0 success, 2 validation error, 3 solver failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import ast
import logging
import math
import operator
import sys
from dataclasses import dataclass, field, fields, replace
from typing import Optional

import numpy as np

from . import __version__, nonreciprocity, pairgen, phonon_pt
from .errors import (
    DegenerateSteadyStateError,
    InstabilityError,
    SingularityError,
    TwomechError,
    ValidationError,
)
from .modes import AzimuthalMode, ModeKind, enumerate_brillouin_triples, with_partners
from .tables import ResultTable, emit
from .units import UNITS_NOTE

log = logging.getLogger(__name__)

EXIT_OK, EXIT_VALIDATION, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4
DEVICES = ("pairgen", "convert", "ptsym", "modes")
FIGURES = ("fig2b", "fig2c", "fig2d", "fig3b", "fig3c", "fig3d", "fig4bcd", "fig5")
REGIME_CODES = {"unbroken": 0, "exceptional": 1, "broken": 2}

PARAM_TYPES = {
    "pairgen": pairgen.PairgenParams,
    "convert": nonreciprocity.ConversionParams,
    "ptsym": phonon_pt.PTParams,
}
# per-device options that are not physical parameters, with defaults
OPTIONS = {
    "pairgen": {"fock_checks": 0, "fock_dims": pairgen.DEFAULT_DIMS, "fock_tol": 1e-3},
    "convert": {"omega": None},
    "ptsym": {"eps_p": 1.0},
    "modes": {"optical": None, "mechanical": None, "freq_tol": None},
}
DEFAULT_SWEEPS = {
    "pairgen": ("delta_k", "linspace(-0.2, 0.2, 401)"),
    "convert": ("omega", "linspace(-0.01, 0.01, 801)"),
    "ptsym": ("delta", "linspace(-0.15, 0.15, 3001)"),
    "modes": (None, None),
}
SWEEP_AXES = {
    "pairgen": pairgen.SWEEP_AXES,
    "convert": ("omega", "theta"),
    "ptsym": ("delta", "G_l"),
    "modes": (None,),
}

# small demo: one CW pair split by the phonon frequency plus their partners
DEMO_OPTICAL = [(12, 194042.3, 15.0), (7, 194000.0, 15.0)]
DEMO_MECHANICAL = [(5, 42.3, 0.004)]


# ---------------------------------------------------------------- parsing

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_UNARY = {ast.USub: operator.neg, ast.UAdd: operator.pos}
_NAMES = {"pi": math.pi, "inf": math.inf, "None": None, "True": True, "False": False}


def _grid_linspace(a, b, n):
    return [float(x) for x in np.linspace(a, b, int(n))]


def _grid_arange(a, b, step):
    return [float(x) for x in np.arange(a, b, step)]


_CALLS = {"linspace": _grid_linspace, "arange": _grid_arange}


def _eval_node(node):
    if isinstance(node, ast.Expression):
        return _eval_node(node.body)
    if isinstance(node, ast.Constant) and (node.value is None or isinstance(node.value, (int, float, str))):
        return node.value
    if isinstance(node, ast.Name) and node.id in _NAMES:
        return _NAMES[node.id]
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval_node(node.left), _eval_node(node.right))
    if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
        return _UNARY[type(node.op)](_eval_node(node.operand))
    if isinstance(node, (ast.List, ast.Tuple)):
        items = [_eval_node(e) for e in node.elts]
        return items if isinstance(node, ast.List) else tuple(items)
    if (isinstance(node, ast.Call) and isinstance(node.func, ast.Name)
            and node.func.id in _CALLS and not node.keywords):
        return _CALLS[node.func.id](*[_eval_node(a) for a in node.args])
    raise ValueError(f"unsupported expression element {type(node).__name__}")


def parse_value(text: str):
    text = text.strip()
    try:
        return _eval_node(ast.parse(text, mode="eval"))
    except (SyntaxError, ValueError, TypeError, ZeroDivisionError) as exc:
        if text.replace("_", "").replace("-", "").isalnum() and not text[0].isdigit():
            return text
        raise ValidationError(f"cannot parse value {text!r}: {exc}") from None


def parse_assignment(line: str):
    if "=" not in line:
        raise ValidationError(f"expected key = value, got {line!r}")
    key, value = line.split("=", 1)
    key = key.strip()
    if not key:
        raise ValidationError(f"missing key in {line!r}")
    return key, value.strip()


def read_config_text(text: str) -> dict:
    """Ordered raw assignments from a config file; '#' starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            key, value = parse_assignment(line)
        except ValidationError as exc:
            raise ValidationError(f"line {lineno}: {exc}") from None
        out[key] = value
    return out


# ---------------------------------------------------------------- configs

@dataclass
class ExperimentConfig:
    device: str
    params: dict = field(default_factory=dict)  # name -> value
    sources: dict = field(default_factory=dict)  # name -> citation / origin
    options: dict = field(default_factory=dict)
    axis: Optional[str] = None
    grid: list = field(default_factory=list)
    grid_spec: str = ""
    engine: str = "gaussian"
    output: Optional[str] = None
    fmt: str = "csv"

    def device_params(self):
        cls = PARAM_TYPES.get(self.device)
        return cls(**self.params) if cls else None


def _field_defaults(cls) -> dict:
    return {f.name: f.default for f in fields(cls)}


def build_config(device: str, entries: dict, origin: dict,
                 base: Optional[dict] = None, base_sources: Optional[dict] = None) -> ExperimentConfig:
    """Resolve raw ``entries`` (key -> text) into a validated config.

    ``origin`` maps each entry key to where it came from ("config" or
    "override"); ``base`` supplies preset values cited by ``base_sources``.
    """
    if device not in DEVICES:
        raise ValidationError(f"device must be one of {DEVICES}, got {device!r}")
    cls = PARAM_TYPES.get(device)
    params, sources = {}, {}
    if cls is not None:
        params = _field_defaults(cls)
        sources = {k: "default" for k in params}
    options = dict(OPTIONS[device])
    for k in options:
        sources[k] = "default"
    if base:
        for k, v in base.items():
            (params if k in params else options)[k] = v
            sources[k] = (base_sources or {}).get(k, "preset")
    axis, grid_text = DEFAULT_SWEEPS[device]
    cfg = ExperimentConfig(device)
    for key, text in entries.items():
        if key == "device":
            if parse_value(text) != device:
                raise ValidationError(f"device: config says {text!r} but subcommand is {device!r}")
            continue
        if key in ("axis", "sweep.axis"):
            axis = parse_value(text)
            continue
        if key in ("grid", "sweep.grid"):
            grid_text = text
            continue
        if key in ("engine",):
            cfg.engine = parse_value(text)
            continue
        if key in ("output", "output.path"):
            cfg.output = text
            continue
        if key in ("format", "output.format"):
            cfg.fmt = parse_value(text)
            continue
        value = parse_value(text)
        if key in params:
            if value is not None and not isinstance(value, (int, float)):
                raise ValidationError(f"{key}: expected a number, got {value!r}")
            params[key] = None if value is None else float(value)
        elif key in options:
            options[key] = value
        else:
            known = sorted(list(params) + list(options))
            raise ValidationError(f"{key}: unknown key for {device} (known: {', '.join(known)})")
        sources[key] = origin.get(key, "config")

    if axis not in SWEEP_AXES[device]:
        raise ValidationError(f"axis: must be one of {SWEEP_AXES[device]}, got {axis!r}")
    grid = [] if grid_text is None else parse_value(grid_text)
    if isinstance(grid, (int, float)):
        grid = [grid]
    if not isinstance(grid, (list, tuple)) or not all(isinstance(g, (int, float)) for g in grid):
        raise ValidationError(f"grid: expected a list of numbers, got {grid_text!r}")
    if cfg.fmt not in ("csv", "json"):
        raise ValidationError(f"format: must be csv or json, got {cfg.fmt!r}")
    if cfg.engine not in ("gaussian", "fock"):
        raise ValidationError(f"engine: must be gaussian or fock, got {cfg.engine!r}")
    if cfg.engine != "gaussian" and device != "pairgen":
        raise ValidationError("engine: only the pairgen device has a choice of engine")

    cfg.params, cfg.sources, cfg.options = params, sources, options
    cfg.axis, cfg.grid, cfg.grid_spec = axis, [float(g) for g in grid], grid_text or ""
    # parameter blocks validate before any solve
    cfg.device_params()
    if device == "pairgen":
        dims = options["fock_dims"]
        if not isinstance(dims, (list, tuple)) or len(dims) != 3:
            raise ValidationError(f"fock_dims: expected three truncations, got {dims!r}")
    return cfg


def _metadata(cfg: ExperimentConfig, extra: Optional[dict] = None) -> dict:
    resolved = {}
    for k, v in {**cfg.params, **cfg.options}.items():
        resolved[k] = {"value": v, "source": cfg.sources.get(k, "default")}
    meta = {
        "device": cfg.device,
        "engine": cfg.engine,
        "engine_version": __version__,
        "units": UNITS_NOTE,
        "parameters": resolved,
        "sweep": {"axis": cfg.axis, "grid": cfg.grid_spec, "points": len(cfg.grid)},
    }
    if extra:
        meta.update(extra)
    return meta


# ---------------------------------------------------------------- runners

def _failure(point: str, exc) -> dict:
    kind = type(exc).__name__ if isinstance(exc, BaseException) else str(exc).split(":", 1)[0]
    return {"point": point, "error": str(exc), "kind": kind}


def _run_pairgen(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.device_params()
    opts = cfg.options
    fock_kw = {"dims": tuple(int(d) for d in opts["fock_dims"]), "tol": float(opts["fock_tol"])}
    points = pairgen.sweep_nonclassicality(
        p, cfg.axis, cfg.grid, engine=cfg.engine,
        fock_checks=int(opts["fock_checks"]), fock_kw=fock_kw,
    )
    failures = [_failure(f"{cfg.axis}={pt.value!r}", pt.error) for pt in points if pt.error]
    cols = {
        cfg.axis: np.array([pt.value for pt in points]),
        "I": np.array([pt.I for pt in points]),
    }
    if opts["fock_checks"] and cfg.engine == "gaussian":
        cols["I_fock"] = np.array([np.nan if pt.fock_I is None else pt.fock_I for pt in points])
    return ResultTable(cols, _metadata(cfg, {"failures": failures}))


def _run_convert(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.device_params()
    if cfg.axis == "theta" and cfg.options["omega"] is None:
        cfg.options["omega"] = -p.gamma_m2
        cfg.sources["omega"] = "default (-gamma_m2)"
    fwd, bwd, eta, failures = [], [], [], []
    for x in cfg.grid:
        try:
            if cfg.axis == "omega":
                q, w = p, x
            else:
                q, w = replace(p, theta=x), cfg.options["omega"]
            f, b = nonreciprocity.conversion_efficiencies(q, w)
            r = f / b if b > nonreciprocity.RATIO_FLOOR else math.inf
        except TwomechError as exc:
            failures.append(_failure(f"{cfg.axis}={x!r}", exc))
            f = b = r = math.nan
        fwd.append(f)
        bwd.append(b)
        eta.append(r)
    cols = {
        cfg.axis: np.array(cfg.grid, dtype=float),
        "R_k_mk_sq": np.array(fwd),
        "R_mk_k_sq": np.array(bwd),
        "eta": np.array(eta),
    }
    return ResultTable(cols, _metadata(cfg, {"failures": failures}))


def threshold_table(p: phonon_pt.PTParams, G_l_grid) -> dict:
    """Effective rates, J_PT, supermode frequencies and regime over G_l."""
    rows = {k: [] for k in ("gamma_l", "gamma_ml", "J_PT", "omega_plus", "omega_minus", "regime")}
    for g in G_l_grid:
        q = replace(p, G_l=float(g))
        r = phonon_pt.adiabatic_effective_rates(q)
        j_pt, _ = phonon_pt.pt_threshold(r, q.gamma_m)
        pair = phonon_pt.supermode_eigenfrequencies(r, q.gamma_m, q.J)
        rows["gamma_l"].append(r.gamma_l)
        rows["gamma_ml"].append(r.gamma_ml)
        rows["J_PT"].append(j_pt)
        rows["omega_plus"].append(pair.omega_plus)
        rows["omega_minus"].append(pair.omega_minus)
        rows["regime"].append(REGIME_CODES[pair.regime.value])
    cols = {"G_l": np.array(G_l_grid, dtype=float)}
    for k, v in rows.items():
        cols[k] = np.array(v, dtype=complex if k.startswith("omega") else float)
    cols["regime"] = cols["regime"].astype(int)
    return cols


def _run_ptsym(cfg: ExperimentConfig) -> ResultTable:
    p = cfg.device_params()
    if cfg.axis == "G_l":
        cols = threshold_table(p, cfg.grid)
        extra = {"regime_codes": REGIME_CODES, "failures": []}
        return ResultTable(cols, _metadata(cfg, extra))
    if not cfg.grid:
        cols = {"delta": np.array([])}
        cols.update({f"{f}_sq": np.array([]) for f in phonon_pt.FIELDS})
        return ResultTable(cols, _metadata(cfg, {"failures": []}))
    try:
        spectrum = phonon_pt.pt_spectrum(p, cfg.grid, eps_p=float(cfg.options["eps_p"]), extend=False)
    except InstabilityError as exc:
        raise InstabilityError(f"at G_l={p.G_l}, G_ml={p.G_ml}, J={p.J}: {exc}") from None
    cols = {"delta": spectrum.delta}
    cols.update({f"{name}_sq": v for name, v in spectrum.intensities.items()})
    extra = {"peak_counts": spectrum.peak_counts, "peak_prominence": phonon_pt.PEAK_PROMINENCE,
             "failures": []}
    return ResultTable(cols, _metadata(cfg, extra))


def _mode_list(raw, kind: ModeKind, name: str):
    try:
        return [AzimuthalMode(kind, int(t[0]), float(t[1]), float(t[2])) for t in raw]
    except (TypeError, IndexError, ValueError) as exc:
        if isinstance(exc, ValidationError):
            raise ValidationError(f"{name}: {exc}") from None
        raise ValidationError(f"{name}: expected a list of (m, nu, damping) tuples") from None


def _run_modes(cfg: ExperimentConfig) -> ResultTable:
    opts = cfg.options
    if opts["optical"] is None:
        opts["optical"] = DEMO_OPTICAL
        cfg.sources["optical"] = "default (demo)"
    if opts["mechanical"] is None:
        opts["mechanical"] = DEMO_MECHANICAL
        cfg.sources["mechanical"] = "default (demo)"
    optical = with_partners(_mode_list(opts["optical"], ModeKind.OPTICAL, "optical"))
    mechanical = with_partners(_mode_list(opts["mechanical"], ModeKind.MECHANICAL, "mechanical"))
    nu_opt = {m.m: m.nu for m in optical}
    nu_mech = {m.m: m.nu for m in mechanical}
    triples = enumerate_brillouin_triples(optical, mechanical, opts["freq_tol"])
    j = np.array([t.optical_a[0] for t in triples], dtype=int)
    k = np.array([t.optical_b[0] for t in triples], dtype=int)
    l = np.array([t.mech[0] for t in triples], dtype=int)
    mismatch = np.array([nu_opt[a] - nu_opt[b] - nu_mech[c] for a, b, c in zip(j, k, l)], dtype=float)
    cols = {"j": j, "k": k, "l": l, "nu_mismatch": mismatch}
    return ResultTable(cols, _metadata(cfg, {"failures": []}))


RUNNERS = {"pairgen": _run_pairgen, "convert": _run_convert, "ptsym": _run_ptsym, "modes": _run_modes}


def run(config: ExperimentConfig) -> ResultTable:
    """Dispatch a validated config to its device; failures land in metadata."""
    config.device_params()
    return RUNNERS[config.device](config)


# ---------------------------------------------------------------- presets

FIG2_SOURCE = "figure 2 caption"
FIG2_TEXT = "pair-generation device text (experimental parameters)"
FIG3_SOURCE = "figure 3 caption"
FIG4_SOURCE = "figure 4 caption"
FIG5_SOURCE = "figure 5 caption"

FIG2_BASE = {"kappa": 15.0, "kappa_in": 7.5, "gamma_m": 0.022, "G_k": 0.3,
             "G_mk": 0.1, "eps_s": 0.1, "n_th": 0.0, "delta_k": 0.0}
FIG2_CITES = {"kappa": FIG2_TEXT, "kappa_in": FIG2_TEXT + ", kappa/2", "gamma_m": FIG2_TEXT,
              "G_k": FIG2_SOURCE, "G_mk": FIG2_SOURCE, "eps_s": FIG2_SOURCE,
              "n_th": FIG2_SOURCE, "delta_k": FIG2_SOURCE}
FIG3_BASE = {"kappa": 15.0, "gamma_m1": 0.022, "gamma_m2": 0.0022, "C_k1": 1.0,
             "C_mk1": 1.0, "C_k2": 2.5, "C_mk2": 2.5, "theta": 0.0}
FIG3_CITES = {k: FIG3_SOURCE for k in FIG3_BASE}
FIG4_BASE = {"omega_ml": 42.3, "gamma_m": 0.004, "G_ml": 0.14, "J": 0.016,
             "kappa1": 3.5, "kappa2": 3.5, "G_l": 0.14}
FIG4_CITES = {k: FIG4_SOURCE for k in FIG4_BASE}
FIG4_CITES["G_l"] = FIG5_SOURCE


# [0, 2pi) in half-degree steps
THETA_GRID = "linspace(0, 2*pi*719/720, 720)"


@dataclass(frozen=True)
class Preset:
    device: str
    base: dict
    cites: dict
    grid: str
    axis: str
    series: tuple = ()  # (column suffix, overrides, citation)


PRESETS = {
    "fig2b": Preset("pairgen", FIG2_BASE, FIG2_CITES, "linspace(-0.2, 0.2, 401)", "delta_k",
                    (("nth0", {"n_th": 0.0}), ("nth0.1", {"n_th": 0.1}), ("nth0.2", {"n_th": 0.2}))),
    "fig2c": Preset("pairgen", {**FIG2_BASE, "n_th": 0.2}, FIG2_CITES, "linspace(-0.2, 0.2, 401)",
                    "delta_k",
                    (("Gk0.3", {"G_k": 0.3}), ("Gk0.4", {"G_k": 0.4}), ("Gk0.5", {"G_k": 0.5}))),
    "fig2d": Preset("pairgen", {**FIG2_BASE, "n_th": 0.2}, FIG2_CITES, "linspace(0.1, 3.0, 291)",
                    "G_k"),
    "fig3b": Preset("convert", FIG3_BASE, FIG3_CITES, "linspace(-0.01, 0.01, 801)", "omega",
                    (("theta0", {"theta": 0.0}), ("theta3pi4", {"theta": 3 * math.pi / 4}))),
    "fig3c": Preset("convert", FIG3_BASE, FIG3_CITES, THETA_GRID, "theta"),
    "fig3d": Preset("convert", FIG3_BASE, FIG3_CITES, THETA_GRID, "theta"),
    "fig4bcd": Preset("ptsym", FIG4_BASE, FIG4_CITES, "linspace(0, 0.25, 251)", "G_l"),
    "fig5": Preset("ptsym", FIG4_BASE, FIG4_CITES, "linspace(-0.15, 0.15, 3001)", "delta",
                   (("Gl0.14", {"G_l": 0.14}), ("Gl0.2", {"G_l": 0.2}))),
}


def _preset_config(fig: str, entries: dict, origin: dict) -> ExperimentConfig:
    pre = PRESETS[fig]
    entries = dict(entries)
    entries.setdefault("axis", pre.axis)
    entries.setdefault("grid", pre.grid)
    return build_config(pre.device, entries, origin, base=pre.base, base_sources=pre.cites)


def _series_config(cfg: ExperimentConfig, overrides: dict, cite: str) -> ExperimentConfig:
    params = {**cfg.params, **overrides}
    sources = {**cfg.sources, **{k: cite for k in overrides}}
    return replace(cfg, params=params, sources=sources, options=dict(cfg.options))


def replicate_figure(fig: str, entries: Optional[dict] = None,
                     origin: Optional[dict] = None) -> ResultTable:
    """Data behind one figure panel, using the caption's parameter values."""
    if fig not in PRESETS:
        raise ValidationError(f"figure id must be one of {FIGURES}, got {fig!r}")
    pre = PRESETS[fig]
    cfg = _preset_config(fig, entries or {}, origin or {})
    if fig in ("fig3c", "fig3d") and "omega" not in (origin or {}):
        cfg.options["omega"] = -cfg.params["gamma_m2"]
        cfg.sources["omega"] = FIG3_SOURCE + ", -gamma_m2"
    if not pre.series:
        table = run(cfg)
        if fig == "fig3c":
            del table.columns["eta"]
        elif fig == "fig3d":
            del table.columns["R_k_mk_sq"], table.columns["R_mk_k_sq"]
        elif fig == "fig4bcd":
            q = cfg.device_params()
            table.metadata["balanced_G_l"] = {
                "value": phonon_pt.balanced_G_l(q),
                "source": "derived from gain/loss balance at the figure 4 parameters",
            }
        table.metadata["figure"] = fig
        return table

    cite = FIG5_SOURCE if fig == "fig5" else {"fig2b": FIG2_SOURCE, "fig2c": FIG2_SOURCE}.get(fig, FIG3_SOURCE)
    columns = {cfg.axis: np.array(cfg.grid, dtype=float)}
    series_meta, failures, extra = {}, [], {}
    for suffix, overrides in pre.series:
        sub = _series_config(cfg, overrides, cite)
        table = run(sub)
        failures += [{**f, "series": suffix} for f in table.metadata.get("failures", [])]
        series_meta[suffix] = {k: {"value": v, "source": cite} for k, v in overrides.items()}
        if fig in ("fig2b", "fig2c"):
            columns[f"I_{suffix}"] = table.columns["I"]
        elif fig == "fig3b":
            if overrides["theta"] == 0.0:
                columns["R_sq_theta0"] = table.columns["R_k_mk_sq"]
            else:
                columns["R_k_mk_sq_theta3pi4"] = table.columns["R_k_mk_sq"]
                columns["R_mk_k_sq_theta3pi4"] = table.columns["R_mk_k_sq"]
        elif fig == "fig5":
            columns[f"a_mj_sq_{suffix}"] = table.columns["a_-j_sq"]
            columns[f"a_k_sq_{suffix}"] = table.columns["a_k_sq"]
            extra.setdefault("peak_counts", {})[suffix] = {
                "a_-j": table.metadata["peak_counts"]["a_-j"],
                "a_k": table.metadata["peak_counts"]["a_k"],
            }
    meta = _metadata(cfg, {"figure": fig, "series": series_meta, "failures": failures, **extra})
    return ResultTable(columns, meta)


# ---------------------------------------------------------------- main

def _argument_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twomech",
        description="Optomechanical CW/CCW device simulations. " + UNITS_NOTE + ".",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value parameter file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override one key (repeatable)")
    common.add_argument("--output", help="output path (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default=None)
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("pairgen", parents=[common], help="photon-pair nonclassicality sweep")
    p.add_argument("--engine", choices=("gaussian", "fock"), default=None)
    sub.add_parser("convert", parents=[common], help="CW/CCW conversion efficiencies")
    sub.add_parser("ptsym", parents=[common], help="phononic PT-symmetry spectra and thresholds")
    sub.add_parser("modes", parents=[common], help="allowed Brillouin triples of a mode list")
    r = sub.add_parser("replicate", parents=[common], help="data for one figure panel")
    r.add_argument("figure", choices=FIGURES)
    return parser


def _collect_entries(args):
    entries, origin = {}, {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            entries.update(read_config_text(fh.read()))
    for k in entries:
        origin[k] = "config"
    for item in args.set:
        key, value = parse_assignment(item)
        entries[key] = value
        origin[key] = "override"
    if getattr(args, "engine", None):
        entries["engine"] = args.engine
        origin["engine"] = "override"
    if args.format:
        entries["format"] = args.format
    if args.output:
        entries["output"] = args.output
    return entries, origin


def _exit_code_for(failures) -> int:
    if not failures:
        return EXIT_OK
    if all(f.get("kind") == "ValidationError" for f in failures):
        return EXIT_VALIDATION
    return EXIT_SOLVER


def main(argv=None) -> int:
    args = _argument_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    print(f"twomech {__version__}: {UNITS_NOTE}", file=sys.stderr)
    try:
        entries, origin = _collect_entries(args)
        fmt, output = "csv", None
        for key in ("format", "output.format"):
            if key in entries:
                fmt = parse_value(entries.pop(key))
        for key in ("output", "output.path"):
            if key in entries:
                output = entries.pop(key)
        if fmt not in ("csv", "json"):
            raise ValidationError(f"format: must be csv or json, got {fmt!r}")
        if args.command == "replicate":
            table = replicate_figure(args.figure, entries, origin)
        else:
            cfg = build_config(args.command, entries, origin)
            table = run(cfg)
    except OSError as exc:
        print(f"error: cannot read input: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (InstabilityError, SingularityError, DegenerateSteadyStateError, TwomechError) as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    try:
        emit(table, fmt, output)
    except OSError as exc:
        print(f"error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_IO

    failures = table.metadata.get("failures", [])
    for f in failures:
        where = f"{f['point']}" + (f" (series {f['series']})" if "series" in f else "")
        print(f"failed at {where}: {f['error']}", file=sys.stderr)
    return _exit_code_for(failures)


if __name__ == "__main__":
    sys.exit(main())
