"""Command-line front end.

Subcommands ``simulate``, ``check-symbol``, ``validate`` and ``demo-figure1``
read an experiment config (see README for the grammar) and write plain-text
outputs. Exit codes: 0 pass, 1 check or test failure (engine failures
included), 2 usage or config error.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import __version__, _kernels
from . import symbol as S
from . import validation as V
from .euler import SimulationError, simulate_ensemble, step
from .jumps import Discrete, Gaussian
from .levy_sampler import SamplerError, SamplerOptions, Strategy, build_sampler, sample_increment
from .rng import RngStream

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2
U64_MAX = 2 ** 64 - 1
TRUNCATION_BIAS = 1e-3


class ConfigError(ValueError):
    def __init__(self, message, line=None, field=None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.line = line
        self.field = field


# --- config text ------------------------------------------------------------

def parse_config(text):
    """Parse ``[section]`` / ``key = value`` text.

    Returns {section: {key: (raw value, line number)}}. Blank lines and lines
    starting with ``#`` or ``;`` are ignored; keys and sections must be unique.
    """
    out = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line[0] in "#;":
            continue
        if line.startswith("["):
            if not line.endswith("]") or len(line) < 3:
                raise ConfigError("malformed section header", lineno)
            current = line[1:-1].strip()
            if not current.replace("_", "").replace("-", "").isalnum():
                raise ConfigError(f"bad section name {current!r}", lineno)
            if current in out:
                raise ConfigError(f"duplicate section [{current}]", lineno)
            out[current] = {}
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError("empty key", lineno)
        if key in out[current]:
            raise ConfigError(f"duplicate key in [{current}]", lineno, key)
        out[current][key] = (value, lineno)
    return out


def _fmt_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, (list, tuple)):
        return ", ".join(_fmt_value(x) for x in v)
    return str(v)


def format_config(sections):
    """Inverse of parse_config for typed values: {section: {key: value}}."""
    lines = []
    for name, body in sections.items():
        if lines:
            lines.append("")
        lines.append(f"[{name}]")
        for k, v in body.items():
            lines.append(f"{k} = {_fmt_value(v)}")
    return "\n".join(lines) + "\n"


# --- typed fields -----------------------------------------------------------

def _float(s):
    v = float(s)
    if not math.isfinite(v):
        raise ValueError("must be finite")
    return v


def _int(s):
    f = float(s)
    if not f.is_integer():
        raise ValueError("must be an integer")
    return int(f)


def _u64(s):
    v = int(s, 0)
    if not 0 <= v <= U64_MAX:
        raise ValueError("must be an unsigned 64-bit integer")
    return v


def _floats(s):
    return [_float(p) for p in s.split(",") if p.strip()]


def _str(s):
    return s


def _choice(*options):
    def conv(s):
        if s not in options:
            raise ValueError(f"must be one of {', '.join(options)}")
        return s
    return conv


def _names(s):
    return [p.strip() for p in s.split(",") if p.strip()]


# family -> {key: (converter, default)}; None default means required
_FAMILIES = {
    "brownian": {"dim": (_int, 1), "sigma": (_float, 1.0), "drift": (_floats, None),
                 "killing": (_float, 0.0)},
    "killing": {"dim": (_int, 1), "killing": (_float, 1.0)},
    "cubic": {"dim": (_int, 1)},
    "symmetric_stable": {"dim": (_int, 1), "alpha": (_float, None), "scale": (_float, 1.0)},
    "cauchy": {"dim": (_int, 1), "scale": (_float, 1.0)},
    "compound_poisson": {"rate": (_float, None), "jump_law": (_choice("point", "gaussian"), "point"),
                         "jump": (_floats, [1.0]), "jump_probs": (_floats, None),
                         "jump_var": (_float, 1.0)},
    "stable_like": {"dim": (_int, 1), "scale": (_float, 1.0), "alpha_offset": (_float, 0.9),
                    "alpha_slope": (_float, 1.0), "alpha_lo": (_float, 0.9),
                    "alpha_hi": (_float, 1.9)},
    "figure1": {},
    "sde_linear": {"coef_a": (_float, 0.0), "coef_b": (_float, 1.0),
                   "driver": (_choice("brownian", "cauchy", "symmetric_stable"), "brownian"),
                   "driver_alpha": (_float, 1.5)},
}

_RUN = {"seed": (_u64, None), "x0": (_floats, None), "h": (_float, None), "T": (_float, None),
        "n_steps": (_int, None), "n_paths": (_int, 1), "record": (_str, "auto")}
_SAMPLER = {"epsilon": (_float, None), "small_jump_policy": (_choice("auto", "gaussian", "drop"),
                                                              "auto"),
            "small_jump_threshold": (_float, 0.3), "max_jumps_per_step": (_float, 50.0),
            "small_jump_budget": (_float, 1e-6)}
_CHECK = {"x_lo": (_float, -5.0), "x_hi": (_float, 5.0), "n_x": (_int, 41),
          "xi_lo": (_float, 1e-2), "xi_hi": (_float, 1e3), "n_xi": (_int, 61)}
_VALIDATE = {"tests": (_names, ["cf"]), "cf_x": (_floats, [0.0]), "cf_h": (_float, 0.1),
             "cf_n": (_int, 100_000), "bias_budget": (_float, None),
             "jump_h": (_float, 0.5), "jump_n": (_int, 100_000),
             "conv_T": (_float, 1.0), "conv_h": (_floats, [0.2, 0.1, 0.05, 0.025]),
             "conv_paths": (_int, 10_000), "conv_x0": (_floats, None),
             "sd_n": (_int, 10_000), "sd_h": (_float, 1.0)}
_VALIDATE_TESTS = ("cf", "jump_count", "convergence", "state_dependence")
_SECTIONS = {"run": _RUN, "sampler": _SAMPLER, "check": _CHECK, "validate": _VALIDATE}


def _typed(section, raw, schema, keep_defaults=True):
    out = {}
    for key, (value, line) in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown key in [{section}]", line, key)
        try:
            out[key] = schema[key][0](value)
        except ValueError as exc:
            raise ConfigError(f"invalid value {value!r}: {exc}", line, key) from None
    if keep_defaults:
        for key, (_, default) in schema.items():
            out.setdefault(key, default)
    return out


@dataclass
class ExperimentConfig:
    """Validated experiment: typed sections plus the line numbers for diagnostics."""

    family: str
    symbol: dict
    run: dict
    sampler: dict = field(default_factory=dict)
    check: dict = field(default_factory=dict)
    validate: dict = field(default_factory=dict)
    given: dict = field(default_factory=dict)  # keys present in the source, per section

    @property
    def seed(self):
        return self.run["seed"]

    def sampler_options(self):
        return SamplerOptions(**{k: v for k, v in self.sampler.items()})

    def grid(self):
        """(h, n_steps) from exactly one of h or (T, n_steps)."""
        h, T, m = self.run["h"], self.run["T"], self.run["n_steps"]
        if h is not None:
            return h, m
        return T / m, m

    def manifest_sections(self):
        """Canonical config text sections: explicit keys only, in schema order."""
        sym = {"family": self.family}
        sym.update({k: v for k, v in self.symbol.items() if k in self.given.get("symbol", ())})
        secs = {"symbol": sym}
        for name in ("run", "sampler", "check", "validate"):
            body = getattr(self, name)
            keys = [k for k in _SECTIONS[name] if k in self.given.get(name, ())]
            if name == "run":
                keys = [k for k in _RUN if k in self.given.get("run", ()) or k == "seed"]
            if keys:
                secs[name] = {k: body[k] for k in keys}
        return secs


def load_config(text, seed_override=None, require=("run",)):
    """Parse and validate config text into an ExperimentConfig."""
    raw = parse_config(text)
    for name, body in raw.items():
        if name not in _SECTIONS and name not in ("symbol", "meta"):
            line = min((ln for _, ln in body.values()), default=None)
            raise ConfigError(f"unknown section [{name}]", line)
    if "symbol" not in raw:
        raise ConfigError("missing [symbol] section")
    sym_raw = dict(raw["symbol"])
    if "family" not in sym_raw:
        raise ConfigError("missing family", None, "family")
    family, fline = sym_raw.pop("family")
    if family not in _FAMILIES:
        raise ConfigError(f"unknown family {family!r}; known: {', '.join(_FAMILIES)}",
                          fline, "family")
    given = {name: set(body) for name, body in raw.items()}
    symbol = _typed("symbol", sym_raw, _FAMILIES[family])
    for key, (_, default) in _FAMILIES[family].items():
        if default is None and symbol[key] is None and key not in ("drift", "jump_probs"):
            raise ConfigError(f"[symbol] family {family!r} needs {key}", fline, key)
    sections = {name: _typed(name, raw.get(name, {}), schema)
                for name, schema in _SECTIONS.items()}
    run = sections["run"]
    run_raw = raw.get("run", {})
    if seed_override is not None:
        run["seed"] = seed_override
        given.setdefault("run", set()).add("seed")
    if "run" in require:
        if run["seed"] is None:
            raise ConfigError("seed is mandatory (no clock-based default)", None, "seed")
        def at(key):
            return run_raw.get(key, (None, None))[1]
        if run["h"] is not None and run["T"] is not None:
            raise ConfigError("give either h or T (each with n_steps), not both", at("T"), "T")
        if run["h"] is None and run["T"] is None:
            raise ConfigError("give h or T", None, "h")
        if run["n_steps"] is None:
            raise ConfigError("n_steps is required", None, "n_steps")
        if run["n_steps"] < 1:
            raise ConfigError("n_steps must be >= 1", at("n_steps"), "n_steps")
        if run["n_paths"] < 1:
            raise ConfigError("n_paths must be >= 1", at("n_paths"), "n_paths")
        for key in ("h", "T"):
            if run[key] is not None and not run[key] > 0:
                raise ConfigError("must be positive", at(key), key)
        rec = run["record"]
        if rec not in ("auto", "all", "none") and not rec.isdigit():
            raise ConfigError("record must be auto, all, none or a count",
                              at("record"), "record")
    tests = sections["validate"]["tests"]
    bad = [t for t in tests if t not in _VALIDATE_TESTS]
    if bad:
        raise ConfigError(f"unknown test(s) {', '.join(bad)}",
                          raw.get("validate", {}).get("tests", (None, None))[1], "tests")
    if "convergence" in tests and len(sections["validate"]["conv_h"]) < 3:
        raise ConfigError("convergence study needs at least three step sizes",
                          raw["validate"].get("conv_h", (None, None))[1], "conv_h")
    sampler = {k: v for k, v in sections["sampler"].items()}
    try:
        SamplerOptions(**sampler)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return ExperimentConfig(family, symbol, run, sampler, sections["check"],
                            sections["validate"], {k: set(v) for k, v in given.items()})


# --- symbols from config ----------------------------------------------------

def build_symbol(family, p):
    """The StateDependentSymbol for a config family and its typed parameters."""
    if family == "brownian":
        d = p["dim"]
        return S.brownian(d, p["sigma"] ** 2 * np.eye(d), p["drift"], p["killing"])
    if family == "killing":
        return S.killing_fixture(p["killing"], p["dim"])
    if family == "cubic":
        return S.cubic_fixture(p["dim"])
    if family == "symmetric_stable":
        return S.symmetric_stable(p["alpha"], p["scale"], p["dim"])
    if family == "cauchy":
        return S.cauchy(p["scale"], p["dim"])
    if family == "compound_poisson":
        if p["jump_law"] == "point":
            probs = p["jump_probs"] or [1.0 / len(p["jump"])] * len(p["jump"])
            law = Discrete(np.asarray(p["jump"])[:, None], probs)
        else:
            law = Gaussian(p["jump"][:1], [[p["jump_var"]]])
        return S.compound_poisson(p["rate"], law)
    if family == "stable_like":
        fn = S.clamped_linear_alpha(p["alpha_offset"], p["alpha_slope"], p["alpha_lo"],
                                    p["alpha_hi"])
        return S.stable_like(fn, p["scale"], p["dim"])
    if family == "figure1":
        return S.figure1_symbol()
    if family == "sde_linear":
        a, b = p["coef_a"], p["coef_b"]
        drivers = {"brownian": lambda: S.brownian(1), "cauchy": lambda: S.cauchy(),
                   "symmetric_stable": lambda: S.symmetric_stable(p["driver_alpha"])}

        def coefficient(x):
            return (a + b * np.asarray(x, dtype=np.float64))[..., None]

        return S.symbol_from_sde(coefficient, drivers[p["driver"]](), 1, vectorized=True)
    raise ConfigError(f"unknown family {family!r}", field="family")


def _symbol_of(cfg):
    try:
        return build_symbol(cfg.family, cfg.symbol)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"[symbol] {exc}") from None


# --- output -----------------------------------------------------------------

def _num(v):
    return format(float(v), ".17g")


def path_csv(times, states):
    """CSV text with header t,x1..xd, 17 significant digits and LF endings."""
    d = states.shape[1]
    rows = ["t," + ",".join(f"x{k + 1}" for k in range(d))]
    for t, x in zip(times, states):
        rows.append(",".join([_num(t)] + [_num(v) for v in x]))
    return "\n".join(rows) + "\n"


def terminal_csv(stream_ids, terminal):
    d = terminal.shape[1]
    rows = ["path," + ",".join(f"x{k + 1}" for k in range(d))]
    for p, x in zip(stream_ids, terminal):
        rows.append(",".join([str(int(p))] + [_num(v) for v in x]))
    return "\n".join(rows) + "\n"


def path_svg(times, values, width=800, height=400, margin=40):
    """A single-polyline SVG of values against times in a fixed viewport."""
    t0, t1 = float(times[0]), float(times[-1])
    lo, hi = float(np.min(values)), float(np.max(values))
    if hi == lo:
        lo, hi = lo - 1.0, hi + 1.0
    sx = (width - 2 * margin) / (t1 - t0)
    sy = (height - 2 * margin) / (hi - lo)
    pts = " ".join(f"{margin + (t - t0) * sx:.3f},{height - margin - (v - lo) * sy:.3f}"
                   for t, v in zip(times, values))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
            f'viewBox="0 0 {width} {height}">\n'
            f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
            f'height="{height - 2 * margin}" fill="none" stroke="#999"/>\n'
            f'<text x="{margin}" y="{margin - 8}" font-size="12">x in [{lo:.4g}, {hi:.4g}], '
            f't in [{t0:g}, {t1:g}]</text>\n'
            f'<polyline fill="none" stroke="black" stroke-width="1" points="{pts}"/>\n'
            "</svg>\n")


def _write(path, text):
    with open(path, "wb") as fh:
        fh.write(text.encode("ascii"))


def _manifest(cfg, command):
    secs = cfg.manifest_sections()
    secs["meta"] = {"command": command, "version": __version__, "backend": _kernels.BACKEND}
    return format_config(secs)


# --- commands ---------------------------------------------------------------

def _say(args, msg):
    if not args.quiet:
        print(msg)


def _x0(cfg, sym):
    x0 = cfg.run["x0"]
    if x0 is None:
        return np.zeros(sym.dim)
    if len(x0) != sym.dim:
        raise ConfigError(f"x0 has {len(x0)} entries, symbol dimension is {sym.dim}",
                          field="x0")
    return np.asarray(x0)


def cmd_simulate(cfg, out, args):
    sym = _symbol_of(cfg)
    h, m = cfg.grid()
    x0 = _x0(cfg, sym)
    rec = cfg.run["record"]
    record = int(rec) if rec.isdigit() else rec
    ens = simulate_ensemble(sym, x0, h, m, cfg.run["n_paths"], cfg.seed, record=record,
                            sampler_options=cfg.sampler_options())
    written = 0
    if ens.path_ids is not None:
        for i, pid in enumerate(ens.path_ids):
            _write(os.path.join(out, f"path_{int(pid)}.csv"), path_csv(ens.times, ens.paths[i]))
            written += 1
    _write(os.path.join(out, "terminal.csv"), terminal_csv(ens.stream_ids, ens.terminal))
    _write(os.path.join(out, "manifest.cfg"), _manifest(cfg, "simulate"))
    _say(args, f"wrote {written} path file(s), terminal.csv and manifest.cfg to {out}")
    return EXIT_OK


def _check_grids(cfg, dim):
    c = cfg.check
    x = S.default_x_grid(dim, (c["x_lo"], c["x_hi"]), c["n_x"])
    xi = S.default_xi_grid(dim, c["n_xi"], c["xi_lo"], c["xi_hi"])
    return x, xi


def cmd_check_symbol(cfg, out, args):
    sym = _symbol_of(cfg)
    x, xi = _check_grids(cfg, sym.dim)
    reports = [S.check_condition_A3(sym, x), S.check_condition_A2(sym, x, xi)]
    reports += S.check_structural(sym, x, xi)
    ok = all(r.passed for r in reports)
    doc = {"symbol": sym.name, "passed": ok, "checks": [r.as_dict() for r in reports]}
    _write(os.path.join(out, "check_report.json"), json.dumps(doc, indent=2) + "\n")
    lines = [f"symbol = {sym.name}", f"passed = {str(ok).lower()}"]
    for r in reports:
        lines += ["", f"[{r.condition}]", f"passed = {str(r.passed).lower()}",
                  f"grid = {r.grid}", f"note = {r.note}"]
        if r.constant is not None:
            lines.append(f"constant = {r.constant!r}")
        if not r.passed:
            w = r.as_dict()["witness"]
            lines.append(f"witness = x={w['x']} xi={w['xi']} q={w['value']}")
    text = "\n".join(lines) + "\n"
    _write(os.path.join(out, "check_report.txt"), text)
    for r in reports:
        _say(args, f"{'PASS' if r.passed else 'FAIL'} {r.condition}: {r.note}")
    return EXIT_OK if ok else EXIT_FAIL


def _cf_validation(cfg, sym, report):
    v = cfg.validate
    h, n = v["cf_h"], v["cf_n"]
    xs = v["cf_x"]
    if len(xs) % sym.dim:
        raise ConfigError("cf_x length must be a multiple of the dimension", field="cf_x")
    for j, x in enumerate(np.asarray(xs).reshape(-1, sym.dim)):
        bias = v["bias_budget"]
        if bias is None:
            bias = 0.0
            if sym.family is not S.Family.STABLE_LIKE and sym.family is not S.Family.SDE_DRIVEN:
                sampler = build_sampler(sym.triplet_at(x), h, cfg.sampler_options())
                bias = TRUNCATION_BIAS if sampler.strategy is Strategy.TRUNCATED else 0.0
        rng = RngStream(cfg.seed, j, domain=11)
        inc = step(sym, x, h, rng, size=n) - x
        grid = V.cf_grid(sym, x, h, n)
        report.add(V.cf_match_test(inc, grid, bias, cfg.seed, f"cf_match(x={x.tolist()})"))


def _jump_validation(cfg, sym, report):
    v = cfg.validate
    if cfg.family != "compound_poisson":
        raise ConfigError("jump_count test needs a compound_poisson symbol", field="tests")
    sampler = build_sampler(sym.triplet_at(np.zeros(sym.dim)), v["jump_h"], cfg.sampler_options())
    _, counts = sample_increment(sampler, v["jump_h"], RngStream(cfg.seed, 0, domain=12),
                                 size=v["jump_n"], return_counts=True)
    report.add(V.jump_count_test(counts, cfg.symbol["rate"], v["jump_h"], seed=cfg.seed))


def _convergence_validation(cfg, sym, report):
    v = cfg.validate
    x0 = v["conv_x0"] if v["conv_x0"] is not None else [0.0] * sym.dim
    try:
        conv = V.convergence_study(sym, x0, v["conv_T"], v["conv_h"], v["conv_paths"], cfg.seed)
    except ValueError as exc:
        raise ConfigError(str(exc), field="conv_h") from None
    report.add(V.TestResult("convergence_trend", conv.excess, 0.0, conv.passed, conv.n_paths,
                            conv.note, cfg.seed,
                            {"h_list": conv.h_list, "distances": conv.distances,
                             "noise_floor": conv.noise_floor}))


def _state_dependence_validation(cfg, sym, report):
    v = cfg.validate
    if sym.family is not S.Family.STABLE_LIKE:
        raise ConfigError("state_dependence test needs a stable-like symbol", field="tests")
    exp = V.state_dependence_experiment(sym, v["sd_n"], cfg.seed, v["sd_h"])
    for r in exp.results:
        report.add(r)


def cmd_validate(cfg, out, args):
    sym = _symbol_of(cfg)
    report = V.ValidationReport(f"validate {sym.name}",
                                metadata={"seed": cfg.seed, "version": __version__,
                                          "backend": _kernels.BACKEND})
    runners = {"cf": _cf_validation, "jump_count": _jump_validation,
               "convergence": _convergence_validation,
               "state_dependence": _state_dependence_validation}
    for t in cfg.validate["tests"]:
        runners[t](cfg, sym, report)
    _write(os.path.join(out, "validation_report.txt"), report.to_text())
    _write(os.path.join(out, "validation_summary.json"), report.to_json())
    for r in report.results:
        _say(args, f"{'PASS' if r.passed else 'FAIL'} {r.name}: "
                   f"{r.statistic:.4g} vs {r.threshold:.4g}")
    return EXIT_OK if report.passed else EXIT_FAIL


FIGURE1_T = 5.0
FIGURE1_STEPS = 1000


def figure1_config(seed, x0=0.0):
    text = format_config({"symbol": {"family": "figure1"},
                          "run": {"seed": seed, "x0": [x0], "T": FIGURE1_T,
                                  "n_steps": FIGURE1_STEPS, "n_paths": 1}})
    return load_config(text)


def cmd_demo_figure1(cfg, out, args):
    if cfg.family != "figure1" or cfg.run["n_paths"] != 1:
        raise ConfigError("demo-figure1 expects the figure1 family with n_paths = 1")
    sym = _symbol_of(cfg)
    h, m = cfg.grid()
    x0 = _x0(cfg, sym)
    ens = simulate_ensemble(sym, x0, h, m, 1, cfg.seed, record="all")
    states = ens.paths[0]
    _write(os.path.join(out, "figure1.csv"), path_csv(ens.times, states))
    _write(os.path.join(out, "figure1.svg"), path_svg(ens.times, states[:, 0]))
    _write(os.path.join(out, "manifest.cfg"), _manifest(cfg, "demo-figure1"))
    _say(args, f"wrote figure1.csv ({len(ens.times)} points), figure1.svg, manifest.cfg to {out}")
    return EXIT_OK


COMMANDS = {"simulate": cmd_simulate, "check-symbol": cmd_check_symbol,
            "validate": cmd_validate, "demo-figure1": cmd_demo_figure1}


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="experiment config file")
    common.add_argument("--seed", type=_seed_arg, help="seed (overrides the config)")
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    p = argparse.ArgumentParser(prog="feller", description="Euler scheme for Feller processes")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="simulate paths")
    sub.add_parser("check-symbol", parents=[common], help="check symbol conditions")
    sub.add_parser("validate", parents=[common], help="statistical validation")
    sub.add_parser("demo-figure1", parents=[common],
                   help="stable-like demo path (T = 5, 1000 steps) as CSV and SVG")
    return p


def _seed_arg(s):
    try:
        return _u64(s)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        if args.config is not None:
            try:
                with open(args.config, encoding="utf-8") as fh:
                    text = fh.read()
            except OSError as exc:
                raise ConfigError(f"cannot read config: {exc}") from None
            require = ("run",) if args.command in ("simulate", "demo-figure1") else ()
            cfg = load_config(text, args.seed, require)
        elif args.command == "demo-figure1":
            if args.seed is None:
                raise ConfigError("demo-figure1 needs --seed or a config with a seed")
            cfg = figure1_config(args.seed)
        else:
            raise ConfigError(f"{args.command} needs --config")
        if args.command == "validate" and cfg.seed is None:
            raise ConfigError("seed is mandatory (no clock-based default)", field="seed")
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out, args)
    except ConfigError as exc:
        print(f"feller: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (SimulationError, SamplerError) as exc:
        print(f"feller: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
