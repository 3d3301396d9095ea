"""Command line entry point: ``wetting <command> [options]``.

Every option can also come from an INI file given with ``--config``.  The
``[common]`` section applies to all commands and a section named after the
command overrides it; flags override both.  Grids are ``start:stop:step``
(stop included), a comma list, or a single number.

Each run writes ``<command>.csv`` and ``<command>.json`` to ``--output-dir``,
plus ``<command>.svg`` for curve outputs.  Exit status is 0 on success, 1 for
a domain error and 2 for a bad configuration; failures print an error JSON
on stderr.
"""

import argparse
import configparser
from concurrent.futures import ThreadPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import json
import math
import os
from pathlib import Path
import sys

import numpy as np

from . import checks, exact, ldp, oracles, renewal, sampler, walks, well

THREADS_ENV = "WETTING_THREADS"
LATTICE_FAMILIES = ("lazy", "geometric", "almost_geometric")
COMMANDS = ("free-energy", "rate-function", "phase-diagram", "well-spectrum",
            "contact-law", "verify-gaussian", "sample", "verify")


class ConfigError(Exception):
    pass


# ---------------------------------------------------------------- configuration

# key -> (converter, commands using it, help)
_KEYS = {
    "family": (str, "*", "increment family"),
    "gamma": (float, "*", "parameter of lazy / geometric / laplace families"),
    "theta": (float, "*", "parameter of the almost-geometric family"),
    "alpha": (float, ("free-energy",), "stability index of the zeta family"),
    "f0": (float, ("free-energy",), "stable density at zero for the zeta family"),
    "lambda": (str, ("free-energy", "phase-diagram", "well-spectrum", "contact-law",
                     "verify-gaussian", "sample"), "pinning reward (grid for curve commands)"),
    "a": (str, ("well-spectrum", "verify-gaussian", "sample"), "depth fraction (grid for well-spectrum)"),
    "x": (str, ("rate-function",), "grid of drifts"),
    "N": (int, ("contact-law", "verify-gaussian", "sample"), "polymer length"),
    "paths": (int, ("sample",), "number of paths"),
    "seed": (int, ("sample",), "random seed"),
    "width": (float, ("verify-gaussian",), "window half-width in standard deviations"),
    "checks": (str, ("verify",), "comma list of check numbers (default: all)"),
    "output-dir": (str, "*", "directory for emitted files"),
}

_DEFAULTS = {
    "family": "lazy", "gamma": 0.4, "theta": 3.0, "alpha": 2.0, "f0": None,
    "paths": 100, "seed": 0, "width": 3.0, "checks": None, "output-dir": "wetting-out",
}


@dataclass
class RunConfig:
    command: str
    family: str
    params: dict
    values: dict = field(default_factory=dict)
    output_dir: Path = Path("wetting-out")

    def get(self, key):
        if key not in self.values or self.values[key] is None:
            raise ConfigError(f"{self.command} needs '{key}'")
        return self.values[key]


def parse_grid(text):
    """Values of ``start:stop:step`` (stop included), ``v1,v2,...`` or ``v``."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, stop, step = (float(s) for s in text.split(":"))
            if step <= 0 or stop < start:
                raise ConfigError(f"bad grid {text!r}: need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9))
            return [start + i * step for i in range(n + 1)]
        return [float(s) for s in text.split(",") if s.strip()]
    except ValueError as err:
        raise ConfigError(f"bad grid {text!r}: {err}") from None


def _applies(key, command):
    scope = _KEYS[key][1]
    return scope == "*" or command in scope


def load_config(path, command):
    """Key-value pairs for ``command`` from an INI file, validated."""
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        with open(path) as fh:
            cp.read_file(fh)
    except (OSError, configparser.Error) as err:
        raise ConfigError(f"cannot read config {path}: {err}") from None
    out = {}
    for section in cp.sections():
        if section != "common" and section not in COMMANDS:
            raise ConfigError(f"unknown section [{section}]")
    for section in ("common", command):
        if not cp.has_section(section):
            continue
        for key, value in cp.items(section):
            if key not in _KEYS:
                raise ConfigError(f"unknown key '{key}' in [{section}]")
            if section == command and not _applies(key, command):
                raise ConfigError(f"key '{key}' does not apply to {command}")
            if _applies(key, command):
                out[key] = value
    return out


def _convert(key, value):
    conv = _KEYS[key][0]
    try:
        return conv(value)
    except (TypeError, ValueError):
        raise ConfigError(f"bad value for '{key}': {value!r}") from None


def build_config(command, flags, config_path=None):
    raw = dict(load_config(config_path, command)) if config_path else {}
    for key, value in flags.items():
        if value is not None:
            if not _applies(key, command):
                raise ConfigError(f"option --{key} does not apply to {command}")
            raw[key] = value
    values = {k: v for k, v in _DEFAULTS.items() if _applies(k, command)}
    values.update({k: _convert(k, v) for k, v in raw.items()})
    family = values["family"].lower().replace("-", "_")
    if family in LATTICE_FAMILIES:
        params = {"theta": values["theta"]} if family == "almost_geometric" else {"gamma": values["gamma"]}
    elif family in oracles.FAMILIES and command == "free-energy":
        params = {}
        if family in ("laplace", "glaplace"):
            params = {"gamma": values["gamma"] if "gamma" in raw else 1.0}
        elif family == "zeta":
            params = {"alpha": values["alpha"]}
            if values.get("f0") is not None:
                params["f0"] = values["f0"]
    else:
        allowed = LATTICE_FAMILIES + (oracles.FAMILIES if command == "free-energy" else ())
        raise ConfigError(f"family {family!r} not available for {command}; choose from {allowed}")
    return RunConfig(command, family, params, values, Path(values["output-dir"]))


# ---------------------------------------------------------------- emission


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.17g" % float(v)
    return "" if v is None else str(v)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_cell(v) for v in row])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, Path):
        return str(v)
    return v


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_svg(path, series, xlabel, ylabel, width=640, height=420, markers=()):
    """Line plot of ``series`` = [(label, xs, ys), ...] as a standalone SVG."""
    pad_l, pad_r, pad_t, pad_b = 70, 20, 20, 50
    pts = [(x, y) for _, xs, ys in series for x, y in zip(xs, ys) if math.isfinite(y)]
    if not pts:
        pts = [(0.0, 0.0), (1.0, 1.0)]
    x0, x1 = min(p[0] for p in pts), max(p[0] for p in pts)
    y0, y1 = min(p[1] for p in pts), max(p[1] for p in pts)
    if x1 == x0:
        x1 = x0 + 1.0
    if y1 == y0:
        y1 = y0 + 1.0
    sx = lambda x: pad_l + (x - x0) / (x1 - x0) * (width - pad_l - pad_r)  # noqa: E731
    sy = lambda y: height - pad_b - (y - y0) / (y1 - y0) * (height - pad_t - pad_b)  # noqa: E731
    colors = ("#1f4e79", "#b03a2e", "#1e8449", "#7d3c98")
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           '<rect width="100%" height="100%" fill="white"/>',
           f'<line x1="{pad_l}" y1="{height - pad_b}" x2="{width - pad_r}" y2="{height - pad_b}" stroke="black"/>',
           f'<line x1="{pad_l}" y1="{pad_t}" x2="{pad_l}" y2="{height - pad_b}" stroke="black"/>']
    for i in range(5):
        xv, yv = x0 + i * (x1 - x0) / 4, y0 + i * (y1 - y0) / 4
        out.append(f'<text x="{sx(xv):.1f}" y="{height - pad_b + 15}" text-anchor="middle">{xv:.4g}</text>')
        out.append(f'<text x="{pad_l - 6}" y="{sy(yv) + 4:.1f}" text-anchor="end">{yv:.4g}</text>')
    out.append(f'<text x="{(pad_l + width - pad_r) / 2:.1f}" y="{height - 12}" text-anchor="middle">{xlabel}</text>')
    out.append(f'<text x="16" y="{(pad_t + height - pad_b) / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 16 {(pad_t + height - pad_b) / 2:.1f})">{ylabel}</text>')
    for xm, label in markers:
        if x0 <= xm <= x1:
            out.append(f'<line x1="{sx(xm):.1f}" y1="{pad_t}" x2="{sx(xm):.1f}" y2="{height - pad_b}" '
                       f'stroke="gray" stroke-dasharray="4 3"/>')
            out.append(f'<text x="{sx(xm) + 3:.1f}" y="{pad_t + 10}" fill="gray">{label}</text>')
    for k, (label, xs, ys) in enumerate(series):
        c = colors[k % len(colors)]
        seg = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(xs, ys) if math.isfinite(y))
        out.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.5" points="{seg}"/>')
        out.append(f'<text x="{width - pad_r - 5}" y="{pad_t + 14 * (k + 1)}" text-anchor="end" fill="{c}">{label}</text>')
    out.append("</svg>")
    Path(path).write_text("\n".join(out) + "\n")


def _pool_map(fn, items):
    """Map over a thread pool, results in input order."""
    workers = int(os.environ.get(THREADS_ENV, "1") or 1)
    if workers <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- commands


def _well_model(cfg):
    return well.well_model(walks.make_law(cfg.family, **cfg.params))


def _scalar(cfg, key):
    vals = parse_grid(cfg.get(key))
    if len(vals) != 1:
        raise ConfigError(f"'{key}' must be a single value for {cfg.command}")
    return vals[0]


def cmd_free_energy(cfg):
    lams = parse_grid(cfg.get("lambda"))
    summary = {}
    if cfg.family in LATTICE_FAMILIES:
        rm = _well_model(cfg).renewal
        cf = oracles.closed_form_model(cfg.family, **cfg.params) if cfg.family != "almost_geometric" else None
        rows = _pool_map(lambda l: (l, renewal.free_energy(rm, l),
                                    cf.F(l) if cf else math.nan,
                                    renewal.free_energy_derivative(rm, l) if l > rm.lambda_c else 0.0), lams)
        lam_c, kappa = rm.lambda_c, rm.kappa
        summary["fplus_table_tail_mass"] = rm.kappa_tail_bound
    else:
        cf = oracles.closed_form_model(cfg.family, **cfg.params)
        rows = _pool_map(lambda l: (l, cf.F(l), cf.F(l), math.nan), lams)
        lam_c, kappa = cf.lambda_c, cf.kappa
    gaps = [abs(r[1] - r[2]) for r in rows if math.isfinite(r[2])]
    summary.update(lambda_c=lam_c, kappa=kappa, root_rtol=1e-15,
                   max_closed_form_gap=max(gaps) if gaps else None)
    write_csv(cfg.output_dir / "free-energy.csv", ["lambda", "F", "F_closed_form", "dF_dlambda"], rows)
    write_svg(cfg.output_dir / "free-energy.svg", [("F", [r[0] for r in rows], [r[1] for r in rows])],
              "lambda", "F(lambda)", markers=[(lam_c, "lambda_c")])
    return summary


def cmd_rate_function(cfg):
    m = _well_model(cfg)
    xs = parse_grid(cfg.get("x"))
    rm, rp = m.rate_minus, m.rate_plus

    def row(x):
        Im = ldp.rate(rm, x)
        Ip = ldp.rate(rp, x)
        dm = ldp.rate_derivatives(rm, x) if 0 <= x < rm.x_bar else (math.nan, math.nan)
        dp = ldp.rate_derivatives(rp, x) if 0 <= x < rp.x_bar else (math.nan, math.nan)
        return (x, Im, Ip, dm[0], dm[1], dp[0], dp[1])

    rows = _pool_map(row, xs)
    write_csv(cfg.output_dir / "rate-function.csv",
              ["x", "I_minus", "I_plus", "dI_minus", "d2I_minus", "dI_plus", "d2I_plus"], rows)
    fin = lambda v: v if math.isfinite(v) else math.nan  # noqa: E731
    write_svg(cfg.output_dir / "rate-function.svg",
              [("I_-", xs, [fin(r[1]) for r in rows]), ("I_+", xs, [fin(r[2]) for r in rows])], "x", "I(x)")
    return {"case_minus": rm.case_tag, "case_plus": rp.case_tag, "t0_minus": rm.t0, "t0_plus": rp.t0,
            "rho_minus": rm.rho, "rho_plus": rp.rho, "x_bar_minus": rm.x_bar, "x_bar_plus": rp.x_bar}


def cmd_phase_diagram(cfg):
    m = _well_model(cfg)
    lams = parse_grid(cfg.get("lambda"))
    pd = well.phase_diagram(m, lams)
    rows = pd.rows()
    write_csv(cfg.output_dir / "phase-diagram.csv", ["lambda", "F", "a_c", "band"], rows)
    markers = [(pd.lambda_c, "lambda_c")]
    for lab, v in (("lambda_-", pd.lambda_minus), ("lambda_+", pd.lambda_plus)):
        if math.isfinite(v):
            markers.append((v, lab))
    write_svg(cfg.output_dir / "phase-diagram.svg",
              [("a_c", [r[0] for r in rows], [r[2] for r in rows])],
              "lambda", "a_c(lambda)", markers=markers)
    return {"lambda_c": pd.lambda_c, "lambda_minus": pd.lambda_minus, "lambda_plus": pd.lambda_plus,
            "max_depth": well.max_depth(m)}


def cmd_well_spectrum(cfg):
    m = _well_model(cfg)
    lam = _scalar(cfg, "lambda")
    aas = parse_grid(cfg.get("a"))

    def row(a):
        s = well.psi_closed_form(m, lam, a)
        b = well.psi_brute_force(m, lam, a)
        gap = 0.0 if s.psi == b else abs(s.psi - b)
        nan = lambda v: math.nan if v is None else v  # noqa: E731
        return (a, s.psi, s.F_well, s.regime, nan(s.u_star), nan(s.v_star),
                s.contact_angles[0], s.contact_angles[1], gap)

    rows = _pool_map(row, aas)
    write_csv(cfg.output_dir / "well-spectrum.csv",
              ["a", "psi", "F_well", "regime", "u_star", "v_star", "angle_left", "angle_right",
               "brute_force_gap"], rows)
    write_svg(cfg.output_dir / "well-spectrum.svg", [("F(lambda, a)", aas, [r[2] for r in rows])],
              "a", "F(lambda, a)", markers=[(well.critical_depth(m, lam), "a_c")])
    return {"lambda": lam, "F": m.F(lam), "a_c": well.critical_depth(m, lam),
            "max_brute_force_gap": max(r[-1] for r in rows)}


def cmd_contact_law(cfg):
    m = _well_model(cfg)
    lam = _scalar(cfg, "lambda")
    N = cfg.get("N")
    if lam <= m.lambda_c:
        raise ValueError(f"contact-law needs lambda > lambda_c = {m.lambda_c:.6g}")
    cl = renewal.contact_number_law(m.renewal, lam, N)
    keep = cl.prob > 1e-300
    rows = [(int(k), p, g) for k, p, g in zip(cl.k[keep], cl.prob[keep], cl.gaussian[keep])]
    write_csv(cfg.output_dir / "contact-law.csv", ["k", "probability", "gaussian_density"], rows)
    scale = math.sqrt(N) / cl.m_lambda
    write_svg(cfg.output_dir / "contact-law.svg",
              [("exact", [r[0] for r in rows], [scale * r[1] for r in rows]),
               ("Gaussian", [r[0] for r in rows], [r[2] for r in rows])],
              "k", "(sqrt(N)/m) P(H_N = k)")
    return {"N": N, "lambda": lam, "mean": cl.mean, "m_lambda": cl.m_lambda,
            "sigma_eff": cl.sigma_eff, "scaled_discrepancy": cl.scaled_discrepancy()}


def cmd_verify_gaussian(cfg):
    m = _well_model(cfg)
    lam, a, N = _scalar(cfg, "lambda"), _scalar(cfg, "a"), cfg.get("N")
    law = exact.lr_joint_law(m, lam, a, N)
    if law.constants is None:
        raise ValueError("no Gaussian constants at this (lambda, a)")
    c = law.constants
    sup, S, G = law.gaussian_discrepancy(cfg.values["width"])
    pl = law.marginal_L()
    sq = math.sqrt(N)
    zl = (law.ls - c.u_star * N) / (c.sigma1 * sq)
    gl = np.exp(-0.5 * zl ** 2) / (c.sigma1 * sq * math.sqrt(2 * math.pi))
    rows = [(int(l), p, g) for l, p, g in zip(law.ls, pl, gl) if p > 1e-300]
    write_csv(cfg.output_dir / "verify-gaussian.csv", ["l", "P_L", "gaussian_L"], rows)
    write_svg(cfg.output_dir / "verify-gaussian.svg",
              [("exact", [r[0] for r in rows], [r[1] for r in rows]),
               ("Gaussian", [r[0] for r in rows], [r[2] for r in rows])], "l", "P(L_N = l)")
    return {"N": N, "lambda": lam, "a": a, "sup_discrepancy": sup, "window_sigmas": cfg.values["width"],
            "dry_mass": law.dry, "cap_tail_bound": law.split.cap_tail_bound, "constants": asdict(c)}


def cmd_sample(cfg):
    m = _well_model(cfg)
    lam, a, N = _scalar(cfg, "lambda"), _scalar(cfg, "a"), cfg.get("N")
    seed, n_paths = cfg.values["seed"], cfg.values["paths"]
    ws = sampler.WellSampler(m, lam, a, N)
    paths = ws.sample_paths(n_paths, seed)
    rows = [(p.stream, p.L is not None, -1 if p.L is None else p.L, -1 if p.R is None else p.R,
             p.H, int(p.heights.min()), int(p.heights.max())) for p in paths]
    write_csv(cfg.output_dir / "sample.csv", ["path", "wet", "L", "R", "H", "min_height", "max_height"], rows)
    with open(cfg.output_dir / "sample-heights.csv", "w") as fh:
        fh.write("path," + ",".join(f"h{n}" for n in range(N + 1)) + "\n")
        for p in paths:
            fh.write(f"{p.stream}," + ",".join(str(int(h)) for h in p.heights) + "\n")
    wet = np.array([r[1] for r in rows])
    L, R, H = (np.array([r[i] for r in rows]) for i in (2, 3, 4))
    return {"seed": seed, "depth": ws.depth, "dry_probability": ws.joint.dry,
            **sampler.summarize(wet, L, R, H, N)}


def cmd_verify(cfg):
    wanted = None
    if cfg.values.get("checks"):
        try:
            wanted = {int(s) for s in cfg.values["checks"].split(",")}
        except ValueError:
            raise ConfigError("'checks' must be a comma list of integers") from None
    results = checks.run_all(wanted)
    for r in results:
        print(r.line(), flush=True)
    rows = [(r.number, r.name, r.passed and r.within_time, r.elapsed, r.time_limit) for r in results]
    write_csv(cfg.output_dir / "verify.csv", ["check", "name", "passed", "seconds", "time_limit"], rows)
    summary = {"checks": [{"number": r.number, "name": r.name, "passed": r.passed,
                           "within_time": r.within_time, "detail": r.detail} for r in results]}
    summary["all_passed"] = all(r.passed and r.within_time for r in results)
    return summary


_HANDLERS = {
    "free-energy": cmd_free_energy, "rate-function": cmd_rate_function,
    "phase-diagram": cmd_phase_diagram, "well-spectrum": cmd_well_spectrum,
    "contact-law": cmd_contact_law, "verify-gaussian": cmd_verify_gaussian,
    "sample": cmd_sample, "verify": cmd_verify,
}


# ---------------------------------------------------------------- entry point


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser():
    parser = _Parser(prog="wetting", description="Wetting and square-well computations.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI file with [common] and per-command sections")
        for key, (conv, scope, help_) in _KEYS.items():
            if scope == "*" or name in scope:
                p.add_argument(f"--{key}", dest=key.replace("-", "_"), default=None, help=help_)
    return parser


def run(argv=None):
    """Run one command; returns the exit status."""
    try:
        args = build_parser().parse_args(argv)
        flags = {k: getattr(args, k.replace("-", "_")) for k in _KEYS
                 if hasattr(args, k.replace("-", "_"))}
        cfg = build_config(args.command, flags, args.config)
        cfg.output_dir.mkdir(parents=True, exist_ok=True)
    except ConfigError as err:
        _fail(2, "config", str(err))
        return 2
    try:
        summary = _HANDLERS[cfg.command](cfg)
    except ConfigError as err:
        _fail(2, "config", str(err))
        return 2
    except (ValueError, ArithmeticError) as err:
        _fail(1, "domain", str(err))
        return 1
    payload = {"command": cfg.command, "family": cfg.family, "params": cfg.params,
               "options": {k: v for k, v in cfg.values.items() if k != "output-dir"},
               "summary": summary}
    write_json(cfg.output_dir / f"{cfg.command}.json", payload)
    if cfg.command == "verify" and not summary["all_passed"]:
        return 1
    return 0


def _fail(code, kind, message):
    json.dump({"status": "error", "exit_code": code, "kind": kind, "message": message}, sys.stderr)
    sys.stderr.write("\n")


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
