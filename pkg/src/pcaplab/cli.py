"""Command line front end: ``pcaplab solve|verify|sweep|flow --config <path>``.

Configurations are YAML documents (JSON is valid YAML, so the JSON encoding of
the same schema is accepted too):

    name: cone_a05
    n: 3
    p: [1.5, 2.0]
    beta: [2.0]                       # optional, monotone series written by solve
    profile: {kind: capped_cone, a: 0.5, r1: 0.5}
    domain: {kind: geodesic_ball, r0: 1.0}
    grid: {Nr: 256, Ntheta: 96, R_max_factor: 100}
    solver: {tol: 1.0e-10, stage_tol: 1.0e-7}
    t_grid: {t_max: 8.0, num: 10}
    p_sequence: [1.2, 1.1, 1.05]
    checks: [lp_minkowski, volumetric_minkowski]
    flow: {T: 20.0, dt: 0.05}
    sweep: {axis: a, values: [0.3, 0.5, 0.7, 0.9, 1.0]}
    output: out/cone_a05

Only ``n``, ``p``, ``profile`` and ``domain`` are required.  Exit status: 0 on
success, 1 for configuration errors, 2 when the solver does not converge and 3
when some check reports a violated inequality.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources

import numpy as np
import yaml

from . import __version__, imcf, inequalities, monotonicity
from .errors import ConfigParse, NonConvergence, NotConicalRegion, PcapError
from .manifold import KINDS, DomainSpec, check_profile, make_profile
from .radial import capacity, solve_radial
from .solver_axisym import (DEFAULT_EPS_SCHEDULE, GridParams, SolverParams, capacity_from_field,
                            dump_field, solve)

EXIT_CONFIG = 1
EXIT_SOLVER = 2
EXIT_VIOLATED = 3

TOP_KEYS = {"name", "n", "p", "beta", "profile", "domain", "grid", "solver", "t_grid",
            "p_sequence", "checks", "flow", "sweep", "output", "version", "seed"}
PROFILE_KEYS = {"kind", "a", "r1", "r2", "r", "h"}
DOMAIN_KEYS = {"kind", "r0", "eps", "k"}
GRID_KEYS = {"Nr", "Ntheta", "R_max_factor"}
SOLVER_KEYS = {"tol", "stage_tol", "eps_schedule", "picard_steps", "max_newton",
               "damping_floor", "floor_factor"}
SWEEP_AXES = ("p", "beta", "a", "eps")


# -- configuration ------------------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    raw: dict
    name: str
    n: int
    p: tuple
    beta: tuple
    profile: object
    domain: DomainSpec
    grid: GridParams
    solver: SolverParams
    t_grid: tuple
    p_sequence: tuple
    checks: tuple
    flow: dict
    sweep: dict
    output: str
    config_hash: str


def _line_index(text):
    """Map key paths to 1-based line numbers using the YAML node tree."""
    index = {}

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for key, value in node.value:
                sub = path + (str(key.value),)
                index[sub] = key.start_mark.line + 1
                walk(value, sub)
        elif isinstance(node, yaml.SequenceNode):
            for i, value in enumerate(node.value):
                sub = path + (i,)
                index[sub] = value.start_mark.line + 1
                walk(value, sub)

    try:
        walk(yaml.compose(text), ())
    except yaml.YAMLError:
        pass
    return index


class _Validator:
    def __init__(self, source, lines):
        self.source = source
        self.lines = lines

    def fail(self, path, message):
        where = ".".join(str(x) for x in path) or "<root>"
        line = None
        for k in range(len(path), 0, -1):
            line = self.lines.get(tuple(path[:k]))
            if line is not None:
                break
        loc = f"{self.source}:{line}" if line is not None else self.source
        raise ConfigParse(f"{loc}: field '{where}': {message}")

    def mapping(self, value, path, allowed):
        if not isinstance(value, dict):
            self.fail(path, "expected a mapping")
        for key in value:
            if key not in allowed:
                self.fail(path + (key,), f"unknown key (allowed: {', '.join(sorted(allowed))})")
        return value

    def number(self, value, path, lo=-math.inf, hi=math.inf, open_lo=False):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected a number, got {value!r}")
        x = float(value)
        if not math.isfinite(x) or x > hi or x < lo or (open_lo and x == lo):
            bound = f"({lo}, {hi}]" if open_lo else f"[{lo}, {hi}]"
            self.fail(path, f"value {x} outside {bound}")
        return x

    def integer(self, value, path, lo, hi=10 ** 9):
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected an integer, got {value!r}")
        if not lo <= value <= hi:
            self.fail(path, f"value {value} outside [{lo}, {hi}]")
        return int(value)

    def number_list(self, value, path, **bounds):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = [value]
        if not isinstance(value, list) or not value:
            self.fail(path, "expected a nonempty list of numbers")
        return tuple(self.number(v, path + (i,), **bounds) for i, v in enumerate(value))


def _default_checks(profile, domain):
    names = [c for c in inequalities.CHECKS if c != "bg_cone"]
    if domain.is_ball and profile.conical_on(domain.r0, domain.r0):
        names.append("bg_cone")
    return tuple(names)


def config_hash(raw):
    canon = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def parse_config(text, source="<config>"):
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        line = f":{mark.line + 1}" if mark is not None else ""
        raise ConfigParse(f"{source}{line}: malformed config: {getattr(exc, 'problem', exc)}")
    v = _Validator(source, _line_index(text))
    raw = v.mapping(raw, (), TOP_KEYS)
    for key in ("n", "p", "profile", "domain"):
        if key not in raw:
            v.fail((key,), "required field missing")
    n = v.integer(raw["n"], ("n",), 2, 16)
    p = v.number_list(raw["p"], ("p",), lo=1.0, hi=n, open_lo=True)
    for i, x in enumerate(p):
        if x >= n:
            v.fail(("p", i), f"p must be below n = {n}")
    beta = v.number_list(raw.get("beta", [2.0]), ("beta",), lo=0.0)

    prof = v.mapping(raw["profile"], ("profile",), PROFILE_KEYS)
    kind = prof.get("kind")
    if kind not in KINDS:
        v.fail(("profile", "kind"), f"expected one of {', '.join(KINDS)}")
    params = {}
    a = 1.0
    if kind != "euclidean" and kind != "tabulated":
        if "a" not in prof:
            v.fail(("profile", "a"), "required for this profile kind")
        a = v.number(prof["a"], ("profile", "a"), lo=0.0, hi=1.0, open_lo=True)
    if kind == "grafted":
        for key in ("r1", "r2"):
            if key not in prof:
                v.fail(("profile", key), "required for grafted profiles")
            params[key] = v.number(prof[key], ("profile", key), lo=0.0, open_lo=True)
        if params["r2"] <= params["r1"]:
            v.fail(("profile", "r2"), "must exceed r1")
    if kind == "capped_cone":
        if "r1" not in prof:
            v.fail(("profile", "r1"), "required for capped_cone profiles")
        params["r1"] = v.number(prof["r1"], ("profile", "r1"), lo=0.0, open_lo=True)
    if kind == "tabulated":
        params["r"] = v.number_list(prof.get("r"), ("profile", "r"), lo=0.0)
        params["h"] = v.number_list(prof.get("h"), ("profile", "h"), lo=0.0)
    try:
        profile = make_profile(n, kind, a, **params)
        check_profile(profile)
    except PcapError as exc:
        v.fail(("profile",), str(exc))

    dom = v.mapping(raw["domain"], ("domain",), DOMAIN_KEYS)
    dkind = dom.get("kind", "geodesic_ball")
    if dkind not in ("geodesic_ball", "perturbed_ball"):
        v.fail(("domain", "kind"), "expected geodesic_ball or perturbed_ball")
    r0 = v.number(dom.get("r0", 1.0), ("domain", "r0"), lo=0.0, open_lo=True)
    eps = v.number(dom.get("eps", 0.0), ("domain", "eps"), lo=-0.5, hi=0.5)
    k = v.integer(dom.get("k", 0), ("domain", "k"), 0, 64)
    try:
        domain = DomainSpec(dkind, r0, eps, k)
    except PcapError as exc:
        v.fail(("domain",), str(exc))
    if profile.kind == "cone" and not domain.is_ball:
        v.fail(("domain", "kind"), "the exact cone is singular at the axis; use a geodesic ball")

    g = v.mapping(raw.get("grid", {}), ("grid",), GRID_KEYS)
    grid = GridParams(v.integer(g.get("Nr", 256), ("grid", "Nr"), 16, 8192),
                      v.integer(g.get("Ntheta", 96), ("grid", "Ntheta"), 8, 4096),
                      v.number(g.get("R_max_factor", 100.0), ("grid", "R_max_factor"), lo=4.0))
    s = v.mapping(raw.get("solver", {}), ("solver",), SOLVER_KEYS)
    base = SolverParams()
    solver = SolverParams(
        tol=v.number(s.get("tol", base.tol), ("solver", "tol"), lo=0.0, hi=1e-2, open_lo=True),
        eps_schedule=v.number_list(s.get("eps_schedule", list(DEFAULT_EPS_SCHEDULE)),
                                   ("solver", "eps_schedule"), lo=0.0, hi=1.0, open_lo=True),
        picard_steps=v.integer(s.get("picard_steps", base.picard_steps), ("solver", "picard_steps"), 0, 100),
        max_newton=v.integer(s.get("max_newton", base.max_newton), ("solver", "max_newton"), 1, 1000),
        stage_tol=v.number(s.get("stage_tol", base.stage_tol), ("solver", "stage_tol"), lo=0.0, open_lo=True),
        damping_floor=v.number(s.get("damping_floor", base.damping_floor), ("solver", "damping_floor"),
                               lo=0.0, hi=1.0, open_lo=True),
        floor_factor=v.number(s.get("floor_factor", base.floor_factor), ("solver", "floor_factor"), lo=1.0))

    tg = v.mapping(raw.get("t_grid", {}), ("t_grid",), {"t_max", "num"})
    t_max = v.number(tg.get("t_max", 8.0), ("t_grid", "t_max"), lo=1.0, open_lo=True)
    num = v.integer(tg.get("num", 10), ("t_grid", "num"), 2, 10000)
    t_grid = tuple(float(t) for t in monotonicity.default_t_grid(t_max, num))

    p_seq = v.number_list(raw.get("p_sequence", list(inequalities.DEFAULT_P_SEQUENCE)),
                          ("p_sequence",), lo=1.0, hi=n, open_lo=True)
    if any(b >= a_ for a_, b in zip(p_seq, p_seq[1:])):
        v.fail(("p_sequence",), "must decrease toward 1")

    if "checks" in raw:
        checks = raw["checks"]
        if not isinstance(checks, list):
            v.fail(("checks",), "expected a list of check names")
        for i, c in enumerate(checks):
            if c not in inequalities.CHECKS:
                v.fail(("checks", i), f"unknown check {c!r} (known: {', '.join(inequalities.CHECKS)})")
        checks = tuple(checks)
        if "bg_cone" in checks and not ("bg_cone" in _default_checks(profile, domain)):
            v.fail(("checks", checks.index("bg_cone")),
                   "bg_cone needs a geodesic ball whose boundary lies in a conical region")
    else:
        checks = _default_checks(profile, domain)

    fl = v.mapping(raw.get("flow", {}), ("flow",), {"r_start", "T", "dt"})
    flow = {"r_start": v.number(fl.get("r_start", domain.r0), ("flow", "r_start"), lo=0.0, open_lo=True),
            "T": v.number(fl.get("T", 20.0), ("flow", "T"), lo=0.0),
            "dt": v.number(fl.get("dt", 0.05), ("flow", "dt"), lo=0.0, open_lo=True)}

    sw = v.mapping(raw.get("sweep", {}), ("sweep",), {"axis", "values"})
    sweep = {}
    if sw:
        axis = sw.get("axis")
        if axis not in SWEEP_AXES:
            v.fail(("sweep", "axis"), f"expected one of {', '.join(SWEEP_AXES)}")
        sweep = {"axis": axis, "values": v.number_list(sw.get("values"), ("sweep", "values"))}

    output = raw.get("output", os.path.join("out", str(raw.get("name", "run"))))
    if not isinstance(output, str):
        v.fail(("output",), "expected a path")
    name = str(raw.get("name", "run"))
    return RunConfig(raw, name, n, p, beta, profile, domain, grid, solver, t_grid, p_seq, checks,
                     flow, sweep, output, config_hash(raw))


def bundled_configs():
    root = resources.files("pcaplab") / "configs"
    return sorted(x.name for x in root.iterdir() if x.name.endswith(".cfg"))


def load_config(path):
    """Read a config file; bare names fall back to the bundled configs."""
    if not os.path.exists(path):
        name = os.path.basename(path)
        if not name.endswith(".cfg"):
            name += ".cfg"
        candidate = resources.files("pcaplab") / "configs" / name
        if candidate.is_file():
            return parse_config(candidate.read_text(), name)
        raise ConfigParse(f"{path}: no such config file")
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read(), path)


# -- output ----------------------------------------------------------------------

def _fmt(x):
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _plain(obj):
    """Recursively convert numpy scalars and tuples into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    return obj


def write_atomic(path, data):
    """Write bytes or text through a temporary file in the same directory, then rename."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    if isinstance(data, str):
        data = data.encode("utf-8")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(columns, rows, comment=None):
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    return buf.getvalue()


def json_text(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _tag(p):
    return f"p{p:g}"


# -- commands ----------------------------------------------------------------------

def _source(cfg, p):
    if cfg.domain.is_ball:
        return solve_radial(cfg.profile, p, cfg.domain.r0)
    return solve(cfg.profile, p, cfg.domain, cfg.grid, cfg.solver)


def _solve_one(cfg, p):
    """Artifacts for one exponent: summary, potential table, monotone series."""
    src = _source(cfg, p)
    files = {}
    if cfg.domain.is_ball:
        cap, c_p, det = capacity(src)
        r = np.geomspace(src.r0, 1e3 * src.r0, 121)
        rows = [(x, src.u(x), src.du(x)) for x in r]
        files[f"potential_{_tag(p)}.csv"] = csv_text(("r", "u", "du"), rows, f"config {cfg.config_hash}")
        summary = {"p": p, "solver": "radial", "cap": cap, "C_p": c_p, "residual": src.residual,
                   "boundary_vs_energy": det["boundary_vs_energy"]}
    else:
        cap, c_p, det = capacity_from_field(src)
        with tempfile.TemporaryDirectory() as tmp:
            path = os.path.join(tmp, "field.bin")
            dump_field(src, path)
            with open(path, "rb") as fh:
                files[f"field_{_tag(p)}.bin"] = fh.read()
        conv = src.convergence
        summary = {"p": p, "solver": "axisymmetric", "cap": cap, "C_p": c_p,
                   "boundary_vs_energy": det["boundary_vs_energy"], "iterations": conv.iterations,
                   "residual": conv.residual, "eps_reached": conv.eps_reached,
                   "stalled": [list(x) for x in conv.stalled]}
    cols, rows = None, []
    for beta in cfg.beta:
        series = monotonicity.f_beta_series(src, beta, cfg.t_grid, derivatives=True)
        cols, part = series.to_rows()
        rows.extend(part)
        summary[f"beta_{beta:g}"] = {"max_increase": series.max_increase(),
                                     "variation": series.variation(), "asserted": series.asserted}
    inf_series = monotonicity.f_infty_series(src, cfg.t_grid)
    _, part = inf_series.to_rows()
    rows.extend(part)
    summary["beta_inf"] = {"max_increase": inf_series.max_increase(),
                           "variation": inf_series.variation()}
    files[f"monotone_{_tag(p)}.csv"] = csv_text(cols, rows, f"config {cfg.config_hash}")
    summary["config_hash"] = cfg.config_hash
    files[f"solve_{_tag(p)}.json"] = json_text(summary)
    return files


def _verify_one(cfg, p):
    conf = inequalities.Configuration(cfg.profile, cfg.domain, p, cfg.grid, cfg.solver, cfg.p_sequence)
    reports = inequalities.run_checks(conf, cfg.checks)
    out = []
    for rep in reports:
        d = rep.to_dict()
        d["config_hash"] = cfg.config_hash
        d["p"] = p
        out.append(d)
    return out


def _map(fn, args, jobs):
    """Ordered map, in worker processes when jobs > 1."""
    if jobs <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        futures = [pool.submit(fn, *a) for a in args]
        return [f.result() for f in futures]


def _out_dir(cfg, out):
    return out if out is not None else cfg.output


def cmd_solve(cfg, out=None, jobs=1):
    results = _map(_solve_one, [(cfg, p) for p in cfg.p], jobs)
    root = _out_dir(cfg, out)
    for files in results:
        for name in sorted(files):
            write_atomic(os.path.join(root, name), files[name])
    return 0


def summary_table(verdicts):
    head = ("p", "check", "lhs", "rhs", "rel. margin", "verdict", "rigidity")
    rows = [(f"{v['p']:g}", v["name"], f"{v['lhs']:.10g}", f"{v['rhs']:.10g}",
             f"{v['relative_margin']:+.3e}", v["verdict"], v["rigidity_class"]) for v in verdicts]
    widths = [max(len(str(x)) for x in col) for col in zip(head, *rows)]
    line = lambda r: "  ".join(str(x).ljust(w) for x, w in zip(r, widths)).rstrip()
    return "\n".join([line(head), line(["-" * w for w in widths])] + [line(r) for r in rows]) + "\n"


def cmd_verify(cfg, out=None, jobs=1, stream=None):
    groups = _map(_verify_one, [(cfg, p) for p in cfg.p], jobs)
    verdicts = [v for g in groups for v in g]
    root = _out_dir(cfg, out)
    table = summary_table(verdicts)
    write_atomic(os.path.join(root, "verdicts.json"),
                 json_text({"config": cfg.name, "config_hash": cfg.config_hash,
                            "version": __version__, "checks": verdicts}))
    write_atomic(os.path.join(root, "summary.txt"), table)
    if stream is not None:
        stream.write(table)
    violated = any(v["verdict"] == "violated" for v in verdicts)
    return EXIT_VIOLATED if violated else 0


def _variant(cfg, axis, value):
    raw = copy.deepcopy(cfg.raw)
    if axis == "p":
        raw["p"] = [value]
    elif axis == "beta":
        raw["beta"] = [value]
    elif axis == "a":
        raw["profile"]["a"] = value
        if value == 1.0:
            raw["profile"] = {"kind": "euclidean"}
    elif axis == "eps":
        raw["domain"]["eps"] = value
        raw["domain"]["kind"] = "perturbed_ball" if value != 0.0 else "geodesic_ball"
        if value == 0.0:
            raw["domain"]["k"] = 0
        if "checks" not in cfg.raw:
            raw.pop("checks", None)
    raw.pop("sweep", None)
    return parse_config(yaml.safe_dump(raw, sort_keys=True), f"{cfg.name}[{axis}={value}]")


def _sweep_point(cfg, axis, value):
    sub = _variant(cfg, axis, value)
    rows = []
    if axis == "beta":
        for p in sub.p:
            src = _source(sub, p)
            series = monotonicity.f_beta_series(src, value, sub.t_grid, derivatives=False)
            for k, t in enumerate(series.t_grid):
                rows.append((axis, value, p, f"F_t{t:.6g}", math.nan, series.F[k], math.nan,
                             math.nan, "asserted" if series.asserted else "not_asserted"))
        return rows
    for p in sub.p:
        for v in _verify_one(sub, p):
            rows.append((axis, value, p, v["name"], v["lhs"], v["rhs"], v["margin"],
                         v["relative_margin"], v["verdict"]))
    return rows


def cmd_sweep(cfg, out=None, jobs=1, axis=None, values=None):
    axis = axis or cfg.sweep.get("axis")
    values = values or cfg.sweep.get("values")
    if axis not in SWEEP_AXES or not values:
        raise ConfigParse("sweep needs an axis (p, beta, a, eps) and a list of values")
    parts = _map(_sweep_point, [(cfg, axis, float(x)) for x in values], jobs)
    rows = [r for part in parts for r in part]
    cols = ("axis", "value", "p", "check", "lhs", "rhs", "margin", "relative_margin", "verdict")
    root = _out_dir(cfg, out)
    write_atomic(os.path.join(root, f"sweep_{axis}.csv"),
                 csv_text(cols, rows, f"config {cfg.config_hash}"))
    violated = any(r[-1] == "violated" for r in rows)
    return EXIT_VIOLATED if violated else 0


def cmd_flow(cfg, out=None, jobs=1):
    fl = cfg.flow
    states = imcf.evolve(cfg.profile, fl["r_start"], fl["T"], fl["dt"])
    checks = imcf.flow_checks(states, cfg.profile)
    report = {"config_hash": cfg.config_hash, "r_start": fl["r_start"], "T": fl["T"],
              "dt": fl["dt"], "area_residual": checks.area_residual,
              "q_agreement": checks.q_agreement, "q_max_increase": checks.q_max_increase,
              "q_variation": checks.q_variation, "Q_start": states[0].Q, "Q_end": states[-1].Q}
    try:
        split = imcf.splitting_identities_check(states, cfg.profile)
        report["splitting"] = {"metric": split.metric, "mean_curvature": split.mean_curvature}
    except NotConicalRegion as exc:
        report["splitting"] = {"skipped": str(exc)}
    ratio = imcf.minkowski_ratio_series(states, cfg.profile)
    report["minkowski_ratio_end"] = float(ratio[-1])
    report["minkowski_ratio_nonincreasing"] = bool(np.all(np.diff(ratio) <= 1e-12))
    root = _out_dir(cfg, out)
    write_atomic(os.path.join(root, "flow.csv"),
                 csv_text(imcf.FLOW_COLUMNS, imcf.flow_rows(states), f"config {cfg.config_hash}"))
    write_atomic(os.path.join(root, "flow.json"), json_text(report))
    return 0


COMMANDS = {"solve": cmd_solve, "verify": cmd_verify, "sweep": cmd_sweep, "flow": cmd_flow}


def build_parser():
    parser = argparse.ArgumentParser(prog="pcaplab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"pcaplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=True,
                        help="config file, or the name of a bundled config")
        sp.add_argument("--out", default=None, help="output directory (overrides the config)")
        sp.add_argument("--jobs", type=int, default=1, help="worker processes")
        if name == "sweep":
            sp.add_argument("--axis", choices=SWEEP_AXES, default=None)
            sp.add_argument("--values", type=float, nargs="+", default=None)
    sub.add_parser("list-configs", help="print the bundled config names")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "list-configs":
        print("\n".join(bundled_configs()))
        return 0
    try:
        cfg = load_config(args.config)
        if args.command == "verify":
            return cmd_verify(cfg, args.out, args.jobs, stream=sys.stdout)
        if args.command == "sweep":
            return cmd_sweep(cfg, args.out, args.jobs, args.axis, args.values)
        return COMMANDS[args.command](cfg, args.out, args.jobs)
    except ConfigParse as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonConvergence as exc:
        print(f"solver did not converge: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except PcapError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
