"""Command-line front end.

Every command reads JSON inputs, writes a JSON report (plus CSV/SVG where
relevant) into ``--out`` and prints the report to stdout.  Exit codes: 0 on
success, 2 on invalid input, 3 when a check finds a counterexample.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import asian, btp as btp_mod, mot, structure
from .measures import DiscreteMeasure, MeasureError, quantize_uniform
from .payoffs import CostSpec, PayoffError, PiecewiseLinear
from .report import coupling_csv, emit_support_svg
from .scalars import format_scalar, is_exact_value, parse_scalar

EXIT_OK, EXIT_INVALID, EXIT_FINDING = 0, 2, 3
COMMANDS = ("bounds", "structure", "hedge", "btp-check", "asian-ct", "verify")
ASIAN_TASKS = ("one-marginal", "hedge-audit", "counterexample", "conjecture")


class InputError(ValueError):
    """Bad input; the message names the offending field."""


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    out: Path = Path(".")
    mode: str = "rational"
    tol: float = 1e-9
    seed: int = 0
    grid: int = 200
    task: Optional[str] = None

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"command: unknown command {self.command!r}")
        if self.mode not in ("rational", "double"):
            raise InputError(f"--mode: expected rational or double, got {self.mode!r}")
        if not self.tol > 0:
            raise InputError("--tol: must be positive")
        if self.grid < 2:
            raise InputError("--grid: must be at least 2")
        self.out = Path(self.out)

    @property
    def exact(self) -> bool:
        return self.mode == "rational"


# ---------------------------------------------------------------------------
# input parsing


def _load_json(path):
    p = Path(path)
    if not p.is_file():
        raise InputError(f"input: no such file {str(p)!r}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"input: malformed JSON in {p.name} (line {exc.lineno}, column {exc.colno})") from exc


def _field(obj, key, where):
    if not isinstance(obj, dict):
        raise InputError(f"{where}: expected a JSON object")
    if key not in obj:
        raise InputError(f"{where}.{key}: missing" if where else f"{key}: missing")
    return obj[key]


def _measure(obj, where: str, cfg: RunConfig) -> DiscreteMeasure:
    try:
        if isinstance(obj, dict) and "uniform_pieces" in obj:
            pieces = [tuple(parse_scalar(v, cfg.exact) for v in row) for row in obj["uniform_pieces"]]
            if any(len(p) != 3 for p in pieces):
                raise MeasureError("each uniform piece is [left, right, density]")
            return quantize_uniform(pieces, cfg.grid, exact=cfg.exact)
        return DiscreteMeasure.from_json(obj, exact=cfg.exact)
    except (MeasureError, ValueError, TypeError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def _phi(obj, where: str, cfg: RunConfig) -> PiecewiseLinear:
    try:
        return PiecewiseLinear.from_breakpoints(obj, cfg.exact).require_convex()
    except (PayoffError, TypeError) as exc:
        raise InputError(f"{where}: {exc}") from exc


@dataclass
class Problem:
    marginals: list
    payoff: CostSpec
    direction: Optional[str]
    secondary: bool
    grids: Optional[list]


def _problem(path, cfg: RunConfig, default_secondary: bool = False) -> Problem:
    raw = _load_json(path)
    margs = _field(raw, "marginals", "")
    if not isinstance(margs, list) or len(margs) < 2:
        raise InputError("marginals: need a list of at least two measures")
    marginals = [None if m is None else _measure(m, f"marginals[{i}]", cfg) for i, m in enumerate(margs)]
    try:
        payoff = CostSpec.from_json(_field(raw, "payoff", ""), exact=cfg.exact)
    except PayoffError as exc:
        raise InputError(f"payoff: {exc}") from exc
    direction = raw.get("direction")
    if direction not in (None, "max", "min"):
        raise InputError(f"direction: expected max or min, got {direction!r}")
    sec = raw.get("secondary", "on" if default_secondary else "off")
    if sec not in ("on", "off"):
        raise InputError(f"secondary: expected on or off, got {sec!r}")
    grids = raw.get("grids")
    if grids is not None:
        if not isinstance(grids, list) or len(grids) != len(marginals):
            raise InputError("grids: need one entry (list or null) per marginal")
        try:
            grids = [None if g is None else [parse_scalar(v, cfg.exact) for v in g] for g in grids]
        except (ValueError, TypeError) as exc:
            raise InputError(f"grids: {exc}") from exc
    return Problem(marginals, payoff, direction, sec == "on", grids)


# ---------------------------------------------------------------------------
# commands


def _write(cfg: RunConfig, name: str, text: str) -> None:
    cfg.out.mkdir(parents=True, exist_ok=True)
    (cfg.out / name).write_text(text)


def _emit(cfg: RunConfig, name: str, payload: dict) -> None:
    text = json.dumps(payload, indent=2) + "\n"
    _write(cfg, name, text)
    sys.stdout.write(text)


def _cmd_bounds(cfg: RunConfig) -> int:
    prob = _problem(cfg.inputs[0], cfg)
    rep = mot.bounds(prob.marginals, prob.payoff, prob.grids, secondary=prob.secondary, exact=cfg.exact)
    _emit(cfg, "bounds.json", {"mode": cfg.mode, **rep.to_json()})
    return EXIT_OK


def _cmd_structure(cfg: RunConfig) -> int:
    prob = _problem(cfg.inputs[0], cfg, default_secondary=True)
    if len(prob.marginals) != 2 or None in prob.marginals:
        raise InputError("marginals: structure extraction needs exactly two prescribed marginals")
    mu, nu = prob.marginals
    h = min((b - a for a, b in zip(nu.atoms, nu.atoms[1:])), default=0)
    directions = [prob.direction] if prob.direction else ["min", "max"]
    summary, findings = {}, 0
    for d in directions:
        sec = ("max" if d == "min" else "min") if prob.secondary else None
        sol = mot.solve_mot(mu, nu, prob.payoff, d, secondary=sec, exact=cfg.exact)
        st = structure.extract_support(sol.coupling, diag_tol=2 * h, cluster_tol=1.5 * h)
        breaches = structure.check_structure(st, d, tol=2 * h)
        findings += len(breaches)
        _write(cfg, f"structure_{d}.svg", emit_support_svg(st))
        _write(cfg, f"coupling_{d}.csv", coupling_csv(st))
        summary[d] = {
            "value": format_scalar(sol.value),
            "residual_mass": format_scalar(st.residual_mass),
            "branch_mass": {b: format_scalar(st.branch_mass(b)) for b in ("upper", "lower", "diagonal")},
            "breaches": [[format_scalar(v) for v in b] for b in breaches],
            "lower_graph_decreasing_below_antidiagonal": structure.decreasing_lower_flag(st, 2 * h),
        }
    _emit(cfg, "structure.json", {"mode": cfg.mode, "grid_spacing": format_scalar(h), **summary})
    return EXIT_FINDING if findings else EXIT_OK


def _cert_json(cert: mot.DualCertificate, surplus) -> dict:
    return {
        "direction": cert.direction,
        "price": format_scalar(cert.price),
        "min_surplus": format_scalar(surplus),
        "static": [[[format_scalar(a), format_scalar(v)] for a, v in sorted(p.items())] for p in cert.phi],
        "positions": [[[*map(format_scalar, k), format_scalar(v)] for k, v in sorted(h.items())] for h in cert.h],
    }


def _cmd_hedge(cfg: RunConfig) -> int:
    prob = _problem(cfg.inputs[0], cfg)
    direction = prob.direction or "max"
    problem = mot.build_problem(prob.marginals, prob.payoff, direction, prob.grids, cfg.exact)
    sol = mot.solve_problem(problem)
    cert = mot.dual_certificate(problem, sol)
    _emit(cfg, "certificate.json", {"mode": cfg.mode, "value": format_scalar(sol.value),
                                    **_cert_json(cert, mot.verify_certificate(problem, cert))})
    return EXIT_OK


def _read_certificate(path, n_steps: int, cfg: RunConfig) -> mot.DualCertificate:
    raw = _load_json(path)
    direction = _field(raw, "direction", "certificate")
    if direction not in ("super", "sub"):
        raise InputError(f"certificate.direction: expected super or sub, got {direction!r}")
    static, positions = _field(raw, "static", "certificate"), _field(raw, "positions", "certificate")
    if not isinstance(static, list) or len(static) != n_steps:
        raise InputError(f"certificate.static: need {n_steps} lists of [atom, value] pairs")
    if not isinstance(positions, list) or len(positions) != n_steps - 1:
        raise InputError(f"certificate.positions: need {n_steps - 1} lists of [prefix..., position] rows")
    try:
        phi = tuple({parse_scalar(a, cfg.exact): parse_scalar(v, cfg.exact) for a, v in p} for p in static)
        h = tuple({tuple(parse_scalar(v, cfg.exact) for v in row[:-1]): parse_scalar(row[-1], cfg.exact)
                   for row in rows} for rows in positions)
        price = parse_scalar(_field(raw, "price", "certificate"), cfg.exact)
    except (ValueError, TypeError) as exc:
        raise InputError(f"certificate: {exc}") from exc
    return mot.DualCertificate(phi, h, price, direction)


def _cmd_verify(cfg: RunConfig) -> int:
    if len(cfg.inputs) != 2:
        raise InputError("input: verify needs a problem file and a certificate file")
    prob = _problem(cfg.inputs[0], cfg)
    raw_dir = _load_json(cfg.inputs[1]).get("direction")
    direction = "max" if raw_dir == "super" else "min"
    problem = mot.build_problem(prob.marginals, prob.payoff, direction, prob.grids, cfg.exact)
    cert = _read_certificate(cfg.inputs[1], problem.n_steps, cfg)
    surplus = mot.verify_certificate(problem, cert)
    priced = sum(sum(cert.phi[i].get(a, 0) * w for a, w in mu.items())
                 for i, mu in enumerate(problem.marginals) if mu is not None)
    ok = surplus >= (0 if cfg.exact else -cfg.tol)
    price_ok = abs(priced - cert.price) <= (0 if cfg.exact else cfg.tol)
    _emit(cfg, "verify.json", {"mode": cfg.mode, "direction": cert.direction, "min_surplus": format_scalar(surplus),
                               "recomputed_price": format_scalar(priced), "hedge_holds": ok,
                               "price_matches": price_ok})
    return EXIT_OK if ok and price_ok else EXIT_FINDING


def _parse_btp(entry, i: int, cfg: RunConfig) -> btp_mod.BTP:
    where = f"plans[{i}]"
    if isinstance(entry, dict):
        missing = [n for n in btp_mod.NODE_NAMES if n not in entry]
        if missing:
            raise InputError(f"{where}.{missing[0]}: missing")
        vals = [entry[n] for n in btp_mod.NODE_NAMES]
    elif isinstance(entry, list) and len(entry) == 7:
        vals = entry
    else:
        raise InputError(f"{where}: expected 7 node values or an object keyed by {', '.join(btp_mod.NODE_NAMES)}")
    try:
        return btp_mod.make_btp(*(parse_scalar(v, cfg.exact) for v in vals))
    except (ValueError, TypeError) as exc:
        raise InputError(f"{where}: {exc}") from exc


def _cmd_btp_check(cfg: RunConfig) -> int:
    raw = _load_json(cfg.inputs[0])
    if isinstance(raw, dict):
        raw = raw.get("plans")
    if not isinstance(raw, list):
        raise InputError("plans: expected a JSON array of plans")
    plans = [_parse_btp(e, i, cfg) for i, e in enumerate(raw)]
    tol = None if cfg.exact else cfg.tol
    results, verdicts, cases, bad = [], {}, {}, []
    for i, b in enumerate(plans):
        try:
            res = btp_mod.dominance_check(b, tol)
        except btp_mod.LemmaFalsification as exc:
            bad.append({"index": i, "plan": b.to_json(), "cost_left": format_scalar(exc.cost_left),
                        "cost_right": format_scalar(exc.cost_right)})
            continue
        verdicts[res.verdict] = verdicts.get(res.verdict, 0) + 1
        for c in res.matched_cases:
            cases[c] = cases.get(c, 0) + 1
        results.append({"index": i, **res.to_json()})
    _emit(cfg, "btp_check.json", {
        "checked": len(plans), "falsifications": len(bad), "verdicts": verdicts,
        "cases": dict(sorted(cases.items(), key=lambda kv: int(kv[0][1:]))),
        "counterexamples": bad, "results": results,
    })
    return EXIT_FINDING if bad else EXIT_OK


def _asian_one_marginal(cfg: RunConfig) -> int:
    raw = _load_json(cfg.inputs[0])
    nu = _measure(_field(raw, "marginal", ""), "marginal", cfg)
    phi = _phi(_field(raw, "phi", ""), "phi", cfg)
    lo, hi = asian.one_marginal_bounds(nu, phi)
    payload = {"lower": format_scalar(lo), "upper": format_scalar(hi)}
    steps = raw.get("lp_steps")
    if steps is not None:
        if not isinstance(steps, int) or steps < 2:
            raise InputError("lp_steps: must be an integer >= 2")
        lp_lo, lp_hi = asian.one_marginal_lp(nu, phi, steps, exact=cfg.exact)
        payload["lp"] = {"steps": steps, "lower": format_scalar(lp_lo), "upper": format_scalar(lp_hi)}
    _emit(cfg, "one_marginal.json", {"mode": cfg.mode, **payload})
    return EXIT_OK


def _asian_hedge_audit(cfg: RunConfig) -> int:
    raw = _load_json(cfg.inputs[0])
    phi = _phi(_field(raw, "phi", ""), "phi", cfg)
    if "paths" in raw:
        try:
            paths = [asian.DiscretePath.from_rows([[parse_scalar(v, cfg.exact) for v in row] for row in p])
                     for p in raw["paths"]]
        except (ValueError, TypeError) as exc:
            raise InputError(f"paths: {exc}") from exc
    else:
        count = raw.get("count", 1000)
        if not isinstance(count, int) or count < 1:
            raise InputError("count: must be a positive integer")
        rng = np.random.default_rng(cfg.seed)
        paths = [asian.random_path(rng) for _ in range(count)]
    slacks = [asian.superhedge_plan(phi, p)[1] for p in paths]
    worst = min(slacks)
    fails = [i for i, s in enumerate(slacks) if s < (0 if is_exact_value(s) else -cfg.tol)]
    _emit(cfg, "hedge_audit.json", {"mode": cfg.mode, "paths": len(paths), "min_slack": format_scalar(worst),
                                    "failing_paths": fails})
    return EXIT_FINDING if fails else EXIT_OK


def _asian_counterexample(cfg: RunConfig) -> int:
    rep = asian.counterexample_4128()
    _emit(cfg, "counterexample.json", rep.to_json())
    return EXIT_OK


def _asian_conjecture(cfg: RunConfig) -> int:
    raw = _load_json(cfg.inputs[0])
    mu = _measure(_field(raw, "mu", ""), "mu", cfg)
    nu = _measure(_field(raw, "nu", ""), "nu", cfg)
    phi = _phi(raw["phi"], "phi", cfg) if "phi" in raw else None
    if phi is None and "strike" not in raw:
        raise InputError("strike: missing (or give phi)")
    try:
        strike = parse_scalar(raw.get("strike", 0), cfg.exact)
        t1 = parse_scalar(raw.get("t1", 1), cfg.exact)
        horizon = parse_scalar(raw.get("horizon", 2), cfg.exact)
    except ValueError as exc:
        raise InputError(f"strike/t1/horizon: {exc}") from exc
    trials = raw.get("trials", 100)
    if not isinstance(trials, int) or trials < 1:
        raise InputError("trials: must be a positive integer")
    rep = asian.conjecture_harness(mu, nu, strike, trials, cfg.seed, phi=phi, t1=t1, horizon=horizon, tol=cfg.tol)
    _emit(cfg, "conjecture.json", {"mode": cfg.mode, **rep.to_json()})
    return EXIT_FINDING if rep.violations else EXIT_OK


_ASIAN = {
    "one-marginal": _asian_one_marginal,
    "hedge-audit": _asian_hedge_audit,
    "counterexample": _asian_counterexample,
    "conjecture": _asian_conjecture,
}


def _cmd_asian(cfg: RunConfig) -> int:
    if cfg.task not in _ASIAN:
        raise InputError(f"task: expected one of {', '.join(ASIAN_TASKS)}")
    if cfg.task != "counterexample" and not cfg.inputs:
        raise InputError("input: missing input file")
    return _ASIAN[cfg.task](cfg)


_COMMANDS = {
    "bounds": _cmd_bounds,
    "structure": _cmd_structure,
    "hedge": _cmd_hedge,
    "btp-check": _cmd_btp_check,
    "asian-ct": _cmd_asian,
    "verify": _cmd_verify,
}


def run(cfg: RunConfig) -> int:
    if cfg.command != "asian-ct" and not cfg.inputs:
        print("error: input: missing input file", file=sys.stderr)
        return EXIT_INVALID
    try:
        return _COMMANDS[cfg.command](cfg)
    except InputError as exc:
        msg = str(exc)
    except mot.ConvexOrderError as exc:
        msg = f"marginals[{exc.step}], marginals[{exc.step + 1}]: {exc}"
    except (mot.ProblemTooLarge, asian.AsianError, structure.StructureError, PayoffError, MeasureError) as exc:
        msg = f"{cfg.command}: {exc}"
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_INVALID


# ---------------------------------------------------------------------------
# argument parsing


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--mode", choices=("rational", "double"), default="rational")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--grid", type=int, default=200, help="cells per discretized uniform law")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, default=Path("."), help="directory for report files")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="asianmot", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("bounds", parents=[common], help="lower and upper price bounds").add_argument("problem")
    sub.add_parser("structure", parents=[common], help="support geometry of |x+y| optimizers").add_argument("problem")
    sub.add_parser("hedge", parents=[common], help="hedging certificate for one direction").add_argument("problem")
    v = sub.add_parser("verify", parents=[common], help="check a certificate against a problem")
    v.add_argument("problem")
    v.add_argument("certificate")
    sub.add_parser("btp-check", parents=[common], help="dominance check for seven-node plans").add_argument("plans")
    a = sub.add_parser("asian-ct", help="continuous-time Asian option checks")
    tasks = a.add_subparsers(dest="task", required=True)
    for name in ASIAN_TASKS:
        t = tasks.add_parser(name, parents=[common])
        if name != "counterexample":
            t.add_argument("input")
    return parser


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    inputs = [getattr(ns, k) for k in ("problem", "certificate", "plans", "input") if getattr(ns, k, None)]
    return RunConfig(ns.command, inputs, ns.out, ns.mode, ns.tol, ns.seed, ns.grid, getattr(ns, "task", None))


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        cfg = config_from_args(ns)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
