"""Command line: constants | solve | verify | q0-scan | sweep.

Reports are JSON (sorted keys, embedded effective config); profiles and scan
data are CSV with a one-line ``#`` header carrying the config hash.  Exit codes:
0 ok, 1 at least one check failed, 2 invalid input or regime error, 3 solver failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import itertools
import json
import math
import os
import sys
import tempfile
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import constants as C
from .params import (
    ProblemParams,
    RadiiChain,
    RegimeError,
    critical_exponents,
    lambda_p,
)
from .radial import SolverError, build_profile, length_scale, residual
from .verify import CHECK_NAMES, INAPPLICABLE, make_fixture, run_checks, summarize

EXIT_OK, EXIT_FAIL, EXIT_INPUT, EXIT_SOLVER = 0, 1, 2, 3


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass
class RunConfig:
    d: int = 3
    p: Optional[float] = None
    lam: float = 1.0
    u0: float = 1.0
    kind: str = "auto"
    r_inf: Optional[float] = None
    r_bar: Optional[float] = None
    r0: Optional[float] = None
    r_max: Optional[float] = None
    q: Optional[float] = None
    q_over: Optional[float] = None
    q_under: Optional[float] = None
    eps: float = 0.1
    q0: float = 0.5
    r_over: Optional[float] = None
    tol: float = 1e-10
    s2: Optional[float] = None
    checks: list = field(default_factory=lambda: ["all"])
    perturbation: float = 0.0
    n_rows: int = 513
    d_min: float = 1.0
    d_max: float = 16.0
    step: float = 0.01
    d_list: Optional[list] = None
    p_list: Optional[list] = None
    lam_list: Optional[list] = None
    u0_list: Optional[list] = None
    scale_list: Optional[list] = None
    format: str = "json"
    out: Optional[str] = None
    jobs: int = 1

    # output location and worker count do not change results
    _VOLATILE = ("out", "jobs")

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        stable = {k: v for k, v in self.to_dict().items() if k not in self._VOLATILE}
        blob = json.dumps(stable, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def params(self) -> ProblemParams:
        if self.p is None:
            raise RegimeError("--p is required")
        return ProblemParams(self.d, self.p, self.lam)

    def chain(self) -> Optional[RadiiChain]:
        if self.r_inf is None and self.r0 is None:
            return None
        if self.r_inf is None or self.r0 is None:
            raise RegimeError("--r-inf and --r0 must be given together")
        r_bar = self.r_bar if self.r_bar is not None else 0.5 * (self.r_inf + self.r0)
        return RadiiChain(self.r_inf, self.r0, r_bar)

    def window(self) -> C.ExponentWindow:
        return C.ExponentWindow(q=self.q, q_over=self.q_over, q_under=self.q_under, eps=self.eps,
                                q0=self.q0, r_over=self.r_over)


_FIELD_NAMES = {f.name for f in fields(RunConfig)}


def load_config_file(path: str) -> dict:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, dict):
        raise RegimeError("config file must hold a JSON object")
    if "lambda" in data:
        data["lam"] = data.pop("lambda")
    unknown = set(data) - _FIELD_NAMES
    if unknown:
        raise RegimeError(f"unknown config keys: {sorted(unknown)}")
    return data


def effective_config(ns: argparse.Namespace) -> RunConfig:
    """Defaults, then the config file, then explicit flags."""
    cfg = RunConfig()
    if getattr(ns, "config", None):
        cfg = replace(cfg, **load_config_file(ns.config))
    flags = {k: v for k, v in vars(ns).items() if k in _FIELD_NAMES and v is not None}
    return replace(cfg, **flags)


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------


def _clean(obj):
    """Make a structure JSON-safe: non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_atomic(path: Optional[str], text: str) -> None:
    """Write to a temp file in the target directory, then rename over the target."""
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    target = os.path.abspath(path)
    fd, tmp = tempfile.mkstemp(dir=os.path.dirname(target), prefix=".tmp-", suffix=".part")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(header_comment: str, columns: Sequence[str], rows) -> str:
    buf = io.StringIO()
    buf.write("# " + header_comment.replace("\n", " ") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating)) else v)
                    for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------


def _entry(cv: Optional[C.ConstantValue], name: str, regime: str, reason: str = "",
           anchor: str = "") -> dict:
    if cv is None:
        return {"name": name, "value": None, "log10_value": None, "regime": regime,
                "anchor": anchor, "applicable": False, "reason": reason}
    d = cv.to_dict()
    d.update({"name": name, "applicable": True, "reason": ""})
    return d


def constants_report(params: ProblemParams, chain: RadiiChain, window: C.ExponentWindow,
                     s2: Optional[float] = None) -> dict:
    regime = C.p_regime(params)
    app = C.applicability(params)
    d, p = params.d, params.p
    ex = critical_exponents(d)
    w = window.resolve(params) if regime != C.OUTSIDE else window
    out: list[dict] = []

    def add(name: str, column: Optional[str], fn, anchor: str):
        if column is not None and not app[column].applicable:
            out.append(_entry(None, name, regime, app[column].reason, anchor))
            return
        try:
            out.append(_entry(fn(), name, regime, anchor=anchor))
        except RegimeError as exc:
            out.append(_entry(None, name, regime, f"regime: {exc}", anchor))

    def scalar(name: str, value: float, anchor: str) -> C.ConstantValue:
        return C.ConstantValue(name, math.log(value), "any", anchor)

    add("sobolev_constant", None, lambda: scalar("S_2", C.sobolev_constant(d, s2), "Sobolev constant S_2"),
        "Sobolev constant S_2")
    add("lambda_p", None, lambda: scalar("Lambda_p", lambda_p(p, params.lam), "energy coefficient"),
        "energy coefficient Lambda_p")
    add("q0_threshold", None, lambda: scalar("q0", C.q0_threshold(d, w.eps), "lower exponent threshold"),
        "threshold exponent of the lower estimates")
    add("caccioppoli_rhs", None,
        lambda: scalar("caccioppoli", C.caccioppoli_rhs(d, chain.r0, chain.r_inf), "Caccioppoli bound"),
        "quantitative Caccioppoli estimate")
    add("upper_I_inf", "upper",
        lambda: C.upper_I_inf(params, chain, C.nudge_q(d, p, w.q), s2),
        "local upper estimate constant")
    add("lower_I", "lower", lambda: C.lower_I(d, w.q_under, w.eps, chain.r0, chain.r_inf, s2),
        "local lower estimate constant")
    add("rev_holder_I", "lower_pc",
        lambda: C.rev_holder_I(params, w.q_over, min(C.q0_threshold(d, math.e), w.q_over),
                               chain.r_bar, chain.r0, s2),
        "two-exponent reverse Holder constant")

    def harnack():
        if regime in (C.CRITICAL, C.SUPERCRITICAL):
            raise RegimeError("H_p[u] depends on norms of u; use the verify command")
        return C.harnack_constant(params, chain, window, None, s2).constant

    add("harnack", "harnack", harnack, "Harnack constant")

    def absolute(side: str):
        b = C.absolute_bounds(params, chain, s2)
        cv = getattr(b, side)
        if cv is None:
            raise RegimeError(f"no absolute {side} bound in this regime")
        return cv

    if app["absolute"].applicable:
        side = "upper" if app["absolute"].entry == "upper" else "lower"
        add(f"absolute_{side}", "absolute", lambda: absolute(side), "local absolute bound")
        other = "lower" if side == "upper" else "upper"
        out.append(_entry(None, f"absolute_{other}", regime, "No", "local absolute bound"))
    else:
        for side in ("upper", "lower"):
            out.append(_entry(None, f"absolute_{side}", regime, app["absolute"].reason,
                              "local absolute bound"))
    if regime == C.SUBCRITICAL:
        add("gradient_K_absolute", "gradient", lambda: C.gradient_K_absolute(params, chain, s2),
            "absolute gradient bound")
    else:
        reason = app["gradient"].reason if not app["gradient"].applicable else "No"
        out.append(_entry(None, "gradient_K_absolute", regime, reason, "absolute gradient bound"))
    return {
        "regime": regime,
        "critical_exponents": {"p_c": ex.p_c, "p_s": ex.p_s, "two_star": ex.two_star},
        "chain": chain.as_dict(),
        "window": w.as_dict(),
        "table_row": {k: v.entry for k, v in app.items()},
        "constants": sorted(out, key=lambda e: e["name"]),
    }


def cmd_constants(cfg: RunConfig) -> tuple[str, int]:
    params = cfg.params()
    chain = cfg.chain() or RadiiChain.from_scale(1.0)
    body = constants_report(params, chain, cfg.window(), cfg.s2)
    return dump_json({"config": cfg.to_dict(), "config_hash": cfg.hash(), "version": __version__,
                      **body}), EXIT_OK


# ---------------------------------------------------------------------------
# solve
# ---------------------------------------------------------------------------


def cmd_solve(cfg: RunConfig) -> tuple[str, int]:
    params = cfg.params()
    r_max = cfg.r_max
    if r_max is None and params.p >= critical_exponents(params.d).p_s and cfg.kind != "singular":
        r_max = 10.0 * length_scale(params, cfg.u0)
    prof = build_profile(params, cfg.u0, cfg.kind, r_max, cfg.tol)
    r_end = prof.validity_radius
    note = prof.note
    if r_max is not None and r_max < r_end:
        r_end = r_max
    elif r_max is not None and r_max > r_end:
        note = (note + "; " if note else "") + f"truncated at the positivity radius {r_end!r}"
    lo = 1e-3 * r_end if prof.singular else 0.0
    r = np.linspace(lo, r_end, cfg.n_rows)
    u, du, _ = prof.evaluate(r)
    res_r = r[:-1] if math.isfinite(prof.positivity_radius) and r_end >= prof.positivity_radius else r
    res = residual(prof, res_r, relative=prof.singular)
    header = (f"config_hash={cfg.hash()} kind={prof.kind} d={params.d} p={params.p!r} lambda={params.lam!r} "
              f"u0={cfg.u0!r} residual={res:.3e} positivity_radius={prof.positivity_radius!r}"
              + (f" note={note}" if note else ""))
    return csv_text(header, ["r", "u", "du_dr"], zip(r, u, du)), EXIT_OK


# ---------------------------------------------------------------------------
# verify / sweep
# ---------------------------------------------------------------------------


def default_fixture_specs(cfg: RunConfig) -> list[dict]:
    """One spec per fixture: the configured problem, or the default set if --p is absent."""
    base = {"kind": cfg.kind, "perturbation": cfg.perturbation, "tol": cfg.tol, "scale": 1.0}
    if cfg.p is not None:
        return [dict(base, d=cfg.d, p=cfg.p, lam=cfg.lam, u0=cfg.u0,
                     chain=None if cfg.chain() is None else cfg.chain().as_dict())]
    specs = [dict(base, d=3, p=p, lam=1.0, u0=1.0, chain=None) for p in (0.0, 0.5, 1.0, 2.0, 4.0)]
    specs.append(dict(base, d=5, p=2.0, lam=1.0, u0=1.0, chain=None, kind="singular"))
    return specs


def acceptance_grid() -> dict[int, list[float]]:
    """Per-dimension p values: sublinear, linear, subcritical where p=2 < p_c, one supercritical."""
    return {3: [0.0, 0.5, 1.0, 2.0, 4.0], 4: [0.0, 0.5, 1.0, 2.5], 5: [0.0, 0.5, 1.0, 2.0]}


def sweep_specs(cfg: RunConfig) -> list[dict]:
    lams = cfg.lam_list or [0.5, 1.0, 4.0]
    u0s = cfg.u0_list or [1.0, 5.0]
    scales = cfg.scale_list or [1.0]
    if cfg.d_list is None and cfg.p_list is None:
        dp = [(d, p) for d, ps in acceptance_grid().items() for p in ps]
    else:
        ds = cfg.d_list or [3, 4, 5]
        ps = cfg.p_list or [0.0, 0.5, 1.0, 2.0]
        dp = list(itertools.product(ds, ps))
    specs = []
    for (d, p), lam, u0, sc in itertools.product(dp, lams, u0s, scales):
        specs.append({"d": int(d), "p": float(p), "lam": float(lam), "u0": float(u0), "scale": float(sc),
                      "kind": cfg.kind, "perturbation": cfg.perturbation, "tol": cfg.tol, "chain": None})
    return specs


def run_fixture(spec: dict, checks: Sequence[str], window: C.ExponentWindow,
                s2: Optional[float]) -> dict:
    """Worker: build one fixture and run the selected checks.  Never raises."""
    try:
        params = ProblemParams(spec["d"], spec["p"], spec["lam"])
        chain = None if spec.get("chain") is None else RadiiChain(**spec["chain"])
        fx = make_fixture(params, spec["u0"], spec["kind"], chain, spec["tol"], spec["perturbation"],
                          spec.get("scale", 1.0))
        results = run_checks(fx, checks, window, s2)
        return {"spec": spec, "fixture": fx.name, "profile": fx.profile.describe(),
                "chain": fx.chain.as_dict(), "results": [r.to_dict() for r in results], "error": None,
                "summary": summarize(results)}
    except (RegimeError, SolverError, ValueError) as exc:
        return {"spec": spec, "fixture": None, "profile": None, "chain": None, "results": [],
                "error": f"{type(exc).__name__}: {exc}", "summary": None}


def _run_many(specs: list[dict], cfg: RunConfig) -> list[dict]:
    window = cfg.window()
    args = [(s, cfg.checks, window, cfg.s2) for s in specs]
    if cfg.jobs <= 1 or len(specs) <= 1:
        return [run_fixture(*a) for a in args]
    with ProcessPoolExecutor(max_workers=cfg.jobs) as ex:
        return list(ex.map(run_fixture, *zip(*args)))


def _aggregate(points: list[dict]) -> dict:
    results = [r for pt in points for r in pt["results"]]
    counts = {"pass": 0, "fail": 0, "inapplicable": 0, "inconclusive": 0}
    by_check: dict[str, dict] = {}
    worst = None
    for r in results:
        counts[r["status"]] += 1
        base = r["name"].split("[")[0]
        e = by_check.setdefault(base, {"pass": 0, "fail": 0, "inapplicable": 0, "inconclusive": 0,
                                       "worst_log10_margin": None, "worst_fixture": None})
        e[r["status"]] += 1
        lm = r["log10_margin"]
        if lm is not None and r["status"] != INAPPLICABLE:
            if e["worst_log10_margin"] is None or lm < e["worst_log10_margin"]:
                e["worst_log10_margin"], e["worst_fixture"] = lm, r["fixture"]
            if worst is None or lm < worst:
                worst = lm
    errors = [{"spec": pt["spec"], "error": pt["error"]} for pt in points if pt["error"]]
    return {**counts, "errors": len(errors), "error_details": errors, "worst_log10_margin": worst,
            "worst_margin": None if worst is None or worst > 300 else 10.0**worst,
            "by_check": by_check, "fixtures": len(points)}


def _exit_code(summary: dict) -> int:
    if summary["fail"] or summary["errors"]:
        return EXIT_FAIL
    return EXIT_OK


def _verify_like(cfg: RunConfig, specs: list[dict], command: str) -> tuple[str, int]:
    unknown = set(cfg.checks) - set(CHECK_NAMES) - {"all"}
    if unknown:
        raise RegimeError(f"unknown checks: {sorted(unknown)}")
    points = _run_many(specs, cfg)
    summary = _aggregate(points)
    results = [r for pt in points for r in pt["results"]]
    if cfg.format == "csv":
        cols = ["fixture", "name", "status", "lhs", "rhs", "margin", "log10_margin", "regime", "reason"]
        rows = [[r[c] for c in cols] for r in results]
        text = csv_text(f"config_hash={cfg.hash()} command={command} fail={summary['fail']} "
                        f"errors={summary['errors']}", cols, rows)
    else:
        text = dump_json({"config": cfg.to_dict(), "config_hash": cfg.hash(), "version": __version__,
                          "command": command, "fixtures": [{k: pt[k] for k in
                                                            ("fixture", "spec", "profile", "chain", "error")}
                                                           for pt in points],
                          "results": results, "summary": summary})
    return text, _exit_code(summary)


def cmd_verify(cfg: RunConfig) -> tuple[str, int]:
    return _verify_like(cfg, default_fixture_specs(cfg), "verify")


def cmd_sweep(cfg: RunConfig) -> tuple[str, int]:
    return _verify_like(cfg, sweep_specs(cfg), "sweep")


# ---------------------------------------------------------------------------
# q0-scan
# ---------------------------------------------------------------------------


def q0_scan(eps: float, d_min: float, d_max: float, step: float) -> tuple[np.ndarray, np.ndarray]:
    if not step > 0.0:
        raise RegimeError("step must be positive")
    if not d_max > d_min:
        raise RegimeError("need d_max > d_min")
    n = int(math.floor((d_max - d_min) / step + 1e-9)) + 1
    ds = d_min + step * np.arange(n)
    qs = np.array([C.q0_threshold(float(x), eps) for x in ds])
    return ds, qs


def cmd_q0_scan(cfg: RunConfig) -> tuple[str, int]:
    ds, qs = q0_scan(cfg.eps, cfg.d_min, cfg.d_max, cfg.step)
    i = int(np.argmin(qs))
    if cfg.format == "json":
        return dump_json({"config": cfg.to_dict(), "config_hash": cfg.hash(),
                          "rows": [{"d": float(a), "q0": float(b)} for a, b in zip(ds, qs)],
                          "minimizer": {"d": float(ds[i]), "q0": float(qs[i])}}), EXIT_OK
    header = f"config_hash={cfg.hash()} eps={cfg.eps!r} minimizer_d={float(ds[i])!r} minimum_q0={float(qs[i])!r}"
    return csv_text(header, ["d", "q0"], zip(ds, qs)), EXIT_OK


# ---------------------------------------------------------------------------
# argparse
# ---------------------------------------------------------------------------


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("problem")
    g.add_argument("--config", help="JSON file with RunConfig fields; flags override it")
    g.add_argument("--d", type=int)
    g.add_argument("--p", type=float)
    g.add_argument("--lambda", dest="lam", type=float)
    g.add_argument("--u0", type=float)
    g.add_argument("--kind", choices=["auto", "closed", "shooting", "singular"])
    g.add_argument("--r-inf", dest="r_inf", type=float)
    g.add_argument("--r-bar", dest="r_bar", type=float)
    g.add_argument("--r0", type=float)
    g.add_argument("--q", type=float)
    g.add_argument("--q-over", dest="q_over", type=float)
    g.add_argument("--q-under", dest="q_under", type=float)
    g.add_argument("--q0", type=float, help="exponent of the second-form upper bound")
    g.add_argument("--r-over", dest="r_over", type=float)
    g.add_argument("--eps", type=float)
    g.add_argument("--tol", type=float)
    g.add_argument("--s2", type=float, help="override the Sobolev constant")
    g.add_argument("--out", help="output path (default stdout)")
    g.add_argument("--format", choices=["json", "csv"])
    g.add_argument("--jobs", type=int)
    g.add_argument("--inject-perturbation", dest="perturbation", type=float,
                   help="multiply the profile by (1+x) before checking")

    ap = argparse.ArgumentParser(prog="localbounds",
                                 description="Explicit local bounds for -Lap u = lam u^p: constants and checks")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="evaluate the constants for one problem")
    s = sub.add_parser("solve", parents=[common], help="radial solution as CSV (r, u, du_dr)")
    s.add_argument("--r-max", dest="r_max", type=float)
    s.add_argument("--rows", dest="n_rows", type=int)
    v = sub.add_parser("verify", parents=[common], help="run checks on fixtures")
    v.add_argument("--checks", type=_names, help=f"comma list from: all,{','.join(CHECK_NAMES)}")
    q = sub.add_parser("q0-scan", parents=[common], help="q0(d, eps) over a continuous d range")
    q.add_argument("--d-min", dest="d_min", type=float)
    q.add_argument("--d-max", dest="d_max", type=float)
    q.add_argument("--step", type=float)
    w = sub.add_parser("sweep", parents=[common], help="checks over a Cartesian grid")
    w.add_argument("--checks", type=_names)
    w.add_argument("--d-list", dest="d_list", type=_floats)
    w.add_argument("--p-list", dest="p_list", type=_floats)
    w.add_argument("--lambda-list", dest="lam_list", type=_floats)
    w.add_argument("--u0-list", dest="u0_list", type=_floats)
    w.add_argument("--scale-list", dest="scale_list", type=_floats)
    return ap


COMMANDS = {
    "constants": cmd_constants,
    "solve": cmd_solve,
    "verify": cmd_verify,
    "q0-scan": cmd_q0_scan,
    "sweep": cmd_sweep,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    ns = build_parser().parse_args(argv)
    try:
        cfg = effective_config(ns)
        if ns.command in ("solve",) and ns.format is None:
            cfg = replace(cfg, format="csv")
        if ns.command == "q0-scan" and ns.format is None and getattr(ns, "config", None) is None:
            cfg = replace(cfg, format="csv")
        if cfg.d_list is not None:
            cfg = replace(cfg, d_list=[int(x) for x in cfg.d_list])
        text, code = COMMANDS[ns.command](cfg)
    except SolverError as exc:
        print(f"localbounds: solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (RegimeError, ValueError, OSError) as exc:
        print(f"localbounds: {exc}", file=sys.stderr)
        return EXIT_INPUT
    write_atomic(cfg.out, text)
    if code != EXIT_OK:
        print(f"localbounds: {ns.command} finished with failures (exit {code})", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
