"""Command-line front end.

Exit codes: 0 success, 1 a reproduction suite reported FAIL, 2 invalid
input or configuration, 3 numerical failure or I/O error.
"""
from __future__ import annotations

import argparse
import csv
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Any, Callable, Sequence

import numpy as np

from . import charge, exact, oracle, rg, strings, strip, suites
from .config import ConfigError, load_config, parse_float_list, parse_int_list, parse_v_shells
from .errors import NumericalFailure
from .lattice import InteractionSpec, TorusLattice
from .lognum import LogNumber
from .parallel import thread_cap
from .report import emit_report

EXIT_OK, EXIT_FAIL, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2, 3
DEFAULT_V_SHELLS = ((2, 1.0),)
RG_CHECKS = ("unity", "decay", "poisson", "localization", "rotation")


class _ArgError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _ArgError(f"{self.prog}: error: {message}")


def _bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(options):
    def conv(text):
        if text not in options:
            raise ValueError(f"{text!r} is not one of {', '.join(options)}")
        return text
    return conv


def _csv_choices(options):
    def conv(text):
        items = [s.strip() for s in str(text).split(",") if s.strip()]
        bad = [s for s in items if s not in options]
        if bad or not items:
            raise ValueError(f"checks must be drawn from {', '.join(options)}")
        return items
    return conv


class _Spec:
    """Option registry: records defaults and converters so config values can be typed."""

    def __init__(self, parser: argparse.ArgumentParser):
        self.parser = parser
        self.defaults: dict[str, Any] = {}
        self.types: dict[str, Callable[[str], Any]] = {}
        self.names: dict[str, str] = {}

    def add(self, *flags, dest: str, default=None, type: Callable = str, flag: bool = False, **kw):
        self.defaults[dest] = default
        self.types[dest] = _bool if flag else type
        self.names[flags[0].lstrip("-").replace("-", "_").lower()] = dest
        if flag:
            self.parser.add_argument(*flags, dest=dest, action="store_true", default=argparse.SUPPRESS, **kw)
        else:
            self.parser.add_argument(*flags, dest=dest, type=_wrap(type), default=argparse.SUPPRESS, **kw)


def _wrap(fn):
    def conv(text):
        try:
            return fn(text)
        except (ValueError, ConfigError) as exc:
            raise argparse.ArgumentTypeError(str(exc)) from None
    conv.__name__ = getattr(fn, "__name__", "value")
    return conv


def _add_common(reg: _Spec, fmt: str):
    reg.parser.add_argument("--config", dest="config", default=None, help="INI experiment file")
    reg.add("--output", dest="output", help="write the report here instead of stdout")
    reg.names["path"] = "output"
    reg.add("--format", dest="format", default=fmt, type=_choice(("json", "csv")))


def _add_model(reg: _Spec):
    reg.add("--J", dest="j_coupling", default=1.0, type=float)
    reg.add("--lambda", dest="lam", default=0.0, type=float)
    reg.add("--v-shells", dest="v_shells", default=DEFAULT_V_SHELLS, type=parse_v_shells,
            help="comma list of r2:v entries")


def _build() -> tuple[argparse.ArgumentParser, dict[str, _Spec]]:
    top = _Parser(prog="charge-meter", description="Finite-size central charge toolkit.")
    sub = top.add_subparsers(dest="command", required=True, parser_class=_Parser)
    regs: dict[str, _Spec] = {}

    p = sub.add_parser("exact", help="boundary sector partition functions")
    r = regs["exact"] = _Spec(p)
    _add_common(r, "json")
    r.add("--ell", dest="ell", default=4, type=int)
    r.add("--L", dest="big_l", default=4, type=int)
    r.add("--t", dest="t", type=float)
    r.add("--beta", dest="beta", type=float)
    r.add("--J", dest="j_coupling", default=1.0, type=float)
    r.add("--sector", dest="sector", default="combined", type=_choice(("mm", "mp", "pm", "pp", "combined")))
    r.add("--form", dest="form", default="product", type=_choice(("product", "ff", "pfaffian")))

    p = sub.add_parser("oracle", help="enumeration cross-checks")
    r = regs["oracle"] = _Spec(p)
    _add_common(r, "json")
    r.add("--ell", dest="ell", default=2, type=int)
    r.add("--L", dest="big_l", default=2, type=int)
    r.add("--t", dest="t", type=float)
    r.add("--couplings-file", dest="couplings_file", help="CSV with columns bond_index,t_b")
    r.add("--check", dest="check", default="signs", type=_choice(("signs", "combine", "lemma1-free")))

    p = sub.add_parser("lemma1", help="sector inequalities with interactions")
    r = regs["lemma1"] = _Spec(p)
    _add_common(r, "csv")
    r.add("--ell", dest="ell", default=4, type=int)
    r.add("--L", dest="big_l", default=4, type=int)
    _add_model(r)
    r.add("--beta-grid", dest="beta_grid", default=[0.2, 0.44, 0.7], type=parse_float_list)
    r.add("--convention", dest="convention", default="split", type=_choice(tuple(strings.CONVENTIONS)))
    r.add("--method", dest="method", default="auto", type=_choice(("auto", "strings", "twisted")))
    r.add("--no-winding", dest="no_winding", default=False, flag=True, help="forbid strings that wind the torus")

    p = sub.add_parser("strip", help="transfer-matrix strip free energies")
    r = regs["strip"] = _Spec(p)
    _add_common(r, "csv")
    r.add("--ell-list", dest="ell_list", default=[8, 10, 12], type=parse_int_list)
    r.add("--beta", dest="beta", type=float)
    r.add("--auto-critical", dest="auto_critical", default=False, flag=True)
    _add_model(r)
    r.add("--tol", dest="tol", default=1e-13, type=float)

    p = sub.add_parser("charge", help="central charge estimates")
    r = regs["charge"] = _Spec(p)
    _add_common(r, "json")
    r.add("--mode", dest="mode", default="analytic", type=_choice(("analytic", "strip")))
    r.add("--ell-list", dest="ell_list", default=[64, 128, 256, 512], type=parse_int_list)
    _add_model(r)
    r.add("--beta", dest="beta", type=float, help="strip mode: inverse temperature (default: critical)")
    r.add("--extrapolation-order", dest="order", default=1, type=int)
    r.add("--csv", dest="csv", help="also write the per-width table here")

    p = sub.add_parser("rg-check", help="scale decomposition checks")
    r = regs["rg-check"] = _Spec(p)
    _add_common(r, "json")
    r.add("--ell", dest="ell", default=256, type=int)
    r.add("--L", dest="big_l", default=256, type=int)
    r.add("--h-range", dest="h_range", default=[-1, -2, -3, -4], type=parse_int_list)
    r.add("--checks", dest="checks", default=list(RG_CHECKS), type=_csv_choices(RG_CHECKS))

    p = sub.add_parser("reproduce", help="run acceptance suites")
    r = regs["reproduce"] = _Spec(p)
    _add_common(r, "json")
    r.add("--suite", dest="suite", default="all", type=_choice(tuple(suites.SUITES) + ("all",)))
    r.add("--lambda", dest="lambdas", type=parse_float_list, help="theorem1: interaction strengths")
    return top, regs


SECTION_KEYS = {"ell", "l", "ell_list", "j", "lambda", "v_shells", "path", "format"}


def _resolve(ns: argparse.Namespace, reg: _Spec) -> dict[str, Any]:
    given = {k: v for k, v in vars(ns).items() if k not in ("command", "config")}
    out = dict(reg.defaults)
    if ns.config:
        cfg = load_config(ns.config, set(reg.names) - SECTION_KEYS)
        raw = {**cfg.lattice, **cfg.model, **cfg.output, **cfg.run}
        for key, text in raw.items():
            dest = reg.names.get(key)
            if dest is None:
                raise ConfigError(f"key {key!r} does not apply to this subcommand")
            try:
                out[dest] = reg.types[dest](text)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {exc}") from None
    out.update(given)
    return out


def _spec(o) -> InteractionSpec:
    return InteractionSpec(o["j_coupling"], o["lam"], tuple(o["v_shells"]) if o["lam"] else ())


def _lognum_json(x: LogNumber) -> dict:
    return {"sign": x.sign, "log_abs": x.log_abs, "log10_abs": x.log10_abs}


def _write(o, payload, columns=None, stream=None):
    emit_report(payload, o["format"] if columns else "json", o.get("output"), columns,
                stream=stream or sys.stdout)


def cmd_exact(o) -> int:
    lat = TorusLattice(o["ell"], o["big_l"])
    if (o["t"] is None) == (o["beta"] is None):
        raise ValueError("give exactly one of --t or --beta")
    t = o["t"] if o["t"] is not None else math.tanh(o["beta"] * o["j_coupling"])
    if not 0 < t < 1:
        raise ValueError("t must lie in (0, 1)")
    names = exact.SECTOR_NAMES if o["sector"] == "combined" else (o["sector"],)
    form = o["form"]
    if form == "ff" and abs(t - exact.T_CRITICAL) > 1e-15:
        raise ValueError("the cosh/sinh form exists only at t = sqrt(2) - 1")

    def one(name):
        if form == "product" or (form == "ff" and name == "pp"):
            return exact.sector_partition_uniform(lat, t, name)
        if form == "ff":
            return exact.critical_sector_ff(lat, name)
        return exact.kasteleyn_pfaffian(lat, 1.0, math.atanh(t), name)

    vals = {n: one(n) for n in names}
    if o["sector"] == "combined":
        q = exact.SectorQuartet(*(vals[n] for n in ("mm", "mp", "pm", "pp")))
        val = exact.combine_sectors(q)
    else:
        val = vals[o["sector"]]
    payload = {"ell": lat.ell, "L": lat.big_l, "t": t, "sector": o["sector"], "form": form}
    payload.update(_lognum_json(val))
    _write(o, payload)
    return EXIT_OK


def _read_couplings(path: str, n_bonds: int) -> np.ndarray:
    t = np.full(n_bonds, np.nan)
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or {"bond_index", "t_b"} - set(reader.fieldnames):
            raise ValueError("couplings file needs columns bond_index,t_b")
        for row in reader:
            try:
                b, val = int(row["bond_index"]), float(row["t_b"])
            except ValueError:
                raise ValueError(f"bad couplings row {row}") from None
            if not 0 <= b < n_bonds:
                raise ValueError(f"bond index {b} out of range")
            t[b] = val
    if np.isnan(t).any():
        raise ValueError("couplings file must list every bond")
    return t


def cmd_oracle(o) -> int:
    lat = TorusLattice(o["ell"], o["big_l"])
    if (o["t"] is None) == (o["couplings_file"] is None):
        raise ValueError("give exactly one of --t or --couplings-file")
    if lat.n_sites > oracle.MAX_CYCLE_SITES:
        raise ValueError(f"cycle-space enumeration is limited to {oracle.MAX_CYCLE_SITES} sites")
    t_map = np.full(lat.n_bonds, o["t"]) if o["t"] is not None else _read_couplings(o["couplings_file"], lat.n_bonds)
    payload: dict[str, Any] = {"ell": lat.ell, "L": lat.big_l, "check": o["check"]}
    if o["check"] == "signs":
        chk = oracle.verify_sign_table(lat, t_map)
        payload.update(residuals=chk.residuals, max_residual=chk.max_residual,
                       failing_cells=[list(c) for c in chk.failing_cells], ok=chk.ok)
    elif o["check"] == "combine":
        sums = oracle.cycle_space_sector_sums(lat, t_map)
        pf = {n: exact.grassmann_pfaffian(lat, t_map, n) for n in exact.SECTOR_NAMES}
        z = exact.combine_sectors(exact.SectorQuartet(pf["mm"], pf["mp"], pf["pm"], pf["pp"]))
        ref = sums.total()
        err = abs(math.expm1(z.log_abs - ref.log_abs)) if z.sign == ref.sign else math.inf
        payload.update(combined=_lognum_json(z), enumerated=_lognum_json(ref), rel_error=err, ok=err < 1e-10)
    else:
        ineq = oracle.lambda0_inequalities(lat, t_map)
        payload.update(ratio=ineq.ratio, lower_margin=ineq.lower_margin, upper_margin=ineq.upper_margin,
                       sumpos=ineq.sumpos, ok=ineq.ok)
    _write(o, payload)
    return EXIT_OK


LEMMA1_COLUMNS = ("beta", "Z", "Zmm", "Zmp", "Zpm", "ratio", "sumpos_margin", "verdicts")


def cmd_lemma1(o) -> int:
    lat = TorusLattice(o["ell"], o["big_l"])
    spec = _spec(o)
    rows = []
    for beta in o["beta_grid"]:
        rep = strings.lemma1_check(lat, spec, beta, o["convention"], method=o["method"],
                                   allow_winding=not o["no_winding"],
                                   check=lat.n_sites <= oracle.MAX_BRUTE_SITES)
        rows.append({"beta": float(beta), "Z": rep.z.to_float(), "Zmm": rep.sectors.mm.to_float(),
                     "Zmp": rep.sectors.mp.to_float(), "Zpm": rep.sectors.pm.to_float(),
                     "ratio": rep.ratio, "sumpos_margin": rep.sumpos_margin, "verdicts": rep.verdicts})
    if o["format"] == "json":
        _write(o, {"convention": o["convention"], "rows": rows})
    else:
        _write(o, rows, LEMMA1_COLUMNS)
    return EXIT_OK


def _critical_beta(spec: InteractionSpec, ells: Sequence[int], locate_free: bool = False) -> tuple[float, list]:
    """Critical point from the last two width pairs; the exact value for the free model unless ``locate_free``."""
    if not spec.lam and not locate_free:
        return exact.BETA_CRITICAL, []
    if len(ells) < 2:
        raise ValueError("locating the critical point needs at least two widths")
    pairs = list(zip(ells, ells[1:]))[-2:]
    bracket = (0.6 * exact.BETA_CRITICAL, 1.05 * exact.BETA_CRITICAL)
    crossings = [(p, strip.locate_beta_c(spec, p, bracket, tol=1e-10)) for p in pairs]
    return charge.combine_crossings(crossings), crossings


STRIP_COLUMNS = ("ell", "beta", "f", "xi", "iterations")


def cmd_strip(o) -> int:
    ells = sorted(o["ell_list"])
    spec = _spec(o)
    if o["auto_critical"] == (o["beta"] is not None):
        raise ValueError("give exactly one of --beta or --auto-critical")
    if o["auto_critical"]:
        beta, _ = _critical_beta(spec, ells, locate_free=True)
    else:
        beta = o["beta"]

    def row(ell):
        sd = strip.dominant_pair(strip.TransferOperator(ell, beta, spec), tol=o["tol"])
        return {"ell": ell, "beta": beta, "f": sd.log_lambda1 / ell, "xi": sd.xi, "iterations": sd.iterations}

    with ThreadPoolExecutor(max_workers=thread_cap(len(ells))) as pool:
        rows = list(pool.map(row, ells))
    if o["format"] == "json":
        _write(o, {"rows": rows})
    else:
        _write(o, rows, STRIP_COLUMNS)
    return EXIT_OK


CHARGE_COLUMNS = ("ell", "f_or_delta", "c_pairwise", "c_extrapolated")


def cmd_charge(o) -> int:
    ells = [int(n) for n in o["ell_list"]]
    order = o["order"]
    if sorted(set(ells)) != ells:
        raise ValueError("--ell-list must be strictly increasing")
    if o["mode"] == "analytic":
        if o["lam"]:
            raise ValueError("analytic mode is the free model; use --mode strip for lambda > 0")
        vals = [float(v) for v in charge.delta_ell(np.array(ells))]
        pair = [6.0 / math.pi * v for v in vals]
        est = charge.extrapolate(ells, pair, order, kind="c")
        run_c = [charge.extrapolate(ells[:i + 1], pair[:i + 1], order, kind="c").c_hat if i >= order else None
                 for i in range(len(ells))]
        beta_used = exact.BETA_CRITICAL
    else:
        spec = _spec(o)
        if o["beta"] is not None:
            beta_used = o["beta"]
        else:
            beta_used, _ = _critical_beta(spec, ells)
        with ThreadPoolExecutor(max_workers=thread_cap(len(ells))) as pool:
            vals = list(pool.map(lambda n: strip.strip_free_energy(n, beta_used, spec), ells))
        est = charge.extrapolate(ells, vals, order, kind="f")
        pair = [None] + [charge.c_pairwise((a, fa), (b, fb))
                         for a, b, fa, fb in zip(ells, ells[1:], vals, vals[1:])]
        run_c = [charge.extrapolate(ells[:i + 1], vals[:i + 1], order).c_hat if i >= order + 1 else None
                 for i in range(len(ells))]
    rows = [{"ell": n, "f_or_delta": v, "c_pairwise": p, "c_extrapolated": c}
            for n, v, p, c in zip(ells, vals, pair, run_c)]
    summary = {"mode": o["mode"], "c_hat": est.c_hat, "spread": est.spread, "beta_c_used": beta_used,
               "extrapolation_order": order}
    if o.get("csv"):
        emit_report(rows, "csv", o["csv"], CHARGE_COLUMNS)
    if o["format"] == "csv":
        _write(o, rows, CHARGE_COLUMNS)
    else:
        _write(o, summary)
    return EXIT_OK


def cmd_rg_check(o) -> int:
    ell, big_l = o["ell"], o["big_l"]
    for n in (ell, big_l):
        if n < 4 or n % 2:
            raise ValueError("--ell and --L must be even and >= 4")
    hs = sorted(set(o["h_range"]), reverse=True)
    if not hs or hs[0] > 0:
        raise ValueError("--h-range entries must be <= 0")
    h_ir = rg.infrared_scale(min(ell, big_l))
    payload: dict[str, Any] = {"ell": ell, "L": big_l, "h_range": hs, "infrared_scale": h_ir}
    checks = o["checks"]
    if "unity" in checks:
        k1 = 2 * np.pi * (np.arange(ell) + 0.5) / ell
        k2 = 2 * np.pi * (np.arange(big_l) + 0.5) / big_l
        K1, K2 = np.meshgrid(k1, k2, indexing="ij")
        total = sum(rg.cutoff(h, K1, K2) for h in range(h_ir, 1))
        payload["unity_error"] = float(np.max(np.abs(total - 1)))
    if "rotation" in checks:
        u = rg.critical_mode_rotation()
        payload["unitarity_error"] = float(np.max(np.abs(u @ u.conj().T - np.eye(4))))
    if "decay" in checks:
        norms = rg.scale_sup_norms(ell, big_l, hs)
        payload["sup_norms"] = norms
        payload["decay_profile"] = [rg.decay_profile(ell, big_l, h) for h in hs]
        if len(hs) >= 2:
            payload["scale_law_slope"] = rg.linear_fit(hs, np.log2(norms))[0]
        slope, r2 = rg.chi_decay_fit(max(ell, 16))
        payload.update(chi_decay_slope=slope, chi_decay_r2=r2)
    if "poisson" in checks:
        payload["poisson_defect"] = [rg.poisson_image_defect(h, ell, big_l) for h in hs]
    if "localization" in checks:
        if ell < 32:
            raise ValueError("localization fits need --ell >= 32")
        payload["localization_slopes"] = rg.localization_slopes(ell)
    _write(o, payload)
    return EXIT_OK


def cmd_reproduce(o) -> int:
    names = list(suites.SUITES) if o["suite"] == "all" else [o["suite"]]
    results = []
    for name in names:
        kw = {}
        if name == "theorem1" and o.get("lambdas"):
            lams = o["lambdas"]
            if any(not 0 < x for x in lams):
                raise ValueError("--lambda values must be positive")
            kw["lambdas"] = tuple(lams)
        res = suites.run_suite(name, **kw)
        print(res.line(), file=sys.stderr)
        results.append(res)
    passed = all(r.passed for r in results)
    payload = {"verdict": "PASS" if passed else "FAIL", "suites": [r.as_dict() for r in results]}
    _write(o, payload)
    return EXIT_OK if passed else EXIT_FAIL


COMMANDS = {
    "exact": cmd_exact, "oracle": cmd_oracle, "lemma1": cmd_lemma1, "strip": cmd_strip,
    "charge": cmd_charge, "rg-check": cmd_rg_check, "reproduce": cmd_reproduce,
}


def run(argv: Sequence[str] | None = None) -> int:
    parser, regs = _build()
    try:
        ns = parser.parse_args(argv)
        opts = _resolve(ns, regs[ns.command])
    except _ArgError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INVALID
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    try:
        return COMMANDS[ns.command](opts)
    except NumericalFailure as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
