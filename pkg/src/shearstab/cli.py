"""Command-line front end.

    shearstab rayleigh scan  --config run.yaml --out results/
    shearstab os eig|neutral|mode --config run.yaml
    shearstab packet grow    --config run.yaml
    shearstab landau run     --config landau.json
    shearstab cascade run    --scenario thm3
    shearstab verify         --tier fast

Configs are YAML (JSON is accepted as a subset). Floats in CSV files carry 17
significant digits; sweeps run in a process pool but rows are merged in
parameter order, so the output bytes do not depend on ``--workers``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import acceptance, amplitude, cascade, tables, wavepacket
from .errors import ShearStabError
from .orrsolver import eigenmode, find_eigenvalue, most_unstable, neutral_curves
from .profile import profile_from_config
from .rayleigh import rayleigh_scan

# module operation behind each command, named in error messages
OPERATIONS = {
    ("rayleigh", "scan"): "rayleigh.find_rayleigh_mode",
    ("os", "eig"): "orrsolver.find_eigenvalue",
    ("os", "neutral"): "orrsolver.neutral_curves",
    ("os", "mode"): "orrsolver.eigenmode",
    ("packet", "grow"): "wavepacket.packet_growth",
    ("landau", "run"): "amplitude.integrate_landau",
    ("cascade", "run"): "cascade.run_scenario",
    ("verify", None): "acceptance",
}


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# config


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from exc
    try:
        cfg = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise UsageError(f"malformed config {path}{where}: {getattr(exc, 'problem', exc)}") from exc
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise UsageError(f"config {path}: top level must be a mapping")
    return cfg


def _field(cfg: dict, name: str, kind, default=None, required=False):
    if name not in cfg or cfg[name] is None:
        if required:
            raise UsageError(f"config field '{name}' is required")
        return default
    try:
        return kind(cfg[name])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config field '{name}': {exc}") from exc


def _positive(name: str, v: float) -> float:
    if not v > 0:
        raise UsageError(f"config field '{name}' must be positive, got {v}")
    return v


def nu_list(cfg: dict, required: bool = True) -> list[float]:
    raw = cfg.get("nu_list")
    if raw is None:
        if required:
            raise UsageError("config field 'nu_list' is required")
        return []
    if not isinstance(raw, list) or not raw:
        raise UsageError("config field 'nu_list' must be a non-empty list")
    try:
        vals = [float(v) for v in raw]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config field 'nu_list': {exc}") from exc
    for v in vals:
        _positive("nu_list", v)
    return sorted(vals, reverse=True)


def alpha_values(cfg: dict, key: str) -> list[float]:
    """A list, or ``{start, stop, num}`` (geometric when ``log: true``)."""
    raw = cfg.get(key)
    if raw is None:
        raise UsageError(f"config field '{key}' is required")
    if isinstance(raw, list):
        if not raw:
            raise UsageError(f"config field '{key}' is empty")
        return [float(v) for v in raw]
    if isinstance(raw, dict):
        try:
            start, stop, num = float(raw["start"]), float(raw["stop"]), int(raw["num"])
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"config field '{key}' needs start, stop, num: {exc}") from exc
        space = np.geomspace if raw.get("log") else np.linspace
        return [float(v) for v in space(start, stop, num)]
    raise UsageError(f"config field '{key}' must be a list or a start/stop/num mapping")


def as_complex(v) -> complex:
    if isinstance(v, (list, tuple)) and len(v) == 2:
        return complex(float(v[0]), float(v[1]))
    if isinstance(v, str):
        return complex(v.replace(" ", "").replace("i", "j"))
    return complex(v)


def profile_of(cfg: dict):
    spec = cfg.get("profile", {"kind": "exp"})
    if not isinstance(spec, dict):
        raise UsageError("config field 'profile' must be a mapping")
    try:
        return profile_from_config(spec)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config field 'profile': {exc}") from exc


# --------------------------------------------------------------------------
# commands


def _pool_map(fn, items, workers: int):
    if workers <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))


def cmd_rayleigh_scan(cfg, args):
    profile = profile_of(cfg)
    rows = rayleigh_scan(profile, alpha_values(cfg, "alphas"))
    return [tables.write_csv(Path(args.out) / "rayleigh_scan.csv", ["alpha", "re_c", "im_c", "converged"], rows)]


def _eig_task(item):
    spec, nu, alpha = item
    pt = find_eigenvalue(profile_from_config(spec), alpha, nu)
    if pt is None:
        return (nu, alpha, alpha / nu**0.25, math.nan, math.nan, math.nan, math.nan, math.nan)
    lt = pt.lambda_tilde
    return (nu, alpha, pt.alpha_tilde, pt.c.real, pt.c.imag, lt.real, lt.imag, pt.residual)


def cmd_os_eig(cfg, args):
    profile_of(cfg)
    spec = cfg.get("profile", {"kind": "exp"})
    nus = nu_list(cfg)
    if "alpha_tilde" in cfg:
        items = [(spec, nu, a * nu**0.25) for nu in nus for a in alpha_values(cfg, "alpha_tilde")]
    else:
        items = [(spec, nu, a) for nu in nus for a in alpha_values(cfg, "alphas")]
    items.sort(key=lambda it: (-it[1], it[2]))
    rows = _pool_map(_eig_task, items, args.workers)
    header = ["nu", "alpha", "alpha_tilde", "re_c", "im_c", "re_lambda_tilde", "im_lambda_tilde", "residual"]
    return [tables.write_csv(Path(args.out) / "os_eig.csv", header, rows)]


def cmd_os_neutral(cfg, args):
    nc = neutral_curves(profile_of(cfg), nu_list(cfg))
    out = Path(args.out)
    csv_path = tables.write_csv(out / "neutral.csv", ["nu", "alpha_minus", "alpha_plus"], nc.as_rows())
    fit = {"e_minus": nc.fitted_exponents[0], "e_plus": nc.fitted_exponents[1],
           "C_minus": nc.fitted_prefactors[0], "C_plus": nc.fitted_prefactors[1], "stable_nus": nc.stable_nus}
    fit_path = out / "neutral_fit.json"
    fit_path.write_text(json.dumps(fit, indent=2, sort_keys=True) + "\n")
    print(f"e_minus = {fit['e_minus']:.4f}, e_plus = {fit['e_plus']:.4f}")
    return [csv_path, fit_path]


def _carrier(cfg, profile, nu):
    if "alpha_tilde" in cfg:
        return _field(cfg, "alpha_tilde", float)
    pt = most_unstable(profile, nu)
    if pt is None:
        raise ShearStabError(f"no unstable band at nu = {nu:g}")
    return pt.alpha_tilde


def cmd_os_mode(cfg, args):
    profile = profile_of(cfg)
    nu = _positive("nu", _field(cfg, "nu", float, required=True))
    at = _carrier(cfg, profile, nu)
    pt = find_eigenvalue(profile, at * nu**0.25, nu)
    if pt is None:
        raise ShearStabError(f"no eigenvalue found at alpha_tilde = {at:g}, nu = {nu:g}")
    m = eigenmode(pt, profile, n=_field(cfg, "n", int, 1200))
    meta = {"alpha": pt.alpha, "nu": nu, "c": [pt.c.real, pt.c.imag],
            "scale_lengths": list(m.scale_fit.lengths), "psi_amplitudes": list(m.scale_fit.psi_amplitudes),
            "omega_amplitudes": list(m.scale_fit.omega_amplitudes)}
    return [tables.write_table(Path(args.out) / "mode.osm", {"y": m.y, "psi": m.psi, "omega": m.omega}, meta)]


def cmd_packet_grow(cfg, args):
    profile = profile_of(cfg)
    nu = _positive("nu", _field(cfg, "nu", float, required=True))
    beta = _field(cfg, "beta", float, wavepacket.DEFAULT_BETA)
    if not 0.25 < beta < 0.35:
        raise UsageError(f"config field 'beta' must lie in (0.25, 0.35), got {beta}")
    at = _carrier(cfg, profile, nu)
    fam = wavepacket.mode_family(profile, nu, at, beta, n_nodes=_field(cfg, "n_nodes", int, 33))
    s_list = alpha_values(cfg, "s_list") if "s_list" in cfg else list(np.linspace(2.0, 8.0, 7))
    ts = np.array(s_list) / nu**0.5
    g = wavepacket.packet_growth(fam, at, ts)
    out = Path(args.out)
    paths = [tables.write_csv(out / "packet_growth.csv", ["t", "max_amp", "argmax_x"],
                              zip(g.t, g.max_amp, g.argmax_x))]
    snap = cfg.get("snapshot_s")
    if snap is not None:
        t = float(snap) / nu**0.5
        w = wavepacket.envelope_scale(nu, beta)
        cs = wavepacket.group_velocity(fam, at)
        x = np.linspace(cs * t - 60 * w, cs * t + 60 * w, _field(cfg, "snapshot_points", int, 4001))
        y_ref = int(np.argmax(np.abs(fam.psi[len(fam.alphas) // 2])))
        pk = wavepacket.build_wavepacket(fam, at, beta, t, x, [fam.y[y_ref]])
        paths.append(tables.write_table(out / "packet_field.osm", {"x": x, "psi": pk.field[:, 0]},
                                        {"nu": nu, "t": t, "y": float(pk.y[0]), "alpha0_tilde": at, "beta": beta}))
    return paths


def cmd_landau_run(cfg, args):
    try:
        lam = as_complex(cfg["lambda"]) if "lambda" in cfg else None
        a = as_complex(cfg.get("A", -1.0))
        phi0 = as_complex(cfg["phi0"]) if "phi0" in cfg else None
    except (TypeError, ValueError) as exc:
        raise UsageError(f"config: {exc}") from exc
    nu = _field(cfg, "nu", float)
    n_seed = _field(cfg, "N", float)
    theta = _field(cfg, "theta", float, 0.0)
    if lam is None:
        if nu is None:
            raise UsageError("config needs 'lambda' or 'nu'")
        lam = complex(nu**0.5)
    if phi0 is None:
        if nu is None or n_seed is None:
            raise UsageError("config needs 'phi0' or both 'nu' and 'N'")
        phi0 = complex(nu**n_seed)
    model = amplitude.LandauModel(lam, a, phi0)
    verdict = amplitude.classify_saturation(model)
    default_t = 40.0 / lam.real + math.log(1 / abs(phi0)) / lam.real if lam.real > 0 else 100.0 / abs(lam)
    t_end = _field(cfg, "T", float, default_t)
    dt = _field(cfg, "dt", float, t_end / 2000)
    traj = amplitude.integrate_landau(model, t_end, dt)
    out = Path(args.out)
    paths = [tables.write_csv(out / "landau.csv", ["t", "abs_phi", "arg_phi"],
                              zip(traj.t, traj.amplitude, traj.phase))]
    summary = {"verdict": type(verdict).__name__, **{k: v for k, v in vars(verdict).items()},
               "blew_up": traj.blew_up, "quintic_doubt_time": traj.quintic_doubt_time}
    if nu is not None and n_seed is not None and lam.real > 0:
        it = amplitude.instability_time(nu, n_seed, theta, lam.real / nu**0.5)
        summary["instability_time"] = {"T": it.T, "ratio": it.ratio, "limit_ratio": it.limit_ratio}
    p = out / "landau_summary.json"
    p.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return paths + [p]


def cmd_cascade_run(cfg, args):
    name = args.scenario or cfg.get("scenario")
    if not name:
        raise UsageError("cascade run needs --scenario (one of " + ", ".join(sorted(cascade.SCENARIOS)) + ")")
    if name not in cascade.SCENARIOS:
        raise UsageError(f"unknown scenario {name!r}; known: {', '.join(sorted(cascade.SCENARIOS))}")
    text = json.dumps(cascade.named_scenario(name).as_json(), indent=2) + "\n"
    sys.stdout.write(text)
    if args.out_given:
        p = Path(args.out) / f"cascade_{name}.json"
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)
        return [p]
    return []


def cmd_verify(cfg, args):
    failed = 0
    rows = []
    for chk in acceptance.run_tier(args.tier):
        print(chk.line(), flush=True)
        failed += not chk.passed
        rows.append((chk.number, chk.title, "pass" if chk.passed else "fail", chk.seconds))
    if args.out_given:
        tables.write_csv(Path(args.out) / f"verify_{args.tier}.csv", ["criterion", "title", "result", "seconds"], rows)
    print(f"{len(rows) - failed}/{len(rows)} criteria passed")
    return 1 if failed else 0


COMMANDS = {
    ("rayleigh", "scan"): cmd_rayleigh_scan,
    ("os", "eig"): cmd_os_eig,
    ("os", "neutral"): cmd_os_neutral,
    ("os", "mode"): cmd_os_mode,
    ("packet", "grow"): cmd_packet_grow,
    ("landau", "run"): cmd_landau_run,
    ("cascade", "run"): cmd_cascade_run,
    ("verify", None): cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML or JSON run configuration")
    common.add_argument("--out", help="output directory (default: current directory)")
    common.add_argument("--workers", type=int, default=1, help="processes for parameter sweeps")
    common.add_argument("--scenario", help="cascade scenario name (thm1..thm4)")

    parser = argparse.ArgumentParser(prog="shearstab", description="Shear-flow stability toolkit")
    groups = parser.add_subparsers(dest="group", required=True)
    subs = {"rayleigh": ["scan"], "os": ["eig", "neutral", "mode"], "packet": ["grow"], "landau": ["run"],
            "cascade": ["run"]}
    for group, actions in subs.items():
        gp = groups.add_parser(group)
        acts = gp.add_subparsers(dest="action", required=True)
        for act in actions:
            acts.add_parser(act, parents=[common])
    vp = groups.add_parser("verify", parents=[common])
    vp.add_argument("--tier", choices=["fast", "full"], default="fast")
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    key = (args.group, getattr(args, "action", None))
    op = OPERATIONS[key]
    args.out_given = args.out is not None
    args.out = args.out or "."
    try:
        if args.workers < 1:
            raise UsageError("--workers must be at least 1")
        cfg = load_config(args.config)
        result = COMMANDS[key](cfg, args)
    except UsageError as exc:
        print(f"shearstab {' '.join(k for k in key if k)}: usage error: {exc}", file=sys.stderr)
        return 2
    except ShearStabError as exc:
        print(f"shearstab: {op} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"shearstab: {op} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    if isinstance(result, int):
        return result
    for p in result or []:
        print(f"wrote {p}")
    return 0


def main() -> None:
    sys.exit(run_command())


if __name__ == "__main__":
    main()
