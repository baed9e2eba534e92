"""Command-line experiment runner.

Every subcommand reads an INI file (``--config``) with a ``[run]`` section and
one parameter section named after the subcommand, e.g.::

    [run]
    figure = lefton-spectrum

    [spectrum]
    profile = lefton
    b = -1.1
    amplitude = 1.0
    N = 1024
    L = 200

Unknown sections or keys are rejected with a message naming them. Outputs
(CSV, contour matrices, figures, ``manifest.json``) go to ``--out``.

Exit status: 0 when the run completed, 1 when it ended with a positivity
violation, a step failure, a Newton failure or the step budget, 2 for
configuration and usage errors.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import sys
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np
import scipy.fft

from . import __version__
from . import continuation as cont
from . import io
from . import plotting
from . import point_spectrum as ps
from . import verify as vf
from .evolution import EvolutionConfig, Termination, evolve
from .exact import BFamilyParams, LeftonParams, gaussian_ic, lefton_eval, peakon_eval, sample
from .spectral import make_grid
from .stability import build_linearization, compute_spectrum, lefton_domain

log = logging.getLogger("bfamily")

EXIT_OK, EXIT_RUN_FAILED, EXIT_USAGE = 0, 1, 2


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


# schema -----------------------------------------------------------------------------

@dataclass(frozen=True)
class Key:
    kind: type
    default: object = None
    required: bool = False
    check: Optional[Callable] = None
    why: str = ""
    choices: tuple = ()


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


POS = dict(check=_pos, why="must be positive")
GRID = {"N": Key(int, required=True, check=lambda n: n >= 8 and n % 2 == 0, why="must be an even integer >= 8"),
        "L": Key(float, 200.0, **POS)}

SCHEMAS = {
    "evolve": {
        "b": Key(float, required=True),
        "initial": Key(str, "gaussian", choices=("gaussian", "peakon", "lefton")),
        "sigma": Key(float, 10.0, **POS),
        "x0": Key(float, 100.0),
        "c": Key(float, 0.031, **POS),
        "amplitude": Key(float, 1.0, **POS),
        **GRID,
        "t_final": Key(float, required=True, **POS),
        "abs_tol": Key(float, 1e-8, **POS),
        "rel_tol": Key(float, 1e-8, **POS),
        "snapshot_interval": Key(float, 10.0, **POS),
        "monitor_positivity": Key(bool, True),
        "error_norm": Key(str, "spectral", choices=("spectral", "physical")),
        "x_stride": Key(int, 1, check=_pos, why="must be a positive integer"),
    },
    "spectrum": {
        "profile": Key(str, "lefton", choices=("lefton", "soliton")),
        "b": Key(float, required=True),
        "amplitude": Key(float, 1.0, **POS),
        "c": Key(float, 1.5, **POS),
        "g": Key(float, 0.5, **POS),
        **GRID,
        "eigenvectors": Key(bool, False),
    },
    "lefton-branch": {
        "b_start": Key(float, -1.2, check=lambda b: b < -1, why="must be below -1"),
        "b_end": Key(float, -1.0),
        **GRID,
        "initial_step": Key(float, 0.01, **POS),
        "min_step": Key(float, 1e-6, **POS),
        "max_step": Key(float, 0.02, **POS),
        "max_steps": Key(int, 500, **POS),
        "tol": Key(float, 1e-10, **POS),
        "profile_every": Key(int, 0, check=_nonneg, why="must be >= 0 (0 disables profiles)"),
    },
    "soliton-branch": {
        "b": Key(float, 1.0),
        "c": Key(float, 1.5, **POS),
        "g_start": Key(float, None),
        "g_end": Key(float, 0.02, **POS),
        **GRID,
        "initial_step": Key(float, 0.005, **POS),
        "min_step": Key(float, 1e-6, **POS),
        "max_step": Key(float, 0.02, **POS),
        "max_steps": Key(int, 500, **POS),
        "tol": Key(float, 1e-10, **POS),
        "spectra": Key(bool, True),
        "profile_every": Key(int, 0, check=_nonneg, why="must be >= 0 (0 disables profiles)"),
    },
    "point-spectrum-scan": {
        "b": Key(float, required=True),
        "c": Key(float, 1.0, **POS),
        "re_lambda": Key(list, required=True),
        "im_lambda": Key(list, [0.0]),
        "spaces": Key(list, ["setA", "L2_Cd"]),
        "s": Key(float, None, check=lambda s: 1.0 <= s < 1.5, why="must lie in [1, 3/2)"),
        "construct": Key(bool, True),
    },
    "verify": {
        "selector": Key(str, "fast"),
    },
}
RUN_KEYS = {"figure": Key(str, None), "title": Key(str, None)}


def _convert(section: str, name: str, key: Key, raw: str):
    where = f"[{section}] {name}"
    try:
        if key.kind is bool:
            low = raw.strip().lower()
            if low not in ("true", "false", "yes", "no", "1", "0", "on", "off"):
                raise ValueError
            value = low in ("true", "yes", "1", "on")
        elif key.kind is list:
            value = [v.strip() for v in raw.replace(",", " ").split() if v.strip()]
            if not value:
                raise ValueError
        else:
            value = key.kind(raw.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r} as {key.kind.__name__}") from None
    if key.choices and value not in key.choices:
        raise ConfigError(f"{where}: {value!r} is not one of {key.choices}")
    if key.check is not None and not key.check(value):
        raise ConfigError(f"{where} = {raw.strip()} {key.why}")
    return value


def parse_config(text: str, command: str) -> tuple:
    """Validate an INI document for ``command``; returns ``(run, params)`` dicts."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__defaults__")
    cp.optionxform = str  # keep key case (N vs n)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    schema = SCHEMAS[command]
    for section in cp.sections():
        if section not in ("run", command):
            raise ConfigError(f"unknown section [{section}] for command {command!r}")
    out = {}
    for section, keys in (("run", RUN_KEYS), (command, schema)):
        given = dict(cp[section]) if cp.has_section(section) else {}
        for name in given:
            if name not in keys:
                raise ConfigError(f"[{section}] {name}: unknown key")
        values = {}
        for name, key in keys.items():
            if name in given:
                values[name] = _convert(section, name, key, given[name])
            elif key.required:
                raise ConfigError(f"[{section}] {name}: required key missing")
            else:
                values[name] = key.default
        out[section] = values
    return out["run"], out[command]


def load_config(path, command: str) -> tuple:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, command)


def soliton_g_max(b: float, c: float) -> float:
    """Upper end ``c^2 / (2 (b + 1))`` of the range of ``g`` carrying a solitary wave."""
    return c * c / (2.0 * (b + 1.0))


def cross_validate(command: str, p: dict) -> None:
    """Checks that involve several keys, run before any output is written."""
    sec = f"[{command}]"
    if command == "spectrum" and p["profile"] == "lefton" and not p["b"] < -1:
        raise ConfigError(f"{sec} b = {p['b']} must be below -1 for a lefton profile")
    if command == "spectrum" and p["profile"] == "soliton":
        if not p["b"] > -1 or not p["g"] < soliton_g_max(p["b"], p["c"]):
            raise ConfigError(f"{sec} g = {p['g']} must lie below c^2/(2(b+1)) with b > -1")
    if p.get("N", 0) > 2048 and command == "spectrum":
        raise ConfigError(f"{sec} N = {p['N']} exceeds the dense eigensolver cap of 2048")
    if command == "soliton-branch":
        if not p["b"] > -1:
            raise ConfigError(f"{sec} b = {p['b']} must exceed -1")
        g_max = soliton_g_max(p["b"], p["c"])
        if p["g_start"] is not None and not 0 < p["g_start"] < g_max:
            raise ConfigError(f"{sec} g_start = {p['g_start']} must lie in (0, {g_max:g})")
    if command == "lefton-branch" and not p["b_start"] < p["b_end"] <= -1.0:
        raise ConfigError(f"{sec} b_end = {p['b_end']} must lie in (b_start, -1]")
    if command == "point-spectrum-scan":
        try:
            p["re_lambda"] = [float(v) for v in p["re_lambda"]]
            p["im_lambda"] = [float(v) for v in p["im_lambda"]]
        except ValueError as exc:
            raise ConfigError(f"{sec} re_lambda/im_lambda: {exc}") from None
        for sp in p["spaces"]:
            if sp not in ps.SPACES:
                raise ConfigError(f"{sec} spaces: unknown space {sp!r}")
        if "Hs" in p["spaces"] and p["s"] is None:
            raise ConfigError(f"{sec} s: required when spaces include Hs")
    if command == "evolve" and p["initial"] == "lefton" and not p["b"] < -1:
        raise ConfigError(f"{sec} b = {p['b']} must be below -1 for a lefton initial condition")


# runners ------------------------------------------------------------------------------

def run_evolve(p: dict, out: Path, manifest: io.RunManifest) -> int:
    grid = make_grid(p["L"], p["N"])
    if p["initial"] == "gaussian":
        u0 = sample(grid, gaussian_ic, p["sigma"], p["x0"])
    elif p["initial"] == "peakon":
        u0 = sample(grid, peakon_eval, 0.0, BFamilyParams(p["b"], p["c"]), p["x0"])
    else:
        u0 = sample(grid, lefton_eval, LeftonParams(p["amplitude"], p["x0"], p["b"]))
    cfg = EvolutionConfig(p["b"], grid, p["t_final"], abs_tol=p["abs_tol"], rel_tol=p["rel_tol"],
                          snapshot_interval=p["snapshot_interval"],
                          monitor_positivity=p["monitor_positivity"], error_norm=p["error_norm"])
    series = evolve(u0, cfg)
    s = p["x_stride"]
    U = np.array([f.values[::s] for f in series.fields])
    x = grid.x[::s]
    manifest.register(io.write_snapshots_csv(out / "snapshots.csv", series, s))
    manifest.register(io.write_contour_matrix(out / "contour.txt", series.times, x, U))
    manifest.register(io.write_json(out / "evolution.json", series.manifest()))
    diag = np.column_stack([series.times, series.mass, series.max_amplitude, series.min_m])
    manifest.register(io.write_rows(out / "diagnostics.csv", ["t", "mass", "max_u", "min_m"],
                                     ([io.fmt_float(v) for v in row] for row in diag)))
    plotting.plot_contour(out / "contour.png", (series.times[0], series.times[-1], x[0], x[-1]), U,
                          title=f"b = {p['b']:g}")
    plotting.plot_profiles(out / "final.png", x, [U[0], U[-1]],
                           [f"t = {series.times[0]:g}", f"t = {series.times[-1]:g}"])
    manifest.results = series.manifest()
    return 0 if series.termination is Termination.COMPLETED else 1


def run_spectrum(p: dict, out: Path, manifest: io.RunManifest) -> int:
    if p["profile"] == "lefton":
        p["L"] = lefton_domain(p["b"], p["L"])
    grid = make_grid(p["L"], p["N"])
    if p["profile"] == "lefton":
        u0 = sample(grid, lefton_eval, LeftonParams(p["amplitude"], 0.5 * p["L"], p["b"]))
        c, label = 0.0, {"A": p["amplitude"]}
    else:
        branch = cont.soliton_branch_in_g(grid, p["b"], p["c"], 0.99 * soliton_g_max(p["b"], p["c"]),
                                          p["g"], vf.soliton_config())
        if branch.stop_reason is not cont.StopReason.REACHED_TARGET:
            manifest.status = branch.stop_reason.value
            return 1
        u0, c, label = branch.last.solution, p["c"], {"g": p["g"], "c": p["c"]}
    op = build_linearization(u0, c, p["b"])
    res = compute_spectrum(op, want_vectors=p["eigenvectors"], params=label)
    manifest.register(io.write_spectrum_csv(out / "spectrum.csv", res))
    info = {"b": p["b"], "c": c, "g_or_A": label.get("g", label.get("A")), "N": p["N"],
            "L": p["L"], "max_real_part": res.max_real_part, "profile": p["profile"]}
    manifest.register(io.write_json(out / "spectrum.json", info))
    if res.eigenvectors is not None:
        v = res.eigenvectors[:, res.leading()]
        manifest.register(io.write_rows(out / "leading_mode.csv", ["x", "re", "im"],
                                         ([io.fmt_float(a), io.fmt_float(z.real), io.fmt_float(z.imag)]
                                          for a, z in zip(grid.x, v))))
    plotting.plot_spectrum(out / "spectrum.png", res.eigenvalues,
                           title=f"max Re = {res.max_real_part:.2e}")
    manifest.results = info
    return 0


def _branch_outputs(branch, out: Path, manifest: io.RunManifest, every: int, xlabel: str):
    manifest.register(io.write_branch_csv(out / "branch.csv", branch))
    if every:
        for path in io.write_branch_profiles(out / "profiles", branch, every):
            manifest.outputs[f"profiles/{path.name}"] = io.sha256sum(path)
    plotting.plot_branch(out / "branch.png", branch.params, [pt.max_u for pt in branch.points],
                         xlabel, "max u")


def _cont_config(p: dict, parameter: str) -> cont.ContinuationConfig:
    return cont.ContinuationConfig(parameter, initial_step=p["initial_step"], min_step=p["min_step"],
                                   max_step=p["max_step"], max_steps=p["max_steps"], tol=p["tol"])


def _branch_exit(branch) -> int:
    failed = (cont.StopReason.NEWTON_FAILURE, cont.StopReason.MAX_STEPS)
    return 1 if branch.stop_reason in failed else 0


def run_lefton_branch(p: dict, out: Path, manifest: io.RunManifest) -> int:
    grid = make_grid(p["L"], p["N"])
    branch = cont.lefton_branch(grid, p["b_start"], np.sign(p["b_end"] - p["b_start"]),
                                _cont_config(p, "b"), p["b_end"])
    _branch_outputs(branch, out, manifest, p["profile_every"], "$b$")
    manifest.results = {"stop_reason": branch.stop_reason.value, "points": len(branch.points),
                        "b_last": branch.last.param,
                        "max_residual": max(pt.residual for pt in branch.points)}
    manifest.status = branch.stop_reason.value
    return _branch_exit(branch)


def run_soliton_branch(p: dict, out: Path, manifest: io.RunManifest) -> int:
    grid = make_grid(p["L"], p["N"])
    g_start = p["g_start"] if p["g_start"] is not None else 0.99 * soliton_g_max(p["b"], p["c"])
    branch = cont.soliton_branch_in_g(grid, p["b"], p["c"], g_start, p["g_end"], _cont_config(p, "g"))
    _branch_outputs(branch, out, manifest, p["profile_every"], "$g$")
    manifest.results = {"stop_reason": branch.stop_reason.value, "points": len(branch.points),
                        "g_last": branch.last.param}
    if p["spectra"]:
        mr = vf.soliton_spectra(branch, p["c"], p["b"])
        manifest.register(io.write_rows(out / "branch_spectra.csv", ["param", "max_real_part"],
                                         ([io.fmt_float(g), io.fmt_float(m)] for g, m in zip(branch.params, mr))))
        try:
            manifest.results["g_threshold"] = vf.instability_threshold(branch.params, mr)
        except ValueError:
            manifest.results["g_threshold"] = None
    manifest.status = branch.stop_reason.value
    return _branch_exit(branch)


def run_point_spectrum_scan(p: dict, out: Path, manifest: io.RunManifest) -> int:
    rows = []
    for re in p["re_lambda"]:
        for im in p["im_lambda"]:
            q = ps.SpectralPointQuery(complex(re, im), p["b"], p["c"], p["s"])
            residual = None
            if p["construct"] and ps.band_membership(q, "L2_Cd").member:
                try:
                    residual = ps.construct_eigenvector(q).residual
                except (ValueError, RuntimeError) as exc:
                    log.warning("lambda = %s: %s", q.lam, exc)
            for sp in p["spaces"]:
                member = ps.band_membership(q, sp, p["s"]).member
                rows.append(io.BandScanRow(q.lam, sp, member, residual))
    manifest.register(io.write_band_scan_csv(out / "band_scan.csv", rows))
    first = [r for r in rows if r.space == p["spaces"][0]]
    plotting.plot_band_scan(out / "band_scan.png", [r.lam for r in first], [r.member for r in first],
                            ps.band_bound(p["b"], p["c"], p["spaces"][0], p["s"]))
    manifest.results = {"points": len(rows) // len(p["spaces"]),
                        "max_residual": max((r.residual for r in rows if r.residual is not None),
                                            default=None)}
    return 0


def run_verify(p: dict, out: Path, manifest: io.RunManifest, threads: int = 1) -> int:
    checks = vf.verify(p["selector"], threads)
    for chk in checks:
        print(chk.line(), flush=True)
    manifest.register(io.write_json(out / "verify.json", {"checks": [c.as_dict() for c in checks]}))
    manifest.results = {"passed": sum(c.passed for c in checks), "total": len(checks)}
    return 0 if all(c.passed for c in checks) else 1


RUNNERS = {
    "evolve": run_evolve,
    "spectrum": run_spectrum,
    "lefton-branch": run_lefton_branch,
    "soliton-branch": run_soliton_branch,
    "point-spectrum-scan": run_point_spectrum_scan,
}


# entry point ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bfamily", description="b-family peakon numerical lab")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SCHEMAS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "verify", help="INI configuration file")
        sp.add_argument("--out", default=f"out/{name}", help="output directory")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")
        if name == "verify":
            sp.add_argument("selector", nargs="?", default=None,
                            help="fast, desk, all or criterion numbers such as 1,8")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    if args.threads < 1:
        print("error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.config:
            run_cfg, params = load_config(args.config, args.command)
        else:
            run_cfg, params = parse_config("", args.command)
        cross_validate(args.command, params)
        if args.command == "verify":
            params["selector"] = args.selector or params["selector"]
            vf.select(params["selector"])
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    manifest = io.RunManifest(kind=args.command, config={"run": run_cfg, args.command: params},
                              version=__version__, status="running", figure=run_cfg.get("figure"))
    t0 = time.perf_counter()
    with scipy.fft.set_workers(args.threads):
        if args.command == "verify":
            code = run_verify(params, out, manifest, args.threads)
        else:
            code = RUNNERS[args.command](params, out, manifest)
    manifest.wall_clock = time.perf_counter() - t0
    if manifest.status == "running":
        manifest.status = manifest.results.get("termination_reason", "completed" if code == 0 else "failed")
    manifest.write(out)
    return code


if __name__ == "__main__":
    sys.exit(main())
