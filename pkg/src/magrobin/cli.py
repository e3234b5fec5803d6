"""Command-line front end: ``magrobin <command> [options]``.

Every command writes its outputs plus ``manifest_<command>.json`` (inputs,
versions, tolerances, output files) into ``--out`` (default: ``$MAGROBIN_OUT``
or the current directory).  ``--config FILE`` reads flat ``key = value``
lines whose keys are option names; explicit command-line options win.
"""
from __future__ import annotations

import argparse
import math
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, degennes, diskmode, effective, geometry, numerics, report

OUT_ENV = "MAGROBIN_OUT"


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# argument parsing helpers
# ---------------------------------------------------------------------------


def parse_float(text: str) -> float:
    t = text.strip().lower()
    if t in ("-inf", "-infinity"):
        return -math.inf
    if t in ("inf", "+inf", "infinity"):
        return math.inf
    return float(t)


def parse_range(text: str):
    """``"a:b"`` -> ``(a, b)``; either side may be ``inf``/``-inf``."""
    parts = text.split(":")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"expected a:b, got {text!r}")
    try:
        return parse_float(parts[0]), parse_float(parts[1])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def parse_int_list(text: str):
    """``"1..4"``, ``"1,3"`` or ``"2"``."""
    out = []
    for part in text.split(","):
        if ".." in part:
            lo, hi = part.split("..")
            out.extend(range(int(lo), int(hi) + 1))
        elif part.strip():
            out.append(int(part))
    if not out:
        raise argparse.ArgumentTypeError(f"empty index list {text!r}")
    return out


def parse_float_list(text: str):
    return [parse_float(p) for p in text.split(",") if p.strip()]


def parse_gamma(text: str):
    try:
        return degennes.robin(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid Robin parameter {text!r}: {exc}") from None


_THETA_TOKEN = re.compile(r"^theta0(?:([+-])(.+))?$")


def resolve_window_end(text: str, gamma):
    """Window endpoint; ``theta0``, ``theta0+x`` or ``theta0-x`` refer to ``Theta^[0](gamma)``."""
    t = text.strip().lower().replace("θ⁰", "theta0").replace("θ0", "theta0")
    m = _THETA_TOKEN.match(t)
    if m:
        base = degennes.find_minimum(gamma, 1).theta
        if m.group(1):
            off = float(m.group(2))
            return base + off if m.group(1) == "+" else base - off
        return base
    return parse_float(t)


def parse_window(text: str, gamma):
    parts = text.split(":")
    if len(parts) != 2:
        raise UsageError(f"window must be a:b, got {text!r}")
    return resolve_window_end(parts[0], gamma), resolve_window_end(parts[1], gamma)


def _looks_like_value(tok: str) -> bool:
    return bool(re.match(r"^-(\d|\.\d|inf)", tok.lower()))


def preprocess_argv(argv):
    """Glue ``--opt -2:6`` into ``--opt=-2:6`` so negative values parse."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and _looks_like_value(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def read_config(path):
    """Flat ``key = value`` file; ``#`` starts a comment."""
    cfg = {}
    with open(path) as fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{n}: expected key = value")
            k, v = line.split("=", 1)
            cfg[k.strip().replace("-", "_")] = v.strip()
    return cfg


def geometry_from_args(args):
    chosen = [x for x in ("disk", "ellipse", "radius") if getattr(args, x, None) is not None]
    if len(chosen) != 1:
        raise UsageError("choose exactly one of --disk R, --ellipse a:b, --radius c0,c1,...")
    M = args.M
    if args.disk is not None:
        return geometry.disk(args.disk, M)
    if args.ellipse is not None:
        a, b = args.ellipse
        return geometry.ellipse(a, b, M)
    return geometry.custom_from_radius(args.radius, (), M)


# ---------------------------------------------------------------------------
# run context: output directory and manifest
# ---------------------------------------------------------------------------


class Run:
    def __init__(self, command, args, config):
        self.command = command
        self.args = args
        self.config = config
        self.out = Path(args.out or os.environ.get(OUT_ENV) or ".")
        self.out.mkdir(parents=True, exist_ok=True)
        self.files = []
        self.failures = []
        self.results = {}

    def path(self, name):
        self.files.append(name)
        return self.out / name

    def fail(self, item, exc):
        self.failures.append(dict(item=str(item), error=f"{type(exc).__name__}: {exc}"))

    def manifest(self):
        import numba
        import scipy

        inputs = {k: v for k, v in vars(self.args).items() if k not in ("func", "config")}
        return dict(command=self.command, inputs=inputs, config=self.config,
                    versions=dict(magrobin=__version__, numpy=np.__version__,
                                  scipy=scipy.__version__, numba=numba.__version__),
                    tolerances=dict(numerics.DEFAULTS, regular_window=degennes.REGULAR_TOL,
                                    edge_mass=effective.EDGE_MASS_TOL),
                    outputs=sorted(self.files), results=self.results,
                    failures=self.failures, status="ok" if not self.failures else "partial")

    def finish(self):
        name = f"manifest_{self.command}.json"
        report.write_json(self.out / name, self.manifest())
        return 0 if not self.failures else 1


def _gtag(gamma):
    return "dirichlet" if degennes.is_dirichlet(gamma) else f"{gamma:g}"


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_dispersion(run, a):
    gamma = a.gamma
    lo, hi = a.sigma
    extrema = []
    for n in a.n:
        try:
            br = degennes.dispersion_branch(gamma, n, (lo, hi), a.samples)
        except Exception as exc:  # noqa: BLE001 - reported per item
            run.fail(f"branch n={n}", exc)
            continue
        report.write_csv(run.path(f"dispersion_g{_gtag(gamma)}_n{n}.csv"), ["sigma", "mu"],
                         zip(br.sigma, br.mu), dict(gamma=_gtag(gamma), n=n,
                                                    warnings="|".join(br.warnings) or "none"))
        if not degennes.is_dirichlet(gamma):
            try:
                extrema.append(degennes.find_minimum(gamma, n).as_dict())
            except Exception as exc:  # noqa: BLE001
                run.fail(f"minimum n={n}", exc)
    report.write_json(run.path(f"extrema_g{_gtag(gamma)}.json"), dict(gamma=gamma, extrema=extrema))


def cmd_minima(run, a):
    rows = []
    for g in a.gamma:
        for n in a.n:
            try:
                e = degennes.find_minimum(g, n)
                m1, m3 = degennes.moment_check(g, n)
                d = e.as_dict()
                d.update(dauge_helffer_residual=degennes.dauge_helffer_residual(g, n),
                         m1=m1, m3_residual=m3, C_closed_form=degennes.closed_form_C(e))
                rows.append(d)
            except Exception as exc:  # noqa: BLE001
                run.fail(f"gamma={g} n={n}", exc)
    report.write_json(run.path("minima.json"), dict(minima=rows))


def cmd_ck(run, a):
    out = []
    for g in a.gamma:
        try:
            if a.at_minimum:
                e = degennes.find_minimum(g, a.k)
                s = e.xi
                closed = degennes.closed_form_C(e)
            else:
                if a.sigma is None:
                    raise UsageError("give --sigma or --at-minimum")
                s, closed = a.sigma, None
            out.append(dict(gamma=g, k=a.k, sigma=s, C=degennes.compute_C(g, s, a.k),
                            closed_form=closed))
        except UsageError:
            raise
        except Exception as exc:  # noqa: BLE001
            run.fail(f"gamma={g}", exc)
    report.write_json(run.path("ck.json"), dict(values=out))


def cmd_gamma0(run, a):
    res = []
    for k in a.k:
        g_f = degennes.find_gamma0(k)
        g_c = degennes.gamma0_from_C(k)
        res.append(dict(k=k, gamma0=g_f, gamma0_from_C=g_c, difference=abs(g_f - g_c)))
    run.results["gamma0"] = res
    report.write_json(run.path("gamma0.json"), dict(thresholds=res))


def cmd_geometry(run, a):
    g = geometry_from_args(a)
    summary = g.summary()
    for name, direction in (("max", "max"), ("min", "min")):
        try:
            summary[f"extremum_{name}"] = geometry.curvature_extremum(g, direction).as_dict()
        except geometry.GeometryError as exc:
            summary[f"extremum_{name}"] = dict(rejected=str(exc))
    report.write_json(run.path("geometry.json"), summary)
    g.write_csv(run.path("kappa.csv"))


def _config(a, window=None):
    g = geometry_from_args(a)
    w = window if window is not None else parse_window(a.window, a.gamma)
    return effective.SemiclassicalConfig(a.h, a.gamma, w, g)


def cmd_spectrum(run, a):
    cfg = _config(a)
    meta = dict(h=a.h, gamma=_gtag(cfg.gamma), window=f"{cfg.window[0]}:{cfg.window[1]}",
                method=a.method)
    if a.method == "leading":
        sp = effective.leading_spectrum(cfg)
        sp.write_json(run.path("spectrum_leading.json"))
        sp.write_csv(run.path("spectrum_leading.csv"), meta)
        run.results["count"] = len(sp)
    elif a.method == "matrix":
        sp = effective.matrix_spectrum(cfg)
        sp.write_json(run.path("spectrum_matrix.json"))
        for k in sorted({e.k for e in sp.entries}):
            rows = [(e.k, e.lam, e.lam / cfg.h) for e in sp.entries if e.k == k]
            report.write_csv(run.path(f"spectrum_matrix_k{k}.csv"), ["k", "lambda", "lambda_over_h"],
                             rows, meta)
        run.results["count"] = len(sp)
    else:
        if cfg.geometry.kind != "disk":
            raise UsageError("method=disk requires --disk")
        R = cfg.geometry.params["R"]
        sp = diskmode.window_spectrum(R, a.h, cfg.gamma, cfg.window, N=a.nr)
        report.write_json(run.path("spectrum_disk.json"), sp.as_dict())
        sp.write_csv(run.path("spectrum_disk.csv"), meta)
        run.results["count"] = len(sp)


def cmd_compare(run, a):
    if a.disk is None:
        raise UsageError("compare needs --disk R")
    w = parse_window(a.window, a.gamma)
    c = diskmode.compare_with_model(a.disk, a.h, a.gamma, w, N=a.nr)
    run.results.update(c.as_dict())
    report.write_json(run.path("compare.json"), c.as_dict())


def cmd_weyl(run, a):
    cfg = _config(a)
    w = effective.weyl_count(cfg)
    run.results.update(count=w.count)
    report.write_json(run.path("weyl.json"), dict(config=cfg.as_dict(), **w.as_dict()))


def cmd_oscillate(run, a):
    g = geometry_from_args(a)
    w = parse_window(a.window, a.gamma)
    h0, h1 = a.h_range
    bd = effective.trace_branches(g, a.gamma, w, (h0, h1), n_h=a.samples)
    out = bd.as_dict()
    try:
        out["triple"] = effective.oscillation_triple(bd, h0, M=(h1 - h0) / h0 ** 2).as_dict()
    except ValueError as exc:
        run.fail("oscillation triple", exc)
    report.write_json(run.path("branches.json"), out)
    bd.write_csv(run.path("branches.csv"), dict(gamma=_gtag(a.gamma), window=f"{w[0]}:{w[1]}"))
    run.results["crossings"] = len(bd.crossings)


def cmd_lowlying(run, a):
    g = geometry_from_args(a)
    cfg = effective.lowlying_config(g, a.gamma, a.h)
    ll = effective.lowlying_spectrum(cfg, a.jmax)
    out = dict(h=a.h, gamma=a.gamma, ladder=ll.as_dict())
    if a.crosscheck:
        out["crosscheck"] = effective.harmonic_crosscheck(cfg, a.jmax).as_dict()
    report.write_json(run.path("lowlying.json"), out)


def cmd_disk_validate(run, a):
    rows = []
    for h in a.h:
        try:
            w = parse_window(a.window, a.gamma)
            rows.append(diskmode.compare_with_model(a.R, h, a.gamma, w, N=a.nr).as_dict())
        except Exception as exc:  # noqa: BLE001
            run.fail(f"h={h}", exc)
    out = dict(R=a.R, gamma=a.gamma, rows=rows)
    good = [(r["h"], r["hausdorff"]) for r in rows if r["hausdorff"] > 0]
    if len(good) >= 2:
        hs, ds = np.array(good).T
        out["fitted_order"] = float(np.polyfit(np.log(hs), np.log(ds), 1)[0])
    run.results.update({k: v for k, v in out.items() if k != "rows"})
    report.write_json(run.path("disk_validate.json"), out)


def cmd_agmon(run, a):
    w = parse_window(a.window, a.gamma)
    sp = diskmode.window_spectrum(a.R, a.h, a.gamma, w, N=a.nr, keep_vectors=True)
    rows = []
    for (m, j), (r, gv) in sorted(sp.eigenfunctions.items()):
        p = diskmode.RadialProblem(a.R, a.h, a.gamma, m, a.nr)
        prof = diskmode.localization_profile(p, gv, r)
        rows.append(dict(m=m, j=j, **prof.as_dict()))
    out = dict(R=a.R, h=a.h, gamma=a.gamma, window=list(w), eigenfunctions=rows)
    if rows:
        out["median_alpha"] = float(np.median([r["alpha_hat"] for r in rows]))
        out["min_fraction_10"] = float(min(r["fraction_10"] for r in rows))
    report.write_json(run.path("agmon.json"), out)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_geometry(p):
    p.add_argument("--disk", type=float, metavar="R")
    p.add_argument("--ellipse", type=parse_range, metavar="A:B")
    p.add_argument("--radius", type=parse_float_list, metavar="C0,C1,...",
                   help="cosine coefficients of r(phi)")
    p.add_argument("--M", type=int, default=1024, help="boundary samples (power of two)")


def build_parser():
    ap = argparse.ArgumentParser(prog="magrobin", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or .)")
        p.add_argument("--config", help="flat key = value file of option defaults")
        p.set_defaults(func=func)
        return p

    p = add("dispersion", cmd_dispersion, "dispersion curves and their minima")
    p.add_argument("--gamma", type=parse_gamma, required=True)
    p.add_argument("--n", type=parse_int_list, default=[1])
    p.add_argument("--sigma", type=parse_range, default=(-2.0, 6.0))
    p.add_argument("--samples", type=int, default=400)

    p = add("minima", cmd_minima, "minima, curvature and moment identities")
    p.add_argument("--gamma", type=lambda s: [parse_gamma(x) for x in s.split(",")], default=[0.0])
    p.add_argument("--n", type=parse_int_list, default=[1])

    p = add("ck", cmd_ck, "curvature coefficient C_k")
    p.add_argument("--gamma", type=lambda s: [parse_gamma(x) for x in s.split(",")], default=[0.0])
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--sigma", type=parse_float)
    p.add_argument("--at-minimum", action="store_true")

    p = add("gamma0", cmd_gamma0, "Robin threshold where C_k changes sign")
    p.add_argument("--k", type=parse_int_list, default=[1])

    p = add("geometry", cmd_geometry, "boundary summary and curvature samples")
    _add_geometry(p)

    for name, func, help_ in (("spectrum", cmd_spectrum, "window spectrum"),
                              ("weyl", cmd_weyl, "two-term Weyl count")):
        p = add(name, func, help_)
        _add_geometry(p)
        p.add_argument("--gamma", type=parse_gamma, required=True)
        p.add_argument("--h", type=float, required=True)
        p.add_argument("--window", required=True, metavar="A:B")
        if name == "spectrum":
            p.add_argument("--method", choices=("leading", "matrix", "disk"), default="leading")
            p.add_argument("--nr", type=int, default=diskmode.DEFAULT_NR)

    p = add("compare", cmd_compare, "exact disk spectrum against the effective model")
    _add_geometry(p)
    p.add_argument("--gamma", type=parse_gamma, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--nr", type=int, default=diskmode.DEFAULT_NR)

    p = add("oscillate", cmd_oscillate, "oscillation branches and crossings")
    _add_geometry(p)
    p.add_argument("--gamma", type=parse_gamma, required=True)
    p.add_argument("--h-range", type=parse_range, required=True)
    p.add_argument("--window", required=True)
    p.add_argument("--samples", type=int, default=801)

    p = add("lowlying", cmd_lowlying, "three-term low-lying ladder")
    _add_geometry(p)
    p.add_argument("--gamma", type=parse_gamma, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--jmax", type=int, default=3)
    p.add_argument("--crosscheck", action="store_true")

    p = add("disk-validate", cmd_disk_validate, "disk comparison over several h")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--gamma", type=parse_gamma, default=0.0)
    p.add_argument("--h", type=parse_float_list, default=[0.08, 0.04, 0.02])
    p.add_argument("--window", default="0.7:0.9")
    p.add_argument("--nr", type=int, default=diskmode.DEFAULT_NR)

    p = add("agmon", cmd_agmon, "boundary localisation of disk eigenfunctions")
    p.add_argument("--R", type=float, default=1.0)
    p.add_argument("--gamma", type=parse_gamma, default=0.0)
    p.add_argument("--h", type=float, default=0.02)
    p.add_argument("--window", default="0.7:0.9")
    p.add_argument("--nr", type=int, default=diskmode.DEFAULT_NR)
    return ap


def _find_config(argv):
    for i, tok in enumerate(argv):
        if tok.startswith("--config="):
            return tok.split("=", 1)[1]
        if tok == "--config" and i + 1 < len(argv):
            return argv[i + 1]
    return None


def _config_tokens(parser, command, cfg):
    """Option tokens for the config entries of ``command``."""
    choices = parser._subparsers._group_actions[0].choices
    if command not in choices:
        return []
    known = {a.dest: a for a in choices[command]._actions if a.option_strings}
    extra = []
    for k, v in cfg.items():
        if k not in known or k == "config":
            raise UsageError(f"unknown config key {k!r} for {command}")
        act = known[k]
        opt = act.option_strings[-1]
        if act.nargs == 0:
            if v.lower() in ("1", "true", "yes", "on"):
                extra.append(opt)
        else:
            extra.append(f"{opt}={v}")
    return extra


def main(argv=None) -> int:
    argv = preprocess_argv(list(sys.argv[1:] if argv is None else argv))
    parser = build_parser()
    config = {}
    try:
        path = _find_config(argv)
        if path is not None and argv:
            config = read_config(path)
            argv = [argv[0]] + _config_tokens(parser, argv[0], config) + argv[1:]
        args = parser.parse_args(argv)
        run = Run(args.command, args, config)
        try:
            args.func(run, args)
        except UsageError:
            raise
        except (ValueError, RuntimeError) as exc:
            run.fail(args.command, exc)
            print(f"magrobin {args.command}: {exc}", file=sys.stderr)
        return run.finish()
    except (UsageError, OSError) as exc:
        parser.error(str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
