"""Command-line front end.

Every output starts with a ``# config: {...}`` line holding the resolved
arguments. Exit status: 0 all checks pass, 1 a check failed, 2 invalid
configuration, 3 internal error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import QSL2RError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INTERNAL = 0, 1, 2, 3


class ConfigError(ValueError):
    pass


# parsing helpers


def parse_complex(text: str) -> complex:
    """'re,im' or a single real; 'i', '2.5i' and '-i' are accepted as imaginary shorthands."""
    s = text.strip().replace(" ", "")
    try:
        if "," in s:
            re_, im = s.split(",")
            return complex(float(re_), float(im))
        if s.endswith(("i", "j")):
            body = s[:-1]
            coef = 1.0 if body in ("", "+") else -1.0 if body == "-" else float(body)
            return complex(0.0, coef)
        return complex(float(s), 0.0)
    except ValueError as exc:
        raise ConfigError(f"cannot parse complex value {text!r}") from exc


def parse_grid(text: str, log: bool = False) -> np.ndarray:
    """'start:stop:count' (count defaults to one point per decade for log grids, 5 otherwise) or 'a,b,c'."""
    parts = text.split(":")
    try:
        if "," in text:
            return np.array([float(v) for v in text.split(",")])
        if len(parts) == 1:
            return np.array([float(parts[0])])
        a, b = float(parts[0]), float(parts[1])
        if log:
            if a <= 0 or b <= 0:
                raise ConfigError("log grids need positive endpoints")
            k = int(parts[2]) if len(parts) > 2 else int(round(abs(math.log10(b / a)))) + 1
            return np.geomspace(a, b, max(k, 1))
        k = int(parts[2]) if len(parts) > 2 else 5
        return np.linspace(a, b, k)
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def pool_size(flag: int | None) -> int:
    env = os.environ.get("QSL2R_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError("QSL2R_THREADS must be an integer") from exc
    return flag if flag else (os.cpu_count() or 1)


def pmap(func, items, workers: int) -> list:
    """Map in a worker pool; results keep the order of ``items``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))


def _csv(rows, header) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _config(args) -> dict:
    skip = {"func", "out"}
    out = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        out[k] = str(v) if isinstance(v, complex) else v
    return out


# module construction from flags


def _module(args):
    from . import modgen
    from .scalars import DeformationPoint

    fam = args.family
    if fam == "principal":
        return modgen.build_principal_q(DeformationPoint(args.q, args.t), args.epsilon, args.lam, args.N, args.margin)
    if fam == "discrete":
        return modgen.build_discrete_q(DeformationPoint(args.q, args.t), args.sigma, args.n, args.sign, args.N,
                                       args.margin)
    if fam == "classical":
        return modgen.build_classical_principal(args.lam, args.epsilon, args.N, args.margin)
    if fam == "classical-discrete":
        return modgen.build_classical_discrete(args.n, args.sign, args.N, args.margin)
    if fam == "motion":
        return modgen.build_motion(args.lam, args.epsilon, args.N, args.margin)
    if fam == "groupoid":
        return modgen.build_groupoid(args.lam, args.epsilon, args.N, args.margin, q=args.q)
    raise ConfigError(f"unknown family {fam!r}")


def _check_config(args):
    N = getattr(args, "N", None)
    margin = getattr(args, "margin", None)
    if N is not None and margin is not None and N <= 2 * margin:
        raise ConfigError("N must exceed 2*margin")
    tol = getattr(args, "tol", None)
    if tol is not None and tol <= 0:
        raise ConfigError("tolerances must be positive")


# commands: each returns (ok, text, failure message)


def cmd_build(args):
    return True, _module(args).to_json() + "\n", ""


def cmd_verify(args):
    from . import algcheck, modgen

    what = args.what
    if what == "relations":
        m = _module(args)
        reps = algcheck.check_relations(m, args.tol)
        worst = max(reps, key=lambda r: r.residual)
        return (algcheck.all_passed(reps), algcheck.reports_to_csv(reps),
                f"algcheck.check_relations: {worst.relation} residual {worst.residual:.3e} at {worst.worst_entry}")
    if what == "unitarity":
        m = _module(args)
        r = algcheck.check_unitarity(m, args.tol or algcheck.TOL_Q)
        return (r.passed, algcheck.reports_to_csv([r]),
                f"algcheck.check_unitarity: {r.relation} residual {r.residual:.3e} at {r.worst_entry}")
    if what == "weights":
        qt = args.q ** args.t
        rows = []
        worst = (0.0, None)
        for n in range(args.n + 1):
            for sign in (1, -1):
                a = modgen.weights_discrete(qt, n, sign, args.N)
                b = modgen.weights_discrete_recursion(qt, n, sign, args.N)
                for k in a:
                    err = abs(a[k] - b[k]) / abs(b[k])
                    rows.append([n, sign, k, f"{a[k]:.16e}", f"{b[k]:.16e}", f"{err:.3e}"])
                    if err > worst[0]:
                        worst = (err, (n, sign, k))
        tol = args.tol or 1e-12
        return (worst[0] < tol, _csv(rows, ["n", "sign", "m", "closed", "recursion", "rel_err"]),
                f"modgen.weights_discrete: relative error {worst[0]:.3e} at {worst[1]}")
    if what == "submodule":
        from .scalars import DeformationPoint

        Q = args.q ** args.t
        full = modgen.build_principal_q(DeformationPoint(args.q, args.t), (-1) ** (args.n + 1),
                                        args.sigma * Q ** args.n, args.N, args.margin)
        rows = []
        worst = 0.0
        for sign in (1, -1):
            keep = modgen.discrete_window(args.n, sign, args.N)
            leak = modgen.leakage(full, keep)
            worst = max(worst, leak)
            rows.append([sign, " ".join(map(str, keep)), f"{leak:.3e}"])
        tol = args.tol or modgen.LEAK_TOL
        return (worst < tol, _csv(rows, ["sign", "window", "leakage"]),
                f"modgen.leakage: {worst:.3e}")
    raise ConfigError(f"unknown verify target {what!r}")


def cmd_sweep(args):
    from . import afield, algcheck, modgen
    from .scalars import DeformationPoint

    workers = pool_size(args.workers)
    if args.what == "specialization":
        c = parse_complex(args.lambda_exp)
        lam = afield.AnalyticLambda.power(c)
        tsteps = parse_grid(args.tgrid, log=True)
        qsteps = parse_grid(args.qgrid, log=True)
        jobs = [("t", args.q, tsteps), ("q", args.t, qsteps)]
        reps = pmap(lambda j: afield.convergence(lam, args.epsilon, j[0], j[1], j[2], args.N), jobs, workers)
        rows = []
        ok = True
        msg = ""
        for (d, fixed, steps), r in zip(jobs, reps):
            for i, h in enumerate(steps):
                rows.append([d, repr(float(fixed)), f"{h:.3e}"] + [f"{r.errors[k][i]:.6e}" for k in ("s", "s+", "s-")]
                            + ["exact" if r.exact else f"{r.order:.4f}"])
            if not r.passed():
                ok = False
                msg = f"afield.convergence: direction {d} order {r.order}"
        return ok, _csv(rows, ["direction", "fixed", "step", "err_s", "err_s+", "err_s-", "order"]), msg
    if args.what == "relations":
        qts = parse_grid(args.qtgrid)
        angles = parse_grid(args.anglegrid)
        jobs = [(float(qt), float(a)) for qt in qts for a in angles]

        def run(job):
            qt, a = job
            m = modgen.build_principal_q(DeformationPoint(qt, 1.0), args.epsilon, np.exp(1j * a), args.N, args.margin)
            return max(algcheck.check_relations(m, args.tol), key=lambda r: r.residual)

        reps = pmap(run, jobs, workers)
        rows = [[repr(qt), repr(a), r.relation, f"{r.residual:.6e}", int(r.passed)] for (qt, a), r in zip(jobs, reps)]
        worst_i = int(np.argmax([r.residual for r in reps]))
        return (all(r.passed for r in reps), _csv(rows, ["qt", "angle", "worst_relation", "residual", "pass"]),
                f"algcheck.check_relations: {reps[worst_i].relation} {reps[worst_i].residual:.3e} at "
                f"(qt, angle) = {jobs[worst_i]}")
    raise ConfigError(f"unknown sweep {args.what!r}")


def cmd_field(args):
    from . import fieldsec

    if args.what == "paths":
        rows = []
        ok = True
        msg = ""
        for name, sec, fn, a, b in fieldsec.declared_paths():
            r = fieldsec.refinement_slope(sec, fn, a, b)
            good = r.passed(args.min_slope)
            ok &= good
            rows.append([name, str(sec), "exact" if r.exact else f"{r.slope:.4f}", f"{max(r.max_jumps):.3e}", int(good)])
            if not good:
                msg = f"fieldsec.refinement_slope: {name} slope {r.slope}"
        return ok, _csv(rows, ["path", "section", "slope", "max_jump", "pass"]), msg
    secs = ([fieldsec.Section.parse(args.section)] if args.section
            else fieldsec.all_sections(args.nmax))
    if args.what == "vanishing":
        r = fieldsec.check_vanishing(secs, args.q, args.t, args.nmax)
    elif args.what == "J":
        r = fieldsec.check_J_equivariance(secs, args.q, args.nmax, args.tol or 1e-12)
    elif args.what == "blocks":
        from .paramspace import SpectralPoint

        pts = [SpectralPoint.pri(args.q, args.t, -1, lam) for lam in (1.0, -1.0)]
        r = fieldsec.check_block_diagonal(secs, pts, args.nmax + 4, args.tol or 1e-12)
    else:
        raise ConfigError(f"unknown field check {args.what!r}")
    return (r.passed, _csv([[r.name, r.checked, f"{r.residual:.3e}", r.worst, int(r.passed)]],
                           ["check", "count", "residual", "worst", "pass"]),
            f"fieldsec.{r.name}: residual {r.residual:.3e} at {r.worst}")


def cmd_mackey(args):
    from . import mackey

    if args.what == "mu-table":
        return True, mackey.mu_table(args.q, args.nmax, args.resolution).to_json() + "\n", ""
    r = mackey.verify_mu(args.q, args.nmax, args.resolution)
    bad = [k for k, (ok, _) in r.checks.items() if not ok]
    return r.passed, r.to_csv(), f"mackey.verify_mu: failed {bad}"


def cmd_ktheory(args):
    from . import ktheory

    if args.what == "strata":
        led = ktheory.stratify(args.q, args.nmax, args.resolution)
        bad = [k for k, (ok, _) in led.checks.items() if not ok]
        return led.passed, led.to_csv(), f"ktheory.stratify: failed {bad}"
    if args.what == "ranks":
        led = ktheory.stratify(args.q, args.nmax, args.resolution)
        r = ktheory.verify_rank_claim(led)
        return r.passed, _csv([[r.checked, len(r.failures)]], ["checked", "failures"]), \
            f"ktheory.rank_profile: {r.failures[:3]}"
    s = ktheory.k_summary(args.q, args.nmax, args.resolution)
    return s.consistent, json.dumps(s.to_dict(), ensure_ascii=False, indent=1) + "\n", \
        f"ktheory.k_summary: inconsistent counts {s.graph_counts}"


# argument parser


def _module_flags(p):
    p.add_argument("family", nargs="?", default="principal",
                   choices=["principal", "discrete", "classical", "classical-discrete", "motion", "groupoid"])
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--epsilon", type=int, default=1, choices=[1, -1])
    p.add_argument("--sigma", type=int, default=1, choices=[1, -1])
    p.add_argument("--n", type=int, default=0)
    p.add_argument("--sign", type=int, default=1, choices=[1, -1])
    p.add_argument("--lambda", dest="lam", type=parse_complex, default=complex(0.0, 1.0))
    p.add_argument("--N", type=int, default=60)
    p.add_argument("--margin", type=int, default=4)


def _common(p):
    p.add_argument("--out", default="-", help="output path ('-' for stdout)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--tol", type=float, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsl2r", description="Deformed SL(2,R) truncated-module toolkit")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="build a truncated module and print it as JSON")
    _module_flags(p)
    _common(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("verify", help="relation, unitarity, weight and submodule checks")
    p.add_argument("what", choices=["relations", "unitarity", "weights", "submodule"])
    _module_flags(p)
    _common(p)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="parameter sweeps")
    p.add_argument("what", choices=["specialization", "relations"])
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--t", type=float, default=1.0)
    p.add_argument("--epsilon", type=int, default=1, choices=[1, -1])
    p.add_argument("--lambda-exp", default="i", help="c in lambda = q^(c t)")
    p.add_argument("--tgrid", default="1e-1:1e-4")
    p.add_argument("--qgrid", default="1e-1:1e-4")
    p.add_argument("--qtgrid", default="0.5,0.8,1.25,2")
    p.add_argument("--anglegrid", default=f"0:{math.pi}:25")
    p.add_argument("--N", type=int, default=20)
    p.add_argument("--margin", type=int, default=4)
    p.add_argument("--workers", type=int, default=None)
    _common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("field", help="field-section certificates")
    p.add_argument("what", choices=["paths", "vanishing", "J", "blocks"])
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--nmax", type=int, default=30)
    p.add_argument("--section", default=None, help="e.g. T_up(3); default: all sections with |n| <= nmax")
    p.add_argument("--min-slope", type=float, default=0.9)
    _common(p)
    p.set_defaults(func=cmd_field)

    p = sub.add_parser("mackey", help="the bijection mu")
    p.add_argument("what", choices=["mu-table", "verify"])
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--resolution", type=int, default=721)
    _common(p)
    p.set_defaults(func=cmd_mackey)

    p = sub.add_parser("ktheory", help="strata, rank claim and K-group summary")
    p.add_argument("what", choices=["strata", "ranks", "summary"])
    p.add_argument("--q", type=float, default=2.0)
    p.add_argument("--nmax", type=int, default=50)
    p.add_argument("--resolution", type=int, default=721)
    _common(p)
    p.set_defaults(func=cmd_ktheory)
    return ap


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        _check_config(args)
        np.random.seed(args.seed)
        ok, text, msg = args.func(args)
    except (ConfigError, QSL2RError, ValueError) as exc:
        print(f"qsl2r {args.command}: invalid configuration: {exc}", file=stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"qsl2r {args.command}: internal error: {type(exc).__name__}: {exc}", file=stderr)
        return EXIT_INTERNAL
    body = f"# config: {json.dumps(_config(args), sort_keys=True)}\n{text}"
    if args.out == "-":
        stdout.write(body)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(body)
    if not ok:
        print(f"qsl2r {args.command}: FAIL {msg}", file=stderr)
        return EXIT_FAIL
    return EXIT_OK


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
