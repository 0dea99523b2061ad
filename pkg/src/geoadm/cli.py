"""Command line entry point: ``geoadm <subcommand> ...``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import hyperbolicity as hy
from .config import ConfigError, load_config
from .evolution import NumericalAbort
from .geometry import residual_report
from .harness import EXIT_ABORT, EXIT_CHECK, EXIT_CONFIG, EXIT_OK, run_checks, run_convergence, run_evolve
from .norms import bs_norm, energy, hs_norm
from .state import StateError, read_snapshot, validate

log = logging.getLogger("geoadm")


def _load(args):
    cfg = load_config(args.config)
    if getattr(args, "seed", None) is not None:
        cfg = replace(cfg, seed=args.seed)
    return cfg


def cmd_evolve(args) -> int:
    cfg = _load(args)
    out = args.out or cfg.directory
    run = run_evolve(cfg, out)
    log.info("finished %d steps, dt=%g, output in %s", run.steps, run.dt, out)
    return EXIT_OK


def cmd_convergence(args) -> int:
    cfg = _load(args)
    res = run_convergence(cfg, args.levels)
    rows = res.to_rows()
    keys = list(rows[0].keys())
    w = csv.DictWriter(sys.stdout, fieldnames=keys, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=keys)
            w.writeheader()
            w.writerows(rows)
    return EXIT_OK


def cmd_check_hyperbolicity(args) -> int:
    sym = hy.assemble_symbol()
    err, where = sym.asymmetry()
    ok = err == 0
    print(f"symbol symmetric: {'yes' if ok else 'no, first defect at ' + str(where)}")
    records = [{"check": "symmetric", "ok": ok, "defect": err}]
    if ok:
        for a in range(3):
            xi = np.eye(3)[a]
            sp = hy.characteristic_speeds(xi, sym)
            print(f"speeds along e_{a + 1}: " + " ".join(f"{v:+.6f}" for v in sp))
            records.append({"check": "speeds", "direction": a + 1, "speeds": sp.tolist()})
        gb = hy.classify_good_bad(sym)
        print("good: " + ", ".join(gb["good"]))
        print("bad:  " + ", ".join(gb["bad"]))
        print(f"normal structure {'ok' if gb['ok'] else 'BROKEN'}")
        records.append({"check": "good_bad", "ok": gb["ok"], "good": list(gb["good"]),
                        "bad": list(gb["bad"])})
        mis = hy.symbol_jacobian_mismatch(symbol=sym)
        print(f"symbol vs right-hand side: max mismatch {mis:.3e}")
        records.append({"check": "jacobian", "ok": mis <= 1e-7, "mismatch": mis})
        ok = ok and gb["ok"] and mis <= 1e-7
    for r in records:
        print(json.dumps(r))
    return EXIT_OK if ok else EXIT_CHECK


def cmd_check_identities(args) -> int:
    results = run_checks(seed=args.seed or 0)
    for r in results:
        print(f"{'PASS' if r.ok else 'FAIL'}  {r.name}: {r.detail}")
    for r in results:
        print(r.to_json())
    return EXIT_OK if all(r.ok for r in results) else EXIT_CHECK


def _periodic(flag: str | None):
    if not flag:
        return (True, True, True)
    return tuple(c == "p" for c in flag)


def cmd_norms(args) -> int:
    st = read_snapshot(args.snapshot, _periodic(args.topology))
    s = args.s
    KG = np.concatenate([st.K6, st.data[24:33]])
    print(f"t = {st.t!r}")
    print(f"energy = {energy(st)!r}")
    print(f"hs{min(s, 2)}(K, G) = {hs_norm(KG, min(s, 2), st)!r}")
    print(f"bs{s}(K, G) = {bs_norm(lambda x: np.concatenate([x.K6, x.data[24:33]]), s, st)!r}")
    return EXIT_OK


def cmd_inspect(args) -> int:
    st = read_snapshot(args.snapshot, _periodic(args.topology))
    g = st.grid
    print(f"grid n = {g.n}, h = {g.h}, t = {st.t!r}")
    d = validate(st)
    print(f"frame/coframe drift {d.drift_max:.3e}, min |det f| {d.det_min:.6g}")
    r = residual_report(st)
    for k, v in zip(r.columns(), r.values()):
        print(f"{k:>14s} {v:.6e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="geoadm", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    e = sub.add_parser("evolve", help="evolve a configuration")
    e.add_argument("config")
    e.add_argument("--out", help="output directory (default from config)")
    e.add_argument("--seed", type=int)
    e.set_defaults(func=cmd_evolve)

    c = sub.add_parser("convergence", help="refinement study with observed orders")
    c.add_argument("config")
    c.add_argument("--levels", type=int, default=3)
    c.add_argument("--csv")
    c.add_argument("--seed", type=int)
    c.set_defaults(func=cmd_convergence)

    h = sub.add_parser("check-hyperbolicity", help="symbol symmetry, speeds and normal structure")
    h.set_defaults(func=cmd_check_hyperbolicity)

    i = sub.add_parser("check-identities", help="structural and geometric identity checks")
    i.add_argument("--seed", type=int)
    i.set_defaults(func=cmd_check_identities)

    n = sub.add_parser("norms", help="energy and norms of a snapshot")
    n.add_argument("snapshot")
    n.add_argument("--s", type=int, default=2)
    n.add_argument("--topology", help="three letters p/b, e.g. ppb for a bounded third axis")
    n.set_defaults(func=cmd_norms)

    s = sub.add_parser("inspect", help="header and residuals of a snapshot")
    s.add_argument("snapshot")
    s.add_argument("--topology", help="three letters p/b, e.g. ppb for a bounded third axis")
    s.set_defaults(func=cmd_inspect)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error:\n{exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalAbort as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    except (StateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
