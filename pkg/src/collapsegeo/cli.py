"""Command-line interface.

Exit codes: 0 success, 2 validation failure (bad inputs, malformed configs,
size caps), 3 internal error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import harness
from .collapse import v_field
from .collapsing_graph import GraphParams, build_graph, graph_to_document
from .generators import FamilyConfig, build_family_limit, build_family_member
from .gh import SizeCapError, gh_exact, gh_upper, pointed_gh
from .space import (SpaceError, ValidationError, dump_document, load_document,
                    load_space, save_space, validate_space)


def _family_from_arg(value: str) -> FamilyConfig:
    if os.path.exists(value):
        return FamilyConfig.from_json(load_document(value))
    try:
        return harness.preset(value).family
    except ValidationError:
        raise ValidationError(
            f"--family expects a cls-family-1 file or a preset name; got {value!r}")


def cmd_generate(args) -> int:
    cfg = _family_from_arg(args.family)
    if args.resolution:
        cfg.resolution = args.resolution
    os.makedirs(args.out, exist_ok=True)
    ks: list
    if args.k == "all":
        ks = list(range(len(cfg.schedule))) + ["limit"]
    elif args.k == "limit":
        ks = ["limit"]
    else:
        ks = [int(args.k)]
    for k in ks:
        if k == "limit":
            limit = build_family_limit(cfg)
            if limit is None:
                print("family declares no limit; skipping")
                continue
            path = os.path.join(args.out, "space_limit.json")
            save_space(limit, path)
            print(f"wrote {path} ({limit.n_points} points)")
        else:
            member = build_family_member(cfg, k)
            path = os.path.join(args.out, f"space_{k}.json")
            save_space(member.space, path)
            print(f"wrote {path} ({member.space.n_points} points)")
    return 0


def cmd_analyze(args) -> int:
    space = load_space(args.space)
    report = validate_space(space)
    if not report.ok:
        for v in report.violations:
            print(f"violation: {v}", file=sys.stderr)
        raise ValidationError("space failed validation")
    fld = v_field(space)
    eps_grid = [float(x) for x in args.eps_grid.split(",")] if args.eps_grid else []
    print(f"points: {space.n_points}  mass: {space.total_mass!r}")
    if not space.is_empty:
        print(f"sup v: {float(fld.v.max())!r}  max nu: {float(fld.nu.max())!r}")
    for eps in eps_grid:
        print(f"thick points (nu > {eps}): {int((fld.nu > eps).sum())}")
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(fld.to_csv())
        print(f"wrote {args.out}")
    return 0


def cmd_graph(args) -> int:
    space = load_space(args.space)
    fld = v_field(space)
    params = GraphParams(eps=args.eps, lambda_minus=args.lambda_minus,
                         lambda_zero=args.lambda_zero, lambda_plus=args.lambda_plus,
                         hop_radius=args.hop, theta_alpha=args.theta_alpha)
    g = build_graph(space, fld, params)
    doc = graph_to_document(g)
    if args.out:
        dump_document(doc, args.out)
        print(f"wrote {args.out}")
    else:
        json.dump(doc, sys.stdout, indent=1)
        print()
    return 0


def cmd_gh(args) -> int:
    x = load_space(args.x)
    y = load_space(args.y)
    if args.pointed is not None:
        if x.basepoint is None or y.basepoint is None:
            raise ValidationError("pointed mode needs basepoints in both spaces")
        est = pointed_gh(x, x.basepoint, y, y.basepoint, args.pointed,
                         effort=args.effort, seed=args.seed)
    elif args.mode == "exact":
        est = gh_exact(x, y)
    else:
        est = gh_upper(x, y, effort=args.effort, seed=args.seed)
    doc = est.to_json()
    if args.out:
        dump_document(doc, args.out)
        print(f"wrote {args.out}")
    else:
        json.dump(doc, sys.stdout, indent=1)
        print()
    return 0


def cmd_run(args) -> int:
    if args.preset:
        cfg = harness.preset(args.preset)
    elif args.config:
        cfg = harness.ExperimentConfig.from_json(load_document(args.config))
    else:
        raise ValidationError("run needs --config FILE or --preset NAME")
    handles = harness.run_experiment(cfg, args.out)
    print(f"experiment complete: {len(handles['manifest']['files'])} artifacts in {args.out}")
    if args.plots:
        written = harness.emit_plots(handles)
        print(f"plots: {', '.join(written) if written else 'none'}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="collapsegeo",
                                 description="volume-collapse analysis on sampled surfaces")
    sub = ap.add_subparsers(dest="cmd", required=True)

    g = sub.add_parser("generate", help="build family members into space files")
    g.add_argument("--family", required=True,
                   help="cls-family-1 config file or preset name")
    g.add_argument("--k", default="all", help="member index, 'limit', or 'all'")
    g.add_argument("--out", required=True)
    g.add_argument("--resolution", type=int, default=None)
    g.set_defaults(func=cmd_generate)

    a = sub.add_parser("analyze", help="collapse field of a space file")
    a.add_argument("--space", required=True)
    a.add_argument("--eps-grid", default="", help="comma separated thresholds")
    a.add_argument("--out", default=None, help="write field CSV here")
    a.set_defaults(func=cmd_analyze)

    gr = sub.add_parser("graph", help="collapsing graph of a space file")
    gr.add_argument("--space", required=True)
    gr.add_argument("--eps", type=float, required=True)
    gr.add_argument("--lambda-minus", type=float, default=0.25)
    gr.add_argument("--lambda-zero", type=float, default=0.5)
    gr.add_argument("--lambda-plus", type=float, default=2.0)
    gr.add_argument("--hop", type=float, default=None)
    gr.add_argument("--theta-alpha", type=float, default=None)
    gr.add_argument("--out", default=None)
    gr.set_defaults(func=cmd_graph)

    gh = sub.add_parser("gh", help="Gromov-Hausdorff estimate between two spaces")
    gh.add_argument("--x", required=True)
    gh.add_argument("--y", required=True)
    gh.add_argument("--mode", choices=["exact", "upper"], default="upper")
    gh.add_argument("--pointed", type=float, default=None,
                    help="pointed mode with this ball radius")
    gh.add_argument("--effort", type=int, default=4)
    gh.add_argument("--seed", type=int, default=0)
    gh.add_argument("--out", default=None)
    gh.set_defaults(func=cmd_gh)

    r = sub.add_parser("run", help="run a full experiment pipeline")
    r.add_argument("--config", default=None, help="cls-exp-1 config file")
    r.add_argument("--preset", default=None,
                   help=f"preset name ({', '.join(harness.preset_names())})")
    r.add_argument("--out", required=True)
    r.add_argument("--plots", action="store_true")
    r.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, SizeCapError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except SpaceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
