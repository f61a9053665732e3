"""Command-line interface: ``hexsimp simplify``, ``hexsimp batch`` and ``hexsimp fixture``."""

import argparse
import json
import os
import sys

from . import fixtures
from .io import read_mesh, write_base_complex, write_mesh, write_trace
from .mesh import MeshError, scaled_jacobians
from .metrics import vdr
from .pipeline import CheckpointError, InfeasibleInputError, SimplifyConfig, resume, run
from .ranking import RankWeights

EXIT_OK, EXIT_ERROR, EXIT_INFEASIBLE = 0, 1, 2

FIXTURES = {
    "cube": lambda: fixtures.cube_mesh(3),
    "pillow": fixtures.pillow_mesh,
    "crossing-pillow": fixtures.crossing_pillow_mesh,
    "ball": fixtures.ball_mesh,
}


def _weights(text):
    try:
        k_sv, k_sd, k_sq = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("weights must be three comma-separated numbers") from None
    return k_sv, k_sd, k_sq


def _config(args):
    w = RankWeights()
    if args.weights:
        k_sv, k_sd, k_sq = args.weights
        w = RankWeights(k_sv=k_sv, k_sd=k_sd, k_sq=k_sq)
    return SimplifyConfig(r_h=args.rh, target_elements=args.target_elems,
                          target_reduction=args.target_reduction, weights=w,
                          feature_angle=args.feature_angle, seed=args.seed)


def _add_common(p):
    p.add_argument("--rh", type=float, default=0.01, help="Hausdorff budget r_h (default 0.01)")
    p.add_argument("--target-elems", type=float, default=1.0,
                   help="target element ratio r_|H| (default 1.0)")
    p.add_argument("--target-reduction", type=float, default=0.9,
                   help="target component reduction ratio N_s (default 0.9)")
    p.add_argument("--weights", type=_weights, help="k_sv,k_sd,k_sq")
    p.add_argument("--feature-angle", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--figures", metavar="DIR", help="render trace/quality PNGs into DIR")


def _simplify_one(path, out, args, cfg, stem=None):
    stem = stem or os.path.splitext(os.path.basename(out))[0]
    if getattr(args, "resume", False) and args.checkpoint and os.path.exists(args.checkpoint):
        mesh, report = resume(args.checkpoint, cfg, checkpoint=args.checkpoint,
                              score_path=getattr(args, "dump_scores", None))
    else:
        mesh, report = run(read_mesh(path), cfg, checkpoint=getattr(args, "checkpoint", None),
                           score_path=getattr(args, "dump_scores", None))
    per, _, _ = vdr(mesh)
    write_mesh(mesh, out, {"scaled_jacobian": scaled_jacobians(mesh), "vdr": per})
    report_path = getattr(args, "report", None) or os.path.splitext(out)[0] + "_report.json"
    with open(report_path, "w") as fh:
        fh.write(report.to_json(indent=2))
    write_trace(report.records, os.path.splitext(report_path)[0] + "_trace.csv")
    if getattr(args, "dump_base_complex", None):
        from .base_complex import extract_base_complex
        write_base_complex(extract_base_complex(mesh), args.dump_base_complex)
    if args.figures:
        from .plotting import render_report_figures
        render_report_figures(report.records, mesh, args.figures, stem)
    f = report.final
    print(f"{path} -> {out}: #H {report.initial['n_hexes']} -> {f['n_hexes']}, "
          f"#BC {report.initial['n_components']} -> {f['n_components']} "
          f"(R = {report.reduction_ratio:.4f}), HR {f['hr']:.3g}, MSJ {f['msj']:.4f}, "
          f"ASJ {f['asj']:.4f}")
    return report


def cmd_simplify(args):
    _simplify_one(args.input, args.output, args, _config(args))
    return EXIT_OK


def cmd_batch(args):
    os.makedirs(args.out_dir, exist_ok=True)
    cfg = _config(args)
    summary = []
    status = EXIT_OK
    for path in args.inputs:
        name = os.path.splitext(os.path.basename(path))[0]
        out = os.path.join(args.out_dir, name + "_simplified" + os.path.splitext(path)[1])
        try:
            rep = _simplify_one(path, out, args, cfg, name)
            summary.append({"input": path, "output": out, "reduction_ratio": rep.reduction_ratio,
                            **{k: rep.final[k] for k in ("n_hexes", "n_components", "hr", "msj",
                                                         "asj")}})
        except InfeasibleInputError as exc:
            print(f"{path}: infeasible input: {exc}", file=sys.stderr)
            status = max(status, EXIT_INFEASIBLE)
        except (OSError, MeshError, ValueError) as exc:
            print(f"{path}: error: {exc}", file=sys.stderr)
            status = max(status, EXIT_ERROR) if status != EXIT_INFEASIBLE else status
    with open(os.path.join(args.out_dir, "batch_summary.json"), "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    return status


def cmd_fixture(args):
    write_mesh(FIXTURES[args.name](), args.output)
    print(f"wrote {args.name} fixture to {args.output}")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="hexsimp",
                                     description="Hex-mesh singularity structure simplification")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simplify", help="simplify one mesh")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    _add_common(p)
    p.add_argument("--report", help="report JSON path (default <output>_report.json)")
    p.add_argument("--dump-scores", help="append per-candidate ranking scores to this CSV")
    p.add_argument("--dump-base-complex", help="write the output base complex as VTK polydata")
    p.add_argument("--checkpoint", help="write a checkpoint after every pass")
    p.add_argument("--resume", action="store_true", help="continue from --checkpoint if present")
    p.set_defaults(func=cmd_simplify)

    p = sub.add_parser("batch", help="simplify several meshes")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--out-dir", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("fixture", help="write a built-in test mesh")
    p.add_argument("name", choices=sorted(FIXTURES))
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InfeasibleInputError as exc:
        print(f"infeasible input: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (OSError, MeshError, CheckpointError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
