"""Command line driver for single runs, sweeps, checks, and exports."""

import argparse
import json
import sys

import numpy as np

from . import exports
from . import fem
from . import mesh as msh
from . import optimizer as opt
from . import sensitivity as sens
from . import study
from . import tree as itree
from .errors import (MmtopoError, NewtonDivergence, SingularSystem,
                     SolverFailure)


class _Parser(argparse.ArgumentParser):
    # usage problems are exit code 1; solver problems are exit code 2
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _schema_epilog():
    return ("config file: JSON with the sections below (all optional, "
            "defaults shown)\n"
            + json.dumps(study.default_config_dict(), indent=2))


def build_parser():
    parser = _Parser(
        prog="mmtopo",
        description="Multi-material rotor pole optimization toolkit.",
        epilog=_schema_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND",
                                parser_class=_Parser, required=True)

    p = sub.add_parser("optimize", help="run one optimization")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--gamma", type=float, default=None,
                   help="objective blend in [-1, 1]")
    p.add_argument("--domain", default=None,
                   help=f"one of {', '.join(study.DOMAIN_NAMES)}")
    p.add_argument("--output", default=None, help="output directory")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("sweep", help="gamma sweep over configured domains")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check-gradients",
                       help="adjoint vs finite-difference gate")
    p.add_argument("--elements", type=int, default=50,
                   help="target element count of the check mesh")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--gamma", type=float, default=0.3)
    p.add_argument("--sample", type=int, default=None,
                   help="probe only this many components (default: all)")
    p.set_defaults(func=cmd_check_gradients)

    p = sub.add_parser("export", help="write a VTK view of a saved design")
    p.add_argument("--design", required=True, help="design .npz file")
    p.add_argument("--output", required=True, help="VTK output path")
    p.add_argument("--config", help="JSON config file (mesh/materials)")
    p.add_argument("--no-solve", action="store_true",
                   help="skip the field solve (design arrays only)")
    p.set_defaults(func=cmd_export)

    p = sub.add_parser("mesh-info", help="print mesh statistics")
    p.add_argument("--config", help="JSON config file")
    p.set_defaults(func=cmd_mesh_info)
    return parser


def _load_config(args):
    if getattr(args, "config", None):
        return study.StudyConfig.load(args.config)
    return study.StudyConfig.from_dict({})


def cmd_optimize(args):
    config = _load_config(args)
    domain = args.domain or config.domains[0]
    gamma = args.gamma if args.gamma is not None \
        else config.optimizer.get("gamma", 1.0)
    record = study.run_single(config, domain, gamma,
                              output_dir=args.output)
    j = sens.objective(record["phi_plus"], record["phi_minus"], gamma) \
        if np.isfinite(record["phi_plus"]) else float("nan")
    print(f"domain       {record['domain']}")
    print(f"gamma        {gamma:+.6f}")
    print(f"iterations   {record['iterations']}")
    print(f"termination  {record['termination']}")
    print(f"phi_plus     {record['phi_plus']:.6e} Wb/m")
    print(f"phi_minus    {record['phi_minus']:.6e} Wb/m")
    print(f"objective    {j:.6e} Wb/m")
    print(f"design       {record['design_path']}")
    return 2 if record["termination"] == "solver_failure" else 0


def cmd_sweep(args):
    config = _load_config(args)
    records = study.gamma_sweep(config)
    if not records:
        print("empty gamma range, nothing to do")
        return 0
    for rec in records:
        print(f"{rec.domain:<12} gamma {rec.gamma:+.3f}  "
              f"phi+ {rec.phi_plus:+.4e}  phi- {rec.phi_minus:+.4e}  "
              f"sd0 {rec.sd0:.4f}  [{rec.termination}]")
    print(f"\nrecords: {config.output_dir}/records.csv")
    for domain, rec in sorted(study.best_records(records).items()):
        print(f"best {domain:<12} sd0 {rec.sd0:.4f} at gamma {rec.gamma:+.3f}")
    return 0


def cmd_check_gradients(args):
    mesh = msh.generate_sector_mesh(target_element_count=args.elements)
    n = mesh.design_elements.size

    linear_tree = study.linear_check_tree()
    rho = study.random_design(linear_tree, n, seed=args.seed)
    worst_linear = sens.finite_difference_check(
        mesh, linear_tree, rho, gamma=args.gamma, sample=args.sample,
        seed=args.seed)
    print(f"linear materials : max relative error {worst_linear:.3e} "
          f"(tolerance 1e-4)")

    rotor_tree = itree.default_rotor_tree()
    rho = study.random_design(rotor_tree, n, seed=args.seed + 1)
    worst_nonlinear = sens.finite_difference_check(
        mesh, rotor_tree, rho, gamma=args.gamma, sample=args.sample,
        seed=args.seed)
    print(f"nonlinear steel  : max relative error {worst_nonlinear:.3e} "
          f"(tolerance 1e-3)")

    ok = worst_linear <= 1e-4 and worst_nonlinear <= 1e-3
    print("PASS" if ok else "FAIL")
    return 0 if ok else 2


def cmd_export(args):
    config = _load_config(args)
    domain, _, filter_radius, raw = study.load_design(args.design)
    tree = study.domain_tree(domain, study.build_catalogue(config))
    mesh = study.build_mesh(config)
    field = opt.make_field(tree, mesh, raw, filter_radius)
    state = None
    if not args.no_solve:
        state = fem.solve_newton(mesh, tree, field.filtered, +1.0)
    exports.export_vtk(mesh, tree, field, args.output, state=state)
    print(f"wrote {args.output}")
    return 0


def cmd_mesh_info(args):
    config = _load_config(args)
    mesh = study.build_mesh(config)
    areas = mesh.areas()
    de = mesh.design_elements
    r_probe = np.linalg.norm(mesh.nodes[mesh.probe_master])
    print(f"nodes            {mesh.n_nodes}")
    print(f"elements         {mesh.n_elements}")
    print(f"design elements  {de.size}")
    print(f"airgap elements  {mesh.n_elements - de.size}")
    print(f"design area      {areas[de].sum():.6e} m^2")
    print(f"total area       {areas.sum():.6e} m^2")
    print(f"mean edge        {opt.mean_design_edge(mesh):.6e} m")
    print(f"radii            {mesh.r_shaft} / {mesh.r_rotor} / {mesh.r_outer} m")
    print(f"pole angle       {np.rad2deg(mesh.pole_angle):.3f} deg")
    print(f"flux probes      nodes {mesh.probe_master}, {mesh.probe_slave} "
          f"at r = {r_probe:.6e} m")
    return 0


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        return args.func(args)
    except (NewtonDivergence, SingularSystem, SolverFailure) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return 2
    except MmtopoError as e:
        print(f"error: {e}", file=sys.stderr)
        print(f"run 'mmtopo --help' for the config schema", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
