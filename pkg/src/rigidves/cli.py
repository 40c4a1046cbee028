"""Command-line front end.

Subcommands: verify | diagnose | uniformize | invert | burgers | reduce.
Global flags: --grid x0,x1,y0,y1,nx,ny --order {2,4} --tol --out --format
{json,table}. Exit codes: 0 pass, 1 usage/config error, 2 check failure
(including the reduce rigidity refusal), 3 numerical failure (Newton,
shocks, ellipticity).

Report paths write CSV fields plus PNG figures next to them; --no-figures
keeps the pure data path. Identical configurations produce byte-identical
CSVs and reports except for the `generated_at` timestamp.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import io as rio
from .burgers import burgers_field
from .canonical import StructureProvider, build_chart, injectivity_scan, \
    invert_xi, jacobian_check
from .errors import (
    DegenerateFiberError,
    DomainError,
    EllipticityError,
    EllipticityLostError,
    GridUnderresolvedError,
    InversionError,
    NearShockError,
    NearSingularChartError,
    NewtonConvergenceError,
    NoInitialColumnError,
    NonRigidStructureError,
    RigidvesError,
    SeedError,
)
from .grids import ComplexGridField, GridSpec
from .seedlang import ExprSeed, make_builtin_seed, parse_constant
from .spectral import lambda_from_structure, transport_residual
from .structures import structure_from_json
from .vekua import (
    PassengerField,
    VekuaProblem,
    reduce_problem,
    reduced_residual,
)

USAGE_ERROR, CHECK_FAILURE, NUMERICAL_FAILURE = 1, 2, 3

_USAGE_ERRORS = (SeedError, DomainError, DegenerateFiberError,
                 GridUnderresolvedError, ValueError, KeyError)
_NUMERICAL_ERRORS = (NearShockError, NewtonConvergenceError,
                     EllipticityLostError, EllipticityError, InversionError,
                     NearSingularChartError, NoInitialColumnError)


def _parse_grid(text: str) -> GridSpec:
    parts = text.split(",")
    if len(parts) != 6:
        raise ValueError(f"--grid wants x0,x1,y0,y1,nx,ny; got {text!r}")
    x0, x1, y0, y1 = (float(p) for p in parts[:4])
    nx, ny = int(parts[4]), int(parts[5])
    return GridSpec(x0, x1, y0, y1, nx, ny)


def _parse_params(text: str | None) -> dict:
    params = {}
    if not text:
        return params
    for item in text.split(","):
        if not item.strip():
            continue
        if "=" not in item:
            raise ValueError(f"--params entries are k=v; got {item!r}")
        key, value = item.split("=", 1)
        params[key.strip()] = parse_constant(value.strip())
    return params


def _real_params(params: dict) -> dict:
    return {k: (v.real if isinstance(v, complex) and v.imag == 0 else v)
            for k, v in params.items()}


def _build_seed(args):
    params = _parse_params(getattr(args, "params", None))
    if getattr(args, "seed_expr", None):
        return ExprSeed(args.seed_expr, params)
    return make_builtin_seed(args.seed, _real_params(params))


def _resolve_lambda(args, spec):
    """One structure source -> lambda field (+chart inputs)."""
    sources = [bool(getattr(args, name, None))
               for name in ("structure", "structure_json", "seed", "seed_expr")]
    if sum(sources) != 1:
        raise ValueError(
            "exactly one structure source required: --structure, "
            "--structure-json, --seed, or --seed-expr"
        )
    if getattr(args, "seed", None) or getattr(args, "seed_expr", None):
        seed = _build_seed(args)
        solution = burgers_field(seed, spec, tol=args.tol)
        return {
            "field": solution.field,
            "J": solution.J,
            "solution": solution,
            "provider": solution.provider(),
            "description": f"burgers[{seed.describe()}]",
        }
    if getattr(args, "structure_json", None):
        doc = json.loads(Path(args.structure_json).read_text())
        structure = structure_from_json(doc, csv_reader=rio.read_field_csv)
    else:
        doc = {"kind": "named", "name": args.structure,
               "params": _real_params(
                   _parse_params(getattr(args, "params", None)))}
        structure = structure_from_json(doc)
    grid_structure = structure.on_grid(spec)
    provider = None
    try:
        provider = StructureProvider(structure)
    except (InversionError, DomainError, NotImplementedError):
        provider = None
    return {
        "field": lambda_from_structure(grid_structure),
        "J": None,
        "solution": None,
        "provider": provider,
        "description": structure.description,
    }


def _emit(args, payload: dict) -> None:
    if args.format == "json":
        print(json.dumps(payload, indent=2, sort_keys=True,
                         default=rio._json_default))
    else:
        for key in sorted(payload):
            print(f"{key}: {payload[key]}")


def _out_dir(args) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- subcommands -------------------------------------------------------------


def cmd_diagnose(args) -> int:
    spec = _parse_grid(args.grid)
    source = _resolve_lambda(args, spec)
    diag = transport_residual(source["field"], args.order)
    payload = diag.to_json()
    payload["structure"] = source["description"]
    _emit(args, payload)
    out = _out_dir(args)
    if out:
        rio.write_report_json(out / "diagnose.json", payload)
        if not args.no_figures:
            from .figures import save_real_figure

            save_real_figure(out / "rho_T.png", spec, diag.rho_T,
                             diag.T.mask, "rho_T = |T| / Im(lambda)^2")
    return 0


def cmd_uniformize(args) -> int:
    spec = _parse_grid(args.grid)
    source = _resolve_lambda(args, spec)
    chart = build_chart(source["field"], args.order)
    out = _out_dir(args)
    if out is None:
        raise ValueError("uniformize writes files; pass --out DIR")
    rio.write_real_csv(out / "p.csv", spec, chart.p, chart.mask)
    rio.write_real_csv(out / "q.csv", spec, chart.q, chart.mask)
    rio.write_field_csv(out / "phi.csv", chart.phi)
    rio.write_real_csv(out / "jacdet.csv", spec, chart.jac_det, chart.mask)

    diag = transport_residual(source["field"], args.order)
    scan = injectivity_scan(chart)
    jrep = jacobian_check(chart, args.order, J=source["J"])
    payload = {
        "structure": source["description"],
        "grid": vars_spec(spec),
        "rigidity": diag.to_json(),
        "phi_zero_points": int(chart.phi_zero_mask.sum()),
        "min_abs_phi": float(np.min(np.abs(chart.phi.values)[chart.mask])),
        "min_jac_det": jrep.min_jac_det,
        "max_fd_vs_formula_jacobian": jrep.max_fd_vs_formula,
        "axis_normalization_residual": jrep.axis_residual,
        "injectivity": {
            "verdict": scan.verdict,
            "collisions": len(scan.collisions),
        },
        "files": ["p.csv", "q.csv", "phi.csv", "jacdet.csv"],
    }
    rio.write_report_json(out / "report.json", payload)
    if not args.no_figures:
        from .figures import save_chart_figures

        save_chart_figures(out, chart)
    _emit(args, {"overall": "ok", "out": str(out),
                 "rigid": diag.rigid, "injectivity": scan.verdict})
    return 0


def cmd_invert(args) -> int:
    spec = _parse_grid(args.grid)
    source = _resolve_lambda(args, spec)
    if source["provider"] is None:
        raise ValueError("this structure source offers no pointwise lambda; "
                         "use a named structure or a seed")
    tre, tim = (float(v) for v in args.target.split(","))
    gx, gy = (float(v) for v in args.guess.split(","))
    result = invert_xi(source["provider"], complex(tre, tim), (gx, gy),
                       tol=args.tol)
    payload = {
        "x": result.x, "y": result.y,
        "iterations": result.iterations, "residual": result.residual,
        "target": {"re": tre, "im": tim},
    }
    _emit(args, payload)
    out = _out_dir(args)
    if out:
        rio.write_report_json(out / "invert.json", payload)
    return 0


def cmd_burgers(args) -> int:
    spec = _parse_grid(args.grid)
    if not (getattr(args, "seed", None) or getattr(args, "seed_expr", None)):
        raise ValueError("burgers needs --seed NAME or --seed-expr EXPR")
    seed = _build_seed(args)
    solution = burgers_field(seed, spec, tol=args.tol)
    out = _out_dir(args)
    if out is None:
        raise ValueError("burgers writes files; pass --out DIR")
    rio.write_field_csv(out / "lambda.csv", solution.field.lam)
    rio.write_field_csv(out / "J.csv", solution.J)
    diag = transport_residual(solution.field, args.order)
    payload = {
        "seed": seed.describe(),
        "grid": vars_spec(spec),
        "newton_tol": solution.tol,
        "self_certification": solution.self_certification(),
        "mask_reasons": solution.reason_counts(),
        "max_newton_iterations": int(solution.newton_iters.max()),
        "rigidity": diag.to_json(),
        "files": ["lambda.csv", "J.csv"],
    }
    rio.write_report_json(out / "report.json", payload)
    if not args.no_figures:
        from .figures import save_field_figure

        save_field_figure(out / "lambda.png", solution.field.lam, "lambda")
        save_field_figure(out / "J.png", solution.J, "J = 1 + h'(w0) x")
    _emit(args, {"overall": "ok", "out": str(out),
                 "self_certification": payload["self_certification"],
                 "unmasked_fraction": float(solution.mask.mean())})
    return 0


def _coefficient_field(entry, spec) -> ComplexGridField:
    from .seedlang import eval_field, parse_field_expr

    if isinstance(entry, str):
        entry = {"expr": entry}
    if "csv" in entry:
        field = rio.read_field_csv(entry["csv"])
        if field.spec != spec:
            raise ValueError("coefficient CSV grid differs from --grid")
        return field
    if "expr" in entry:
        node = parse_field_expr(entry["expr"])
        params = {k: parse_constant(str(v)) if isinstance(v, str) else complex(v)
                  for k, v in entry.get("params", {}).items()}
        X, Y = spec.mesh()
        return ComplexGridField(spec, eval_field(node, X, Y, params))
    raise ValueError("coefficient entries need 'expr' or 'csv'")


def _passenger_from_spec(text: str, chart, spec) -> PassengerField:
    if text == "xibar":
        return PassengerField.xibar(chart)
    if text.startswith("g:"):
        return PassengerField.from_generator(chart, text[2:])
    if text.startswith("expr:"):
        return PassengerField.from_field_expr(spec, text[5:])
    raise ValueError(
        "f-spec is 'xibar', 'g:<expr in w>', or 'expr:<expr in x,y>'"
    )


def cmd_reduce(args) -> int:
    spec = _parse_grid(args.grid)
    doc = json.loads(Path(args.problem).read_text())
    ns = argparse.Namespace(
        structure=None, structure_json=None, seed=None, seed_expr=None,
        params=None, tol=args.tol,
    )
    if "structure" in doc:
        structure = structure_from_json(doc["structure"],
                                        csv_reader=rio.read_field_csv)
        source = {
            "field": lambda_from_structure(structure.on_grid(spec)),
            "J": None, "description": structure.description,
        }
    elif "seed" in doc:
        seed_doc = doc["seed"]
        params = {k: parse_constant(str(v))
                  for k, v in seed_doc.get("params", {}).items()}
        if "expr" in seed_doc:
            seed = ExprSeed(seed_doc["expr"], params)
        else:
            seed = make_builtin_seed(seed_doc["name"], _real_params(params))
        solution = burgers_field(seed, spec, tol=args.tol)
        source = {"field": solution.field, "J": solution.J,
                  "description": f"burgers[{seed.describe()}]"}
    else:
        raise ValueError("problem JSON needs 'structure' or 'seed'")
    del ns

    coeffs = doc.get("coefficients", {})
    A = _coefficient_field(coeffs.get("A", "0"), spec)
    B = _coefficient_field(coeffs.get("B", "0"), spec)
    F = _coefficient_field(coeffs.get("F", "0"), spec)
    chart = build_chart(source["field"], args.order)
    problem = VekuaProblem(source["field"], A, B, F)
    reduced = reduce_problem(problem, chart, args.order)

    out = _out_dir(args)
    if out is None:
        raise ValueError("reduce writes files; pass --out DIR")
    rio.write_field_csv(out / "Aprime.csv", reduced.A_prime)
    rio.write_field_csv(out / "Bprime.csv", reduced.B_prime)
    rio.write_field_csv(out / "Fprime.csv", reduced.F_prime)
    payload = {
        "structure": source["description"],
        "grid": vars_spec(spec),
        "rigidity": reduced.rho_report,
        "phi_zero_points": reduced.phi_zero_count,
        "files": ["Aprime.csv", "Bprime.csv", "Fprime.csv"],
    }
    if args.check:
        passenger = _passenger_from_spec(args.check, chart, spec)
        res = reduced_residual(passenger, reduced, args.order)
        payload["check"] = {
            "f": passenger.description,
            "max_residual": res["max"],
            "rms_residual": res["rms"],
        }
    rio.write_report_json(out / "report.json", payload)
    if not args.no_figures:
        from .figures import save_field_figure

        save_field_figure(out / "Aprime.png", reduced.A_prime, "A'")
        save_field_figure(out / "Bprime.png", reduced.B_prime, "B'")
        save_field_figure(out / "Fprime.png", reduced.F_prime, "F'")
    summary = {"overall": "ok", "out": str(out),
               "phi_zero_points": reduced.phi_zero_count}
    if args.check:
        summary["check_max_residual"] = payload["check"]["max_residual"]
    _emit(args, summary)
    return 0


def cmd_verify(args) -> int:
    from .verify import run_verify

    spec = _parse_grid(args.grid)
    user_seed = None
    if getattr(args, "seed", None) or getattr(args, "seed_expr", None):
        user_seed = _build_seed(args)
    report = run_verify(spec, args.order, user_seed, inject=args.inject)
    if args.format == "json":
        print(json.dumps(report.to_json(), indent=2, sort_keys=True,
                         default=rio._json_default))
    else:
        print(report.to_table())
    out = _out_dir(args)
    if out:
        rio.write_report_json(out / "verify_report.json", report.to_json())
        if not args.no_figures:
            from .figures import save_convergence_figure

            save_convergence_figure(out / "convergence.png",
                                    report.convergence_series,
                                    "identity residuals under refinement")
    return 0 if report.overall_pass else CHECK_FAILURE


def vars_spec(spec: GridSpec) -> dict:
    return {"x_min": spec.x_min, "x_max": spec.x_max,
            "y_min": spec.y_min, "y_max": spec.y_max,
            "nx": spec.nx, "ny": spec.ny}


# -- parser -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rigidves",
        description=(
            "Arithmetic uniformization of rigid variable elliptic "
            "structures: diagnostics, canonical charts, Burgers transform, "
            "and Vekua reduction, with a finite-difference verification "
            "suite."
        ),
        epilog=(
            "Seed expression grammar: variables w; parameters by name; "
            "literals 1.5, 2i, i; operators + - * / and ^ with integer "
            "exponents (unary minus binds tightest, then ^, then * /, then "
            "+ -, all left-associative); functions exp, log, sin, cos, "
            "sqrt with principal branches (cut on the negative real axis). "
            "Example: --seed-expr 'w + delta*1i' --params delta=0.1"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, with_source=True):
        p.add_argument("--grid", default="-0.5,2,-1,1,201,201",
                       help="x0,x1,y0,y1,nx,ny (default desk grid)")
        p.add_argument("--order", type=int, choices=(2, 4), default=2,
                       help="finite-difference stencil order")
        p.add_argument("--tol", type=float, default=1e-12,
                       help="Newton tolerance")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--format", choices=("json", "table"), default="table")
        p.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering next to CSV output")
        if with_source:
            p.add_argument("--structure",
                           choices=("constant", "delta_family",
                                    "custom_lambda"))
            p.add_argument("--structure-json", dest="structure_json")
            p.add_argument("--seed", choices=("delta", "affine", "exp"))
            p.add_argument("--seed-expr", dest="seed_expr")
            p.add_argument("--params", help="k=v[,k=v...]; values may be "
                                            "complex literals like 1+2i")

    p = sub.add_parser("verify", help="run the full identity suite")
    common(p)
    p.add_argument("--inject", choices=("phi_factorization",), default=None,
                   help="testing hook: corrupt a pipeline stage so the "
                        "named check must fail")
    p.set_defaults(fn=cmd_verify)

    p = sub.add_parser("diagnose", help="rigidity diagnostics rho_T")
    common(p)
    p.set_defaults(fn=cmd_diagnose)

    p = sub.add_parser("uniformize",
                       help="emit p, q, Phi, jac_det for the canonical chart")
    common(p)
    p.set_defaults(fn=cmd_uniformize)

    p = sub.add_parser("invert", help="Newton-invert xi at a target value")
    common(p)
    p.add_argument("--target", required=True, help="re,im")
    p.add_argument("--guess", required=True, help="x,y")
    p.set_defaults(fn=cmd_invert)

    p = sub.add_parser("burgers",
                       help="solve lambda = h(y - lambda x) over the grid")
    common(p)
    p.set_defaults(fn=cmd_burgers)

    p = sub.add_parser("reduce",
                       help="reduce a rigid Vekua problem to standard form")
    common(p)
    p.add_argument("--problem", required=True,
                   help="problem JSON: structure/seed spec plus coefficient "
                        "expressions in x,y or CSV paths")
    p.add_argument("--check", default=None,
                   help="also measure the reduced residual of this solution "
                        "candidate: xibar | g:<expr in w> | expr:<expr>")
    p.set_defaults(fn=cmd_reduce)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return USAGE_ERROR if exc.code not in (0, None) else 0
    try:
        return args.fn(args)
    except NonRigidStructureError as exc:
        payload = {"error": str(exc)}
        if exc.diagnostics is not None:
            payload["rho_T_report"] = exc.diagnostics.to_json()
        print(json.dumps(payload, indent=2, sort_keys=True), file=sys.stderr)
        return CHECK_FAILURE
    except _NUMERICAL_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return NUMERICAL_FAILURE
    except _USAGE_ERRORS as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except RigidvesError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
