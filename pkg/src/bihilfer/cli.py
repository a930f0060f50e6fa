"""Command-line front end.

Exit codes: 0 all checks passed, 1 usage or configuration error,
2 verification failure, 3 singular mode.
"""

from __future__ import annotations

import argparse
import os
import sys
from contextlib import nullcontext
from pathlib import Path

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_SINGULAR = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _threads(n: int | None):
    n = n if n is not None else os.environ.get("BIHILFER_THREADS")
    if n in (None, ""):
        return nullcontext()
    from threadpoolctl import threadpool_limits

    return threadpool_limits(limits=int(n))


def _out_dir(args, default: str) -> Path:
    out = Path(args.out if args.out is not None else default)
    out.mkdir(parents=True, exist_ok=True)
    return out


def report_text(fld, spec, tolerances) -> tuple[str, bool]:
    """Data hypothesis screening followed by the verification report."""
    from bihilfer.spectral import hypothesis_check
    from bihilfer.verify import verify

    lines = ["# bihilfer report v1"]
    for name, (status, value) in hypothesis_check(spec).items():
        lines.append(f"hypothesis {name}: {value:.6e} [{status}]")
    rep = verify(fld, spec, tolerances)
    return "\n".join(lines) + "\n" + rep.to_text(), rep.all_passed


def cmd_solve(args) -> int:
    from bihilfer.config import problem_config, read_config
    from bihilfer.csvio import write_coefficients, write_solution
    from bihilfer.plots import plot_coefficients, plot_solution
    from bihilfer.spectral import SingularModeError, TailTooLargeError, solve

    import numpy as np

    run = problem_config(read_config(args.config), n_max=args.nmax, tol=args.tol)
    spec = run.spec
    x = np.linspace(0.0, spec.l, run.nx)
    try:
        c, fld = solve(spec, x)
    except SingularModeError as exc:
        print(f"singular mode: {exc}", file=sys.stderr)
        return EXIT_SINGULAR
    except TailTooLargeError as exc:
        print(f"truncation: {exc}", file=sys.stderr)
        return EXIT_VERIFY

    out = _out_dir(args, run.output)
    write_solution(out / "solution.csv", fld)
    write_coefficients(out / "coefficients.csv", c)
    text, ok = report_text(fld, spec.with_n_max(c.n_max), run.tolerances)
    (out / "report.txt").write_text(text, encoding="utf-8")
    plot_solution(fld, out / "solution.svg")
    plot_coefficients(c, out / "coefficients.svg")
    print(text, end="")
    print(f"n_max used: {c.n_max}; outputs written to {out}")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_verify(args) -> int:
    from bihilfer.config import problem_config, read_config
    from bihilfer.csvio import SchemaError, read_coefficients, read_solution

    import numpy as np

    run = problem_config(read_config(args.config), n_max=args.nmax, tol=args.tol)
    spec = run.spec
    try:
        fld = read_solution(args.solution)
    except SchemaError as exc:
        print(f"schema: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if fld.x_grid.size != run.nx or fld.x_grid[0] != 0.0 or not np.isclose(fld.x_grid[-1], spec.l):
        print(f"schema: x grid of {args.solution} does not match the config "
              f"({fld.x_grid.size} points on [{fld.x_grid[0]}, {fld.x_grid[-1]}])", file=sys.stderr)
        return EXIT_CONFIG
    if not np.isclose(max(-fld.t_grid[0], fld.t_grid[-1]), spec.T):
        print(f"schema: t grid of {args.solution} does not span [-T, T]", file=sys.stderr)
        return EXIT_CONFIG
    coef = Path(args.solution).with_name("coefficients.csv")
    if args.nmax is None and coef.exists():
        try:
            spec = spec.with_n_max(int(read_coefficients(coef)["n"].size))
        except SchemaError:
            pass
    text, ok = report_text(fld, spec, run.tolerances)
    if args.out is not None:
        out = _out_dir(args, run.output)
        (out / "report.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_cauchy(args) -> int:
    import io

    import numpy as np

    from bihilfer.config import cauchy_config, read_config
    from bihilfer.csvio import MAGIC
    from bihilfer.fode import cauchy_right_oracle, cauchy_right_solution
    from bihilfer.plots import plot_cauchy

    run = cauchy_config(read_config(args.config))
    d = run.data
    t = d.forcing.grid
    closed = cauchy_right_solution(d, t).values
    oracle = cauchy_right_oracle(d).values
    diff = closed - oracle
    tol = args.tol if args.tol is not None else run.tol
    worst = float(np.max(np.abs(diff)))

    out = _out_dir(args, run.output)
    buf = io.StringIO()
    buf.write(MAGIC + "\nt,closed_form,oracle,difference\n")
    np.savetxt(buf, np.column_stack([t, closed, oracle, diff]), fmt="%.17g", delimiter=",")
    (out / "cauchy.csv").write_text(buf.getvalue(), encoding="utf-8")
    plot_cauchy(t, closed, oracle, out / "cauchy.svg")
    ok = worst <= tol
    print(f"weight_exponent: {2.0 - d.orders.gamma:.17g}")
    print(f"max_difference: {worst:.6e} [{'pass' if ok else 'FAIL'}] (tol {tol:.1e})")
    return EXIT_OK if ok else EXIT_VERIFY


def cmd_ml_eval(args) -> int:
    from bihilfer.special_functions import MLParams, ml_eval

    try:
        p = MLParams(args.alpha, args.beta)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{float(ml_eval(p, args.z)):.15g}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from bihilfer import selftest

    seed = args.seed
    if seed is None and args.config is not None:
        from bihilfer.config import read_config

        seed = read_config(args.config).integer("problem", "seed", 0, minimum=0)
    return EXIT_OK if selftest.run(seed or 0) else EXIT_VERIFY


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", metavar="DIR", help="output directory (overrides the config)")
    common.add_argument("--nmax", type=int, metavar="K", help="initial truncation n_max")
    common.add_argument("--tol", type=float, metavar="X", help="tolerance (overrides the config)")
    common.add_argument("--threads", type=int, metavar="N",
                        help="worker threads for numerical kernels (env BIHILFER_THREADS)")

    p = _Parser(prog="bihilfer", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("solve", parents=[common], help="solve the boundary-value problem")
    s.add_argument("--config", required=True, metavar="PATH")
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("verify", parents=[common], help="re-verify a stored solution")
    s.add_argument("solution", metavar="SOLUTION_CSV")
    s.add_argument("--config", required=True, metavar="PATH")
    s.set_defaults(func=cmd_verify)

    s = sub.add_parser("cauchy", parents=[common], help="closed form vs oracle for a Cauchy problem")
    s.add_argument("--config", required=True, metavar="PATH")
    s.set_defaults(func=cmd_cauchy)

    s = sub.add_parser("ml-eval", parents=[common], help="evaluate E_{alpha,beta}(z)")
    s.add_argument("alpha", type=float)
    s.add_argument("beta", type=float)
    s.add_argument("z", type=float)
    s.set_defaults(func=cmd_ml_eval)

    s = sub.add_parser("selftest", parents=[common], help="run the seeded property checks")
    s.add_argument("--config", metavar="PATH", help="take the seed from this config")
    s.add_argument("--seed", type=int)
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    from bihilfer.config import ConfigError
    from bihilfer.expr import ExpressionError

    try:
        with _threads(args.threads):
            return args.func(args)
    except (ConfigError, ExpressionError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
