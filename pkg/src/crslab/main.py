"""Main application entry point"""

import argparse
import json
import logging
import sys
from typing import Callable, Dict, List, Optional, Sequence

from rich.console import Console

from . import __version__
from .config.settings import AppConfig
from .core.file_handler import FileHandler, instance_to_document, save_instance, save_partition
from .core.generators import random_instance, random_partite_instance, random_standard_instance
from .core.geometry import affine_plane, plane_document, random_order_instance, tightness_instance
from .core.guarantees import REFERENCE_CURVES, auto_alpha, curve_table, offline_upper_bound
from .core.ocrs import exact_feasibility_probs, exact_policy, ocrs_scheme, simulate_ocrs_mc
from .core.oracles import (
    estimate_selectability,
    exhaustive_acceptance_probs,
    expected_offline_optimum,
    optimal_online_dp,
)
from .core.rcrs import run_recursive_standard_rcrs, simulate_rcrs
from .core.reduction import (
    audit_recourse,
    build_relaxation_lp,
    reduce_system,
    simulate_online,
    table_recourse,
    zero_out_recourse,
)
from .core.selection import min_phases, solve_selection_function
from .core.simplex import fluid_lp, simplex_solve
from .errors import CrsLabError
from .models.choices import GeneratorKind, OcrsMode, OracleKind, OutputFormat, RcrsScheme, VerifyTarget
from .models.instance import Instance
from .ui.display import ProgressDisplay, TerminalDisplay, configure_logging
from .ui.report import Report, emit_report, feasibility_report, selectability_report, single_row_report
from .utils.validators import is_l_partite, validate

logger = logging.getLogger(__name__)


class UsageError(Exception):
    """argparse rejected the command line"""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _parse_range(text: str) -> List[int]:
    """'3' or '2..10'"""
    if ".." in text:
        lo, hi = text.split("..", 1)
        values = list(range(int(lo), int(hi) + 1))
    else:
        values = [int(text)]
    if not values:
        raise argparse.ArgumentTypeError(f"empty range '{text}'")
    return values


def _alpha(text: str) -> Optional[float]:
    """'auto' or a number in [0, 1]"""
    if text == "auto":
        return None
    value = float(text)
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"alpha must lie in [0, 1], got {value}")
    return value


class CrsLabApp:
    """Main application class"""

    def __init__(self, config: Optional[AppConfig] = None, console: Optional[Console] = None):
        self.config = config or AppConfig()
        self.console = console or Console(stderr=True)
        self.display = TerminalDisplay(self.console)
        self.progress = ProgressDisplay(self.console)
        self.files = FileHandler(self.config.output_dir)

    # Parser

    def build_parser(self) -> argparse.ArgumentParser:
        common = _Parser(add_help=False)
        common.add_argument("--verbose", action="store_true", help="debug logging on stderr")
        common.add_argument("--threads", type=int, default=None, help="worker threads")
        common.add_argument("--seed", type=int, default=None, help="base seed (default: CRSLAB_SEED or config)")
        common.add_argument("--format", choices=[f.value for f in OutputFormat], default=None)
        common.add_argument("--out", default=None, help="write the report to this file")

        parser = _Parser(prog="crslab", description="Contention resolution laboratory")
        parser.add_argument("--version", action="version", version=f"crslab {__version__}")
        sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

        gen = sub.add_parser("generate", parents=[common], help="write an instance document")
        gen.add_argument("--kind", choices=[k.value for k in GeneratorKind], required=True)
        gen.add_argument("--L", type=int, default=2)
        gen.add_argument("--eps", type=float, default=0.1)
        gen.add_argument("--items", type=int, default=8)
        gen.add_argument("--batches", type=int, default=4)
        gen.add_argument("--max-batch", type=int, default=3)
        gen.add_argument("--group-size", type=int, default=3)
        gen.add_argument("--tight", action="store_true")
        gen.add_argument("--partition", default=None, help="also write the item groups here (partite only)")

        val = sub.add_parser("validate", parents=[common], help="check an instance or system document")
        self._source_args(val)

        lp = sub.add_parser("lp", parents=[common], help="solve the fluid or relaxation LP")
        self._source_args(lp)

        gua = sub.add_parser("guarantees", parents=[common], help="guarantee curves")
        gua.add_argument("--L", type=_parse_range, default=_parse_range("2..10"))
        gua.add_argument("--grid", type=int, default=None)

        sim = sub.add_parser("simulate", help="run a contention resolution scheme")
        sim_sub = sim.add_subparsers(dest="target", required=True, parser_class=_Parser)
        ocrs = sim_sub.add_parser("ocrs", parents=[common])
        ocrs.add_argument("--instance", required=True)
        ocrs.add_argument("--mode", choices=[m.value for m in OcrsMode], default=OcrsMode.EXACT.value)
        ocrs.add_argument("--alpha", type=_alpha, default=None, help="'auto' or a number")
        ocrs.add_argument("--eps", type=float, default=0.1)
        ocrs.add_argument("--trials", type=int, default=None)
        ocrs.add_argument("--partition", default=None, help="item groups for the partite alpha")
        rcrs = sim_sub.add_parser("rcrs", parents=[common])
        rcrs.add_argument("--instance", required=True)
        rcrs.add_argument("--scheme", choices=[s.value for s in RcrsScheme], default=RcrsScheme.ATTENUATE.value)
        rcrs.add_argument("--paths", type=int, default=None)
        rcrs.add_argument("--K", type=int, default=None)
        rcrs.add_argument("--sub-trials", type=int, default=None)
        rcrs.add_argument("--grid", type=int, default=None)

        sel = sub.add_parser("selection-function", parents=[common], help="tabulate c(y)")
        sel.add_argument("--L", type=int, required=True)
        sel.add_argument("--grid", type=int, default=None)

        red = sub.add_parser("reduce", parents=[common], help="reduce a substitutable system")
        red.add_argument("--system", required=True)

        onl = sub.add_parser("run-online", parents=[common], help="simulate the OCRS-driven online policy")
        onl.add_argument("--system", required=True)
        onl.add_argument("--alpha", type=_alpha, default=None)
        onl.add_argument("--paths", type=int, default=None)
        onl.add_argument("--recourse", choices=["zero", "table"], default="zero")
        onl.add_argument("--audit", type=int, default=200, help="random recourse queries checked first")

        ora = sub.add_parser("oracle", parents=[common], help="reference computations")
        ora.add_argument("kind", choices=[k.value for k in OracleKind])
        ora.add_argument("--instance", required=True)
        ora.add_argument("--alpha", type=_alpha, default=None)
        ora.add_argument("--paths", type=int, default=None)
        ora.add_argument("--partition", default=None, help="item groups for the partite alpha")

        ver = sub.add_parser("verify", parents=[common], help="acceptance checks")
        ver.add_argument("target", choices=[v.value for v in VerifyTarget])
        ver.add_argument("--instance", default=None)
        ver.add_argument("--L", type=int, default=2)
        ver.add_argument("--eps", type=float, default=0.01)
        ver.add_argument("--alpha", type=_alpha, default=None)
        ver.add_argument("--paths", type=int, default=None)
        ver.add_argument("--partition", default=None, help="item groups for the partite alpha")
        return parser

    @staticmethod
    def _source_args(parser: argparse.ArgumentParser) -> None:
        group = parser.add_mutually_exclusive_group(required=True)
        group.add_argument("--instance")
        group.add_argument("--system")

    # Helpers

    def _seed(self, args) -> int:
        return self.config.resolve_seed(args.seed)

    def _threads(self, args) -> int:
        return args.threads if args.threads is not None else self.config.threads

    def _paths(self, args) -> int:
        paths = getattr(args, "paths", None)
        return paths if paths is not None else self.config.paths

    def _format(self, args) -> OutputFormat:
        return OutputFormat(args.format or self.config.output_format)

    def _emit(self, args, text: str) -> None:
        if args.out:
            saved = self.files.write_atomic(args.out, text)
            self.display.display_success(f"Saved {saved}")
        else:
            sys.stdout.write(text)

    def _report(self, args, report: Report) -> None:
        self._emit(args, emit_report(report, self._format(args)))

    def _instance(self, path: str) -> Instance:
        instance = self.files.load_instance_file(path)
        report = validate(instance, self.config.feasibility_tol)
        if not report.ok:
            raise ValueError(f"Invalid instance '{path}': {report.messages()[0]}")
        return instance

    def _resolve_alpha(self, instance: Instance, alpha: Optional[float],
                       partition_path: Optional[str] = None) -> float:
        """Explicit alpha, else the largest certified one; a partition file unlocks the partite root"""
        partition = None
        if partition_path:
            partition = self.files.load_partition_file(partition_path)
            if not is_l_partite(instance, partition):
                raise ValueError(f"Partition rejected, a product has two items in one group: {partition_path}")
        if alpha is None:
            alpha = auto_alpha(instance, partition)
            logger.info("Automatic alpha %.17g", alpha)
        return alpha

    # Commands

    def cmd_generate(self, args) -> int:
        kind = GeneratorKind(args.kind)
        if args.partition and kind is not GeneratorKind.PARTITE:
            raise ValueError(f"--partition only applies to --kind {GeneratorKind.PARTITE.value}")
        seed = self._seed(args)
        if kind is GeneratorKind.PLANE:
            self._emit(args, json.dumps(plane_document(affine_plane(args.L)), indent=2) + "\n")
            return 0
        if kind is GeneratorKind.TIGHTNESS:
            instance = tightness_instance(args.L, args.eps)
        elif kind is GeneratorKind.RANDOM_ORDER:
            instance = random_order_instance(args.L)
        elif kind is GeneratorKind.RANDOM:
            instance = random_instance(args.L, args.items, args.batches, args.max_batch, args.tight, seed)
        elif kind is GeneratorKind.STANDARD:
            instance = random_standard_instance(args.L, args.items, args.batches, args.tight, seed)
        else:
            instance, partition = random_partite_instance(args.L, args.group_size, args.batches,
                                                          args.max_batch, args.tight, seed)
            logger.info("Partition: %s", partition)
            if args.partition:
                saved = self.files.write_atomic(args.partition, save_partition(partition))
                self.display.display_success(f"Saved {saved}")
        self._emit(args, save_instance(instance))
        return 0

    def cmd_validate(self, args) -> int:
        if args.system:
            errors = self.files.load_system_file(args.system).validate()
        else:
            instance = self.files.load_instance_file(args.instance)
            errors = validate(instance, self.config.feasibility_tol).messages()
        for message in errors:
            self.display.display_error(message)
        if errors:
            return 1
        self.display.display_success("Document is valid")
        return 0

    def cmd_lp(self, args) -> int:
        if args.system:
            program = build_relaxation_lp(self.files.load_system_file(args.system))
        else:
            program = fluid_lp(self._instance(args.instance))
        solution = simplex_solve(program, self.config.pivot_tol)
        if not solution.is_optimal:
            self.display.display_warning(f"LP is {solution.status.value}")
        report = Report("LP solution", ("variable", "value"))
        report.add(variable="status", value=solution.status.value)
        report.add(variable="objective", value=solution.objective)
        for name, value in zip(program.variable_names, solution.values):
            report.add(variable=name, value=value)
        self._report(args, report)
        return 0

    def cmd_guarantees(self, args) -> int:
        grid = args.grid or self.config.grid_points
        tables = curve_table(args.L, grid)
        columns = tuple(tables[0].as_row().keys())
        report = Report("Guarantee curves", columns)
        for table in tables:
            report.add(**table.as_row())
        self._report(args, report)
        return 0

    def cmd_simulate(self, args) -> int:
        instance = self._instance(args.instance)
        seed, threads = self._seed(args), self._threads(args)
        if args.target == "ocrs":
            if OcrsMode(args.mode) is OcrsMode.MONTE_CARLO:
                _, profile = simulate_ocrs_mc(instance, args.eps, seed, args.trials, threads)
                self._report(args, feasibility_report(profile, "Monte Carlo OCRS"))
            else:
                alpha = self._resolve_alpha(instance, args.alpha, args.partition)
                self._report(args, feasibility_report(exact_feasibility_probs(instance, alpha)))
            return 0

        scheme = RcrsScheme(args.scheme)
        paths = self._paths(args)
        if scheme is RcrsScheme.RECURSIVE:
            c = solve_selection_function(instance.L, args.grid or self.config.grid_points)
            K = args.K if args.K is not None else 2 * min_phases(c)
            sub_trials = args.sub_trials or self.config.sub_trials
            _, profile = run_recursive_standard_rcrs(instance, c, K, sub_trials, seed, paths, threads)
        else:
            profile = simulate_rcrs(instance, scheme, paths, seed, threads)
        self._report(args, selectability_report(profile, f"RCRS ({scheme.value})"))
        return 0

    def cmd_selection_function(self, args) -> int:
        c = solve_selection_function(args.L, args.grid or self.config.grid_points)
        report = Report(f"Selection function L={args.L}", ("y", "c", "S"))
        for y, value, S in c.rows():
            report.add(y=y, c=value, S=S)
        logger.info("Integral %.6f, c(1) %.6f, residual %.3g", c.integral, c.c_at_one, c.residual)
        self._report(args, report)
        return 0

    def cmd_reduce(self, args) -> int:
        reduction = reduce_system(self.files.load_system_file(args.system))
        document = {
            "lp_value": reduction.lp_value,
            "dummy_counts": list(reduction.dummy_counts),
            "mapping": {copy_id: list(entry) for copy_id, entry in reduction.mapping.items()},
            "instance": instance_to_document(reduction.instance),
        }
        self._emit(args, json.dumps(document, indent=2) + "\n")
        return 0

    def cmd_run_online(self, args) -> int:
        system = self.files.load_system_file(args.system)
        reduction = reduce_system(system)
        alpha = self._resolve_alpha(reduction.instance, args.alpha)
        policy = exact_policy(reduction.instance, alpha)
        oracle = table_recourse(system) if args.recourse == "table" else zero_out_recourse(system)
        for failure in audit_recourse(system, oracle, args.audit, self._seed(args))[:5]:
            self.display.display_warning(failure)
        summary = simulate_online(system, reduction, policy, self._paths(args), self._seed(args),
                                  oracle, self._threads(args))
        report = Report("Online reward", ("copy_id", "x", "sale_freq", "target"))
        for product in reduction.instance.products:
            report.add(copy_id=product.id, x=product.active_prob,
                       sale_freq=summary.sale_frequency(product.id), target=alpha * product.active_prob)
        self.display.display_info(
            f"mean reward {summary.mean_reward:.6g} [{summary.ci_lo:.6g}, {summary.ci_hi:.6g}], "
            f"LP {summary.lp_value:.6g}, alpha*LP {alpha * summary.lp_value:.6g}"
        )
        self._report(args, report)
        return 0

    def cmd_oracle(self, args) -> int:
        instance = self._instance(args.instance)
        kind = OracleKind(args.kind)
        if kind is OracleKind.DP:
            value = optimal_online_dp(instance).value
            lp_value = simplex_solve(fluid_lp(instance)).objective
            self._report(args, single_row_report("Online DP", {"dp_value": value, "lp_value": lp_value,
                                                               "ratio": value / lp_value if lp_value else None}))
        elif kind is OracleKind.OFFLINE:
            mean, lo, hi = expected_offline_optimum(instance, self._paths(args), self._seed(args), self._threads(args))
            self._report(args, single_row_report("Offline optimum", {"mean": mean, "ci_lo": lo, "ci_hi": hi}))
        else:
            policy = exact_policy(instance, self._resolve_alpha(instance, args.alpha, args.partition))
            self._report(args, feasibility_report(exhaustive_acceptance_probs(instance, policy), "Enumeration"))
        return 0

    # Verification

    def cmd_verify(self, args) -> int:
        target = VerifyTarget(args.target)
        checks: Dict[VerifyTarget, Callable] = {
            VerifyTarget.SELECTABILITY: self._verify_selectability,
            VerifyTarget.TIGHTNESS: self._verify_tightness,
            VerifyTarget.OFFLINE: self._verify_offline,
            VerifyTarget.CURVES: self._verify_curves,
        }
        passed = checks[target](args)
        return 0 if passed else 1

    def _verify_selectability(self, args) -> bool:
        instance = self._instance(args.instance) if args.instance else tightness_instance(args.L, 0.1)
        alpha = self._resolve_alpha(instance, args.alpha, args.partition)
        policy = exact_policy(instance, alpha)
        with self.progress.show_progress() as progress:
            progress.add_task("Sampling paths", total=None)
            profile = estimate_selectability(instance, ocrs_scheme(instance, policy), self._paths(args),
                                             self._seed(args), self._threads(args))
        misses = []
        for entry in profile.entries:
            if entry.ratio is None:
                continue
            slack = (entry.ci_hi - entry.ci_lo) / 2
            if not entry.ci_lo - slack <= alpha <= entry.ci_hi + slack:
                misses.append(entry.product_id)
        self._report(args, selectability_report(profile))
        self.display.display_check("selectability", not misses,
                                   f"alpha={alpha:.6g}, min ratio {profile.min_ratio():.6g}, "
                                   f"{len(misses)} product(s) outside their interval")
        return not misses

    def _verify_tightness(self, args) -> bool:
        instance = tightness_instance(args.L, args.eps)
        value = optimal_online_dp(instance).value
        lp_value = simplex_solve(fluid_lp(instance)).objective
        ratio = value / lp_value
        lo = 1.0 / (1 + args.L)
        passed = lo - 1e-4 <= ratio <= lo + 0.02
        self.display.display_check("tightness", passed, f"DP/LP = {ratio:.6f}, window [{lo:.4f}, {lo + 0.02:.4f}]")
        self._report(args, single_row_report("Tightness", {"L": args.L, "eps": args.eps, "dp_value": value,
                                                           "lp_value": lp_value, "ratio": ratio}))
        return passed

    def _verify_offline(self, args) -> bool:
        instance = random_order_instance(args.L)
        mean, lo, hi = expected_offline_optimum(instance, self._paths(args), self._seed(args), self._threads(args))
        lp_value = simplex_solve(fluid_lp(instance)).objective
        ratio, expected = mean / lp_value, offline_upper_bound(args.L)
        tolerance = max(0.002, (hi - lo) / lp_value)
        passed = abs(ratio - expected) <= tolerance
        self.display.display_check("offline", passed, f"E[offline]/LP = {ratio:.6f}, closed form {expected:.6f}")
        self._report(args, single_row_report("Offline benchmark", {"L": args.L, "ratio": ratio,
                                                                   "expected": expected, "tolerance": tolerance}))
        return passed

    def _verify_curves(self, args) -> bool:
        tables = {table.L: table for table in curve_table(range(2, 11), self.config.grid_points)}
        failures = []
        for (L, name), value in REFERENCE_CURVES.items():
            if abs(getattr(tables[L], name) - value) > 1e-5:
                failures.append(f"{name}({L})={getattr(tables[L], name):.6f}, expected {value}")
        for L, table in tables.items():
            failures += [f"L={L}: {violation}" for violation in table.ordering_violations()]
        for failure in failures:
            self.display.display_error(failure)
        self.display.display_check("curves", not failures, f"{len(REFERENCE_CURVES)} reference points, L=2..10 orderings")
        return not failures

    def run(self, argv: Sequence[str]) -> int:
        try:
            args = self.build_parser().parse_args(list(argv))
        except UsageError as e:
            self.display.display_error(f"crslab: {e}")
            return 2
        configure_logging(args.verbose if hasattr(args, "verbose") else False)
        handler = getattr(self, "cmd_" + args.command.replace("-", "_"))
        try:
            return handler(args)
        except KeyboardInterrupt:
            self.display.display_info("Operation cancelled by user.")
            return 1
        except (CrsLabError, ValueError, FileNotFoundError, RuntimeError) as e:
            self.display.display_error(str(e))
            return 1


def run_command(argv: Sequence[str], config: Optional[AppConfig] = None) -> int:
    """Run one command line; 0 on success, 1 on failure, 2 on usage errors"""
    try:
        return CrsLabApp(config).run(argv)
    except SystemExit as e:
        # --help and --version
        return int(e.code or 0) if isinstance(e.code, int) or e.code is None else 2


def main():
    """Application entry point"""
    sys.exit(run_command(sys.argv[1:]))


if __name__ == "__main__":
    main()
