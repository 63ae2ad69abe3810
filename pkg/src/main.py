"""
Verification CLI
Builds reflection groups on C^2 and runs the kernel, quadrature and estimate checks
with CSV / JSON-lines reports and a JSON run summary
"""
import argparse
import json
import os
import sys
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd

# Add parent directory to path if running directly
if __name__ == "__main__":
    sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from src import __version__
from src.analysis import (
    SERIES_CONSTANT_EXACT,
    IdentityCheck,
    KernelEvaluator,
    Sampler,
    DomainSpec,
    appendix_bound_check,
    averaged_kernel,
    averaged_kernel_alt,
    bergman_kernel,
    change_of_variable_check,
    division_quotient,
    find_covering_delta,
    covering_holds,
    integrate,
    kernel_formula_check,
    kernel_skewness_check,
    main_estimate_check,
    mean_value_check,
    moment_integral,
    norm_sweep,
    normal_subgroup_bound,
    reflection_pair_group,
    regular_quotient_bound,
    reproducing_check,
    weighted_kernel,
    weighted_norm_check,
)
from src.groups import (
    ReflectionGroup,
    build_g_mln,
    builtin_orbit_map,
    find_conjugating_matrix,
    find_hyperplanes,
    group_to_document,
    hyperplane_partition,
    jacobian_polynomial,
    normal_subgroup_from,
    orbit_decomposition,
    reduction_tree,
    skew_division_check,
    symbolic_jacobian,
)
from src.groups.invariants import Polynomial, parse_polynomial, variables
from src.utils import append_jsonl, get_logger, log_execution_time, write_report, write_summary
from src.utils.errors import IdentityCheckFailed, InvalidParameterError, VerificationError
from src.utils.numerics import random_ball_points
from src.utils.run_config import (
    FORMATS,
    GROUP_KINDS,
    MAP_KINDS,
    SWEEP_METHODS,
    RunConfig,
    default_samples,
    default_seed,
)

logger = get_logger('verification_cli')

EXIT_OK = 0
EXIT_IDENTITY = 1
EXIT_USAGE = 2

DEFAULT_Z = [0.3, 0.1, -0.2, 0.25]
DEFAULT_W = [0.1, -0.4, 0.35, 0.05]

VERIFY_ACTIONS = ('covering', 'nsl', 'main', 'sweep', 'reproducing', 'cov', 'meanvalue', 'appendix', 'division')
QUAD_ACTIONS = ('integrate', 'cov', 'reproducing', 'meanvalue', 'norm')
KERNEL_ACTIONS = ('eval', 'appendix')


def _point(values: List[float]) -> np.ndarray:
    return np.array([[complex(values[0], values[1]), complex(values[2], values[3])]])


def _complex_text(values) -> str:
    """Row-major complex entries as a JSON list of [re, im] pairs"""
    return json.dumps([[float(c.real), float(c.imag)] for c in np.asarray(values).ravel()])


def _summary_path(output: str) -> str:
    return os.path.splitext(output)[0] + '.summary.json'


class VerificationRunner:
    """Runs one configured command and collects report rows, identity checks and fitted constants"""

    def __init__(self, config: RunConfig):
        self.config = config
        self.rows: List[Dict] = []
        self.checks: List[IdentityCheck] = []
        self.fitted: List[Dict] = []
        self.streamed = False

    # ------------------------------------------------------------------ inputs

    def build_group(self, dimension: int = 2) -> ReflectionGroup:
        if self.config.group_kind == 'pair':
            return reflection_pair_group(dimension)
        return build_g_mln(self.config.m, self.config.ell_or_m, dimension)

    def build_orbit_map(self):
        c = self.config
        if c.map_kind == 'pik':
            return builtin_orbit_map('pik', k=c.k, seed=c.seed)
        if c.map_kind == 'power':
            return builtin_orbit_map('power', m=c.m, seed=c.seed)
        return builtin_orbit_map('gml2', m=c.m, ell=c.ell_or_m, seed=c.seed)

    def holomorphic_function(self) -> Callable[[np.ndarray], np.ndarray]:
        return parse_polynomial(self.config.poly, 2).evaluate

    def test_points(self) -> np.ndarray:
        return random_ball_points(self.config.points, 2, self.config.seed, radius=0.6)

    # ---------------------------------------------------------------- commands

    @log_execution_time
    def run_group(self) -> int:
        """Order, reflections, hyperplanes with multiplicities and orbit decomposition"""
        c = self.config
        group = build_g_mln(c.m, c.ell_or_m, c.n)
        hyperplanes = find_hyperplanes(group, allow_empty=True)
        orbits = orbit_decomposition(group, hyperplanes)

        logger.info("=" * 80)
        logger.info(f"GROUP {group.name}")
        logger.info("=" * 80)
        print(f"group: {group.name}")
        print(f"order: {group.order}")
        print(f"reflections: {len(group.reflections)}")
        print(f"hyperplanes: {len(hyperplanes)}")
        print(f"orbits: {len(orbits)} {[sorted(o) for o in orbits]}")

        for index, plane in enumerate(hyperplanes):
            self.rows.append({
                'hyperplane': index,
                'root': _complex_text(plane.root),
                'multiplicity': plane.multiplicity,
                'orbit_id': plane.orbit_id,
                'fixing_reflections': len(plane.fixing_reflections),
            })
        self.checks.append(IdentityCheck('group_axioms', 0.0 if group.check_axioms() else 1.0, 0.5, len(group)))

        if c.document:
            write_summary(group_to_document(group, hyperplanes), c.document)
            logger.info(f"✓ Group document written to {c.document}")
        return self.finish()

    @log_execution_time
    def run_tree(self) -> int:
        """Reduction tree with a conjugacy witness for every leaf against the first leaf"""
        c = self.config
        tree = reduction_tree(build_g_mln(c.m, c.ell_or_m, c.n))
        leaves = tree.leaves()
        reference = leaves[0]

        logger.info("=" * 80)
        logger.info(f"REDUCTION TREE {tree.node.name}")
        logger.info("=" * 80)
        for level, subtree in tree.walk():
            node = subtree.node
            witness = None
            if subtree.is_leaf:
                witness = find_conjugating_matrix(reference, node)
            print(f"{'  ' * level}{node.name or 'G'} order={node.order} "
                  f"reflections={len(node.reflections)}{' leaf' if subtree.is_leaf else ''}")
            self.rows.append({
                'level': level,
                'name': node.name,
                'order': node.order,
                'reflections': len(node.reflections),
                'orbits': json.dumps([sorted(o) for o in subtree.orbit_split]),
                'leaf': subtree.is_leaf,
                'witness': _complex_text(witness) if witness is not None else '',
            })
            if subtree.is_leaf and witness is None:
                logger.warning(f"No conjugating matrix found for leaf {node.name}")

        print(f"depth: {tree.depth}")
        print(f"leaves: {tree.leaf_count}")
        return self.finish()

    @log_execution_time
    def run_map(self) -> int:
        """Orbit map components, symbolic Jacobian and fitted constant c_pi"""
        orbit_map = self.build_orbit_map()
        for index, component in enumerate(orbit_map.components, start=1):
            self.rows.append({'quantity': f'P{index}', 'value': str(component)})
        self.rows.append({'quantity': 'jacobian', 'value': str(symbolic_jacobian(orbit_map))})
        self.rows.append({'quantity': 'J_G', 'value': str(jacobian_polynomial(orbit_map.group).to_polynomial())})
        self.rows.append({'quantity': 'c_pi', 'value': repr(orbit_map.jacobian_constant)})
        self.fitted.append({'quantity': 'c_pi', 'map': orbit_map.name, 'value': orbit_map.jacobian_constant})
        logger.info(f"✓ {orbit_map.name}: c_pi = {orbit_map.jacobian_constant}")
        return self.finish()

    @log_execution_time
    def run_kernel(self) -> int:
        c = self.config
        if c.action == 'appendix':
            for swap in (False, True):
                self._appendix(swap)
            return self.finish()

        group = self.build_group()
        evaluator = KernelEvaluator.for_group(group, p=c.p)
        z = _point(c.z or DEFAULT_Z)
        w = _point(c.w or DEFAULT_W)
        values = {
            'K': bergman_kernel(evaluator, z, w),
            'K_G': averaged_kernel(evaluator, z, w),
            'K_G_z_side': averaged_kernel_alt(evaluator, z, w, 'z_side'),
            'K_G_double_sum': averaged_kernel_alt(evaluator, z, w, 'double_sum'),
            'K_G_p': weighted_kernel(evaluator, z, w),
            'M': division_quotient(evaluator, z, w),
        }
        for quantity, value in values.items():
            value = complex(np.asarray(value).ravel()[0])
            self.rows.append({'quantity': quantity, 'value_re': value.real, 'value_im': value.imag})
        self.checks.append(kernel_formula_check(evaluator, seed=c.seed))
        return self.finish()

    @log_execution_time
    def run_verify(self) -> int:
        action = self.config.action
        logger.info("=" * 80)
        logger.info(f"VERIFY {action.upper()}")
        logger.info("=" * 80)
        handler = {
            'covering': self._covering,
            'nsl': self._nsl,
            'main': self._main_estimate,
            'sweep': self._sweep,
            'reproducing': self._reproducing,
            'cov': self._change_of_variable,
            'meanvalue': self._mean_value,
            'appendix': lambda: self._appendix(self.config.swap),
            'division': self._division,
        }[action]
        handler()
        return self.finish()

    @log_execution_time
    def run_quad(self) -> int:
        c = self.config
        if c.action == 'integrate':
            a, b = c.moment
            sampler = Sampler(DomainSpec(dimension=2), c.seed, c.samples)
            estimate = integrate(sampler, lambda z: np.abs(z[:, 0]) ** (2 * a) * np.abs(z[:, 1]) ** (2 * b))
            exact = moment_integral(a, b)
            row = estimate.row(f'moment[{a},{b}]', c.seed)
            row.update({'target_re': exact, 'target_im': 0.0})
            self.rows.append(row)
            band = 3.0 * estimate.stderr + 1e-12 * max(1.0, exact)
            self.checks.append(IdentityCheck('moment', abs(estimate.value - exact), band, estimate.count))
        elif c.action == 'norm':
            self._collect(weighted_norm_check(self.build_orbit_map(), self.holomorphic_function(), c.p,
                                              c.samples, c.seed))
        else:
            {'cov': self._change_of_variable,
             'reproducing': self._reproducing,
             'meanvalue': self._mean_value}[c.action]()
        return self.finish()

    # ----------------------------------------------------------------- actions

    def _collect(self, report):
        self.rows.extend(report.rows)
        self.checks.extend(report.checks)
        if report.reran:
            logger.warning(f"{report.name} passed only after a rerun with more samples")

    def _covering(self):
        c = self.config
        group = self.build_group()
        hyperplanes = find_hyperplanes(group)
        S1, S2 = hyperplane_partition(group, hyperplanes)
        cover = find_covering_delta(group, S1, S2, c.samples, c.seed, hyperplanes)
        row = cover.to_dict()
        row['worst_z'] = _complex_text(row['worst_z'])
        row['worst_w'] = _complex_text(row['worst_w'])
        row['delta'] = c.delta
        row['covered_fraction'] = covering_holds(group, S1, S2, c.delta, c.samples, c.seed + 1, hyperplanes)
        self.rows.append(row)
        self.fitted.append({'quantity': 'delta_found', 'value': cover.delta_found})

    def _nsl(self):
        c = self.config
        group = self.build_group()
        hyperplanes = find_hyperplanes(group)
        for S in hyperplane_partition(group, hyperplanes):
            subgroup = normal_subgroup_from(group, S, hyperplanes)
            report = normal_subgroup_bound(group, subgroup.group, S, c.p, c.delta, c.samples, c.seed)
            self._bound(report)

    def _main_estimate(self):
        c = self.config
        self._bound(main_estimate_check(self.build_group(), p=c.p, samples=c.samples, seed=c.seed))

    def _bound(self, report):
        row = report.to_dict()
        self.rows.append(row)
        self.checks.extend(report.checks)
        self.fitted.append({'quantity': report.label, 'value': report.fitted_constant,
                            'stability_ratio': report.stability_ratio})
        if not report.stable:
            logger.warning(f"{report.label}: stability ratio {report.stability_ratio:.4f} outside [0.5, 2]")

    def _sweep(self):
        c = self.config
        evaluator = KernelEvaluator.for_group(self.build_group())
        stream = c.output if c.output and c.format == 'jsonl' else None
        if stream and os.path.exists(stream):
            os.remove(stream)
        for p in c.p_grid:
            rows = norm_sweep(evaluator, [p], method=c.method, samples=c.samples, seed=c.seed)
            for row in rows:
                if not np.isfinite(row['indicator']):
                    logger.warning(f"Indicator at p={p} is not finite")
                self.fitted.append({'quantity': f'indicator[p={p}]', 'value': row['indicator']})
            if stream:
                append_jsonl(rows, stream)
            self.rows.extend(rows)
        self.streamed = stream is not None

    def _reproducing(self):
        c = self.config
        evaluator = KernelEvaluator.for_group(self.build_group())
        self._collect(reproducing_check(evaluator, self.holomorphic_function(), self.test_points(), c.samples, c.seed))

    def _change_of_variable(self):
        c = self.config
        self._collect(change_of_variable_check(self.build_orbit_map(), c.samples, c.seed))

    def _mean_value(self):
        c = self.config
        self._collect(mean_value_check(self.holomorphic_function(), c.samples, c.seed))

    def _appendix(self, swap: bool):
        c = self.config
        report = appendix_bound_check(c.p, c.samples, c.seed, swap=swap)
        self.rows.append(report.to_dict())
        suffix = '_swapped' if swap else ''
        slack = 1.0 + 1e-9
        self.checks.extend([
            IdentityCheck(f'series_constant{suffix}', abs(report.series_constant - SERIES_CONSTANT_EXACT),
                          1e-12 * SERIES_CONSTANT_EXACT),
            IdentityCheck(f'inside_bound{suffix}', report.inside_constant,
                          report.inside_bound * slack, report.inside_count),
            IdentityCheck(f'outside_series_bound{suffix}', report.outside_series_constant,
                          report.outside_series_bound * slack, report.outside_count),
            IdentityCheck(f'outside_kernel_bound{suffix}', report.outside_kernel_constant,
                          report.outside_kernel_bound * slack, report.outside_count),
        ])

    def _division(self):
        c = self.config
        group = self.build_group()
        evaluator = KernelEvaluator.for_group(group, p=c.p)
        self.checks.append(kernel_formula_check(evaluator, seed=c.seed))
        self.checks.append(kernel_skewness_check(evaluator, seed=c.seed))

        degree = c.m if c.group_kind == 'gml' else 2
        z1, z2 = variables(2)
        skew = Polynomial.from_sympy(
            jacobian_polynomial(group).to_polynomial().to_sympy() * (z1 ** degree + z2 ** degree), 2)
        divides = skew_division_check(skew, group, seed=c.seed)
        self.checks.append(IdentityCheck('skew_division', 0.0 if divides else 1.0, 0.5))

        self._bound(regular_quotient_bound(group, c.delta, c.samples, c.seed))

    # ------------------------------------------------------------------ output

    def banner(self) -> Dict:
        return {'version': __version__, 'config': self.config.to_dict(), 'seed': self.config.seed}

    def finish(self) -> int:
        """Write report and summary; exit code reflects identity checks only"""
        c = self.config
        failed = [check for check in self.checks if not check.passed]
        for check in self.checks:
            mark = '✓' if check.passed else '✗'
            logger.info(f"{mark} {check.name}: error {check.max_error:.3e} (tolerance {check.tolerance:.3e})")

        if self.rows and not self.streamed:
            text = write_report(pd.DataFrame(self.rows), c.output, c.format)
            if not c.output:
                print(text, end='')

        exit_code = EXIT_IDENTITY if failed else EXIT_OK
        summary = {
            'banner': self.banner(),
            'checks': [check.to_dict() for check in self.checks],
            'fitted': self.fitted,
            'exit_code': exit_code,
        }
        if c.output:
            path = write_summary(summary, _summary_path(c.output))
            logger.info(f"✓ Report written to {c.output}, summary to {path}")
        if failed:
            logger.error(f"{len(failed)} identity check(s) failed: {', '.join(f.name for f in failed)}")
        return exit_code

    def run(self) -> int:
        command = self.config.command
        if command == 'group':
            return self.run_group()
        if command == 'tree':
            return self.run_tree()
        if command == 'map':
            return self.run_map()
        if command == 'kernel':
            return self.run_kernel()
        if command == 'verify':
            return self.run_verify()
        return self.run_quad()


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument('--m', type=int, default=4, help='Group parameter m of G(m, ell, n) (default: 4)')
    parser.add_argument('--ell', type=int, default=None, help='Group parameter ell, a divisor of m (default: m)')
    parser.add_argument('--n', type=int, default=2, help='Dimension n for group/tree (default: 2)')
    parser.add_argument('--k', type=int, default=1, help='Parameter k of the pi_k orbit map (default: 1)')
    parser.add_argument('--group', dest='group_kind', choices=GROUP_KINDS, default='gml',
                        help="'gml' for G(m, ell, 2), 'pair' for {id, diag(-1, 1)} (default: gml)")
    parser.add_argument('--map', dest='map_kind', choices=MAP_KINDS, default='pik',
                        help='Orbit map family (default: pik)')
    parser.add_argument('--p', type=float, default=2.0, help='Exponent p in (1, inf) (default: 2)')
    parser.add_argument('--p-grid', type=float, nargs='+', default=[1.25, 1.5, 2.0, 3.0, 4.0],
                        help='Exponents for sweeps (default: 1.25 1.5 2 3 4)')
    parser.add_argument('--delta', type=float, default=0.2, help='Region parameter delta (default: 0.2)')
    parser.add_argument('--samples', type=int, default=None,
                        help='Sample count (default: sampling.default_samples from the config)')
    parser.add_argument('--seed', type=int, default=None,
                        help='Sampling seed (default: $BERGMAN_REFLECT_SEED or sampling.default_seed)')
    parser.add_argument('--method', choices=SWEEP_METHODS, default='schur', help='Sweep method (default: schur)')
    parser.add_argument('--swap', action='store_true', help='Appendix bounds for the swapped kernel')
    parser.add_argument('--moment', type=int, nargs=2, default=[1, 1], metavar=('A', 'B'),
                        help='Integrand |z1|^2A |z2|^2B for quad integrate (default: 1 1)')
    parser.add_argument('--poly', default=RunConfig.poly,
                        help='Holomorphic test polynomial in z1, z2 (sympy syntax)')
    parser.add_argument('--z', type=float, nargs=4, default=None, metavar='X', help='Point z as re1 im1 re2 im2')
    parser.add_argument('--w', type=float, nargs=4, default=None, metavar='X', help='Point w as re1 im1 re2 im2')
    parser.add_argument('--points', type=int, default=5,
                        help='Test points for the reproducing check (default: 5)')
    parser.add_argument('--document', default=None, help='Write the group JSON document to this path')
    parser.add_argument('--output', default=None, help='Report file (default: stdout)')
    parser.add_argument('--format', choices=FORMATS, default='csv', help='Report format (default: csv)')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='Reflection-group Bergman kernel verification',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Examples:
  # Structure of G(4,4,2)
  python run_verification.py group --m 4 --ell 4

  # Reduction tree with conjugacy witnesses
  python run_verification.py tree --m 8 --ell 8

  # Change of variables for (z1^2, z2)
  python run_verification.py verify cov --map power --m 2 --samples 1000000

  # Explicit kernel bounds for {id, diag(-1,1)}
  python run_verification.py verify appendix --p 2 --samples 10000

  # Streamed p sweep
  python run_verification.py verify sweep --group pair --format jsonl --output data/reports/sweep.jsonl
        """
    )
    commands = parser.add_subparsers(dest='command', required=True)

    for name, help_text in (('group', 'Group order, reflections, hyperplanes and orbits'),
                            ('tree', 'Reduction tree of normal reflection subgroups'),
                            ('map', 'Orbit map, symbolic Jacobian and fitted c_pi')):
        _add_common_arguments(commands.add_parser(name, help=help_text))

    for name, actions, help_text in (('kernel', KERNEL_ACTIONS, 'Kernel evaluation and explicit bounds'),
                                     ('verify', VERIFY_ACTIONS, 'Identity checks and fitted constants'),
                                     ('quad', QUAD_ACTIONS, 'Monte Carlo quadrature checks')):
        sub = commands.add_parser(name, help=help_text)
        sub.add_argument('action', choices=actions)
        _add_common_arguments(sub)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        command=args.command,
        action=getattr(args, 'action', None),
        m=args.m,
        ell=args.ell,
        n=args.n,
        k=args.k,
        p=args.p,
        p_grid=list(args.p_grid),
        delta=args.delta,
        samples=args.samples if args.samples is not None else default_samples(),
        seed=args.seed if args.seed is not None else default_seed(),
        output=args.output,
        format=args.format,
        map_kind=args.map_kind,
        method=args.method,
        swap=args.swap,
        group_kind=args.group_kind,
        moment=list(args.moment),
        document=args.document,
        poly=args.poly,
        z=args.z,
        w=args.w,
        points=args.points,
    )


def main(argv: Optional[List[str]] = None) -> int:
    """Main entry point with command-line interface"""
    args = build_parser().parse_args(argv)

    try:
        config = config_from_args(args).validate()
        logger.info(f"bergman-reflect {__version__}: {json.dumps(config.to_dict(), sort_keys=True)}")
        return VerificationRunner(config).run()

    except InvalidParameterError as e:
        logger.error(f"Invalid parameters: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE

    except IdentityCheckFailed as e:
        logger.error(f"Identity check failed: {e}")
        return EXIT_IDENTITY

    except VerificationError as e:
        logger.error(f"Verification error: {e}", exc_info=True)
        return EXIT_IDENTITY

    except KeyboardInterrupt:
        logger.info("\nRun interrupted by user")
        return EXIT_IDENTITY


if __name__ == "__main__":
    sys.exit(main())
