"""Command handlers: run scenarios and assemble reports."""
import asyncio
import logging
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from torusaction.action.action import (
    ActionReport,
    action_differences,
    hamiltonian_for,
    rotation_vector_measure,
    solve_action_function,
)
from torusaction.action.measures import Measure
from torusaction.action.verification import (
    classical_cross_check,
    kac_check,
    verify_conjugation,
    verify_iteration,
    verify_schwarz,
)
from torusaction.dynamics.isotopy import IsotopySpec, displacement_minimum
from torusaction.dynamics.linking import (
    check_linking_properties,
    find_fixed_points,
    fixed_point_components,
    linking_matrix,
    wb_diagnostic,
)
from torusaction.dynamics.orbits import ReturnDisk, recurrent_linking
from torusaction.exceptions import MeasureError, ScenarioError
from torusaction.geometry.cover import PlanePoint, TorusPoint
from torusaction.scenarios.scenario import Scenario
from torusaction.storage.base import BaseReportStore
from torusaction.storage.models import OperationResult, Report
from torusaction.utils.config import Config, Tolerances

logger = logging.getLogger(__name__)

COMMANDS = ('linking', 'rotation', 'action', 'spectrum', 'verify')
FIXED_GRID = 64


@dataclass
class RunContext:
    """Objects built from a scenario for one command."""
    scenario: Scenario
    isotopy: IsotopySpec
    measure: Measure
    lifts: List[PlanePoint]
    tol: Tolerances
    grid: int
    seed: int
    threads: int
    action: Optional[ActionReport] = None

    def solved(self) -> ActionReport:
        """Action function on the scenario lifts, computed once."""
        if self.action is None:
            self.action = solve_action_function(self.isotopy, self.measure, self.lifts,
                                                self.scenario.labels, self.grid, self.tol,
                                                self.threads, self.seed)
        return self.action

    def pair(self) -> List[PlanePoint]:
        if len(self.lifts) < 2:
            raise ScenarioError('lifts', "at least two lifts are required")
        return self.lifts[:2]


@dataclass
class SuiteResult:
    """One line per checked criterion and the aggregate verdict."""
    lines: List[str] = field(default_factory=list)
    reports: List[Report] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(report.passed for report in self.reports)


class CommandHandler:
    """Runs commands on scenarios and stores the reports."""

    def __init__(self, store: BaseReportStore, config: Config, grid: Optional[int] = None,
                 seed: Optional[int] = None, tol_overrides: Optional[Dict[str, Any]] = None,
                 threads: Optional[int] = None):
        """Initialize command handler.

        Args:
            store: Report store
            config: Configuration object
            grid: Quadrature grid overriding scenario and config
            seed: Seed overriding the scenario seed
            tol_overrides: Tolerance overrides from the command line
            threads: Worker threads overriding the config
        """
        self.store = store
        self.config = config
        self.grid = grid
        self.seed = seed
        self.tol_overrides = tol_overrides or {}
        self.threads = threads or config.threads
        self._checks: Dict[str, Callable[[RunContext, Any], OperationResult]] = {
            'invariant': self._check_invariant,
            'no_fixed': self._check_no_fixed,
            'min_displacement': self._check_min_displacement,
            'rho': self._check_rho,
            'width': self._check_width,
            'linking': self._check_linking,
            'properties': self._check_properties,
            'recurrent': self._check_recurrent,
            'kac': self._check_kac,
            'iteration': self._check_iteration,
            'schwarz': self._check_schwarz,
            'classical': self._check_classical,
            'conjugation': self._check_conjugation,
        }

    def context(self, scenario: Scenario) -> RunContext:
        """Build isotopy, measure and lifts of a scenario."""
        tol = Tolerances().with_overrides(self.config.get('tolerances')) \
            .with_overrides(scenario.tolerances).with_overrides(self.tol_overrides)
        isotopy = scenario.build_isotopy()
        measure = scenario.build_measure(isotopy)
        lifts = scenario.resolve_lifts(isotopy)
        grid = self.grid or scenario.grid or self.config.grid
        seed = self.seed if self.seed is not None else scenario.seed
        return RunContext(scenario, isotopy, measure, lifts, tol, grid, seed, self.threads)

    def compute(self, scenario: Scenario, command: str) -> Report:
        """Run one command on a scenario; pure apart from logging."""
        if command not in COMMANDS:
            raise ValueError(f"Unknown command: {command}")
        ctx = self.context(scenario)
        report = Report(scenario.name, command, ctx.seed, ctx.grid, scenario.to_dict())
        logger.info("Running %s on %s (grid %d, seed %d)", command, scenario.name, ctx.grid, ctx.seed)
        getattr(self, f"_{command}")(ctx, report)
        return report

    def load_scenario(self, path: str) -> Scenario:
        """Load a scenario file, defaulting its modulus to the configured one."""
        return Scenario.from_file(path, default_L=self.config.modulus)

    async def run(self, scenario_path: str, command: str) -> Report:
        """Load a scenario, run a command in a worker thread and store the report."""
        scenario = self.load_scenario(scenario_path)
        report = await asyncio.to_thread(self.compute, scenario, command)
        await self.store.save_report(report)
        return report

    async def run_suite(self, directory: str) -> SuiteResult:
        """Verify every scenario of a directory, in parallel.

        Raises:
            ScenarioError: If the directory holds no scenarios
        """
        paths = sorted(Path(directory).glob("*.json"))
        if not paths:
            raise ScenarioError('', f"no scenarios in {directory}")
        scenarios = [self.load_scenario(str(p)) for p in paths]
        reports = await asyncio.gather(*[asyncio.to_thread(self.compute, s, 'verify') for s in scenarios])
        result = SuiteResult()
        for report in reports:
            await self.store.save_report(report)
            result.reports.append(report)
            for name, passed in report.verdicts.items():
                result.lines.append(f"{'PASS' if passed else 'FAIL'} {report.scenario}: {name}")
        return result

    # commands

    def _linking(self, ctx: RunContext, report: Report) -> None:
        records = find_fixed_points(ctx.isotopy, FIXED_GRID, ctx.tol)
        components = fixed_point_components(records, FIXED_GRID, ctx.isotopy.L)
        report.add(OperationResult(
            'fixed_points',
            value=len(records),
            details={
                'contractible': sum(r.contractible for r in records),
                'components': [c.to_dict() for c in components],
            },
        ))
        if len(ctx.lifts) < 2:
            return
        matrix = linking_matrix(ctx.isotopy, ctx.lifts, ctx.scenario.labels, ctx.tol, ctx.threads)
        report.linking = [{'label_a': a, 'label_b': b, 'value': v} for a, b, v in matrix.rows()]
        report.add(OperationResult('linking_matrix', value=matrix.values.tolist(), details=matrix.to_dict()))
        wb = wb_diagnostic(ctx.isotopy, ctx.lifts, ctx.scenario.labels, ctx.tol, ctx.threads)
        report.add(OperationResult('wb_diagnostic', value=wb.global_bound, details=wb.to_dict()))

    def _rotation(self, ctx: RunContext, report: Report) -> None:
        rho = rotation_vector_measure(ctx.isotopy, ctx.measure, ctx.grid, ctx.tol, ctx.threads)
        report.add(OperationResult('rotation_vector', value=rho.vector.tolist(), error=rho.error,
                                   details=rho.to_dict()))
        records = [r for r in find_fixed_points(ctx.isotopy, FIXED_GRID, ctx.tol) if r.contractible]
        report.add(OperationResult('contractible_fixed_points', value=[r.to_dict() for r in records]))
        report.add(OperationResult('displacement_minimum',
                                   value=displacement_minimum(ctx.isotopy, FIXED_GRID)))

    def _action(self, ctx: RunContext, report: Report) -> None:
        labels = ctx.scenario.labels
        pairs = [(i, j) for i in range(len(ctx.lifts)) for j in range(i + 1, len(ctx.lifts))]
        if not pairs:
            raise ScenarioError('lifts', "at least two lifts are required")
        results = action_differences(ctx.isotopy, ctx.measure, [(ctx.lifts[i], ctx.lifts[j]) for i, j in pairs],
                                     ctx.grid, ctx.tol, ctx.threads, ctx.seed)
        for (i, j), result in zip(pairs, results):
            report.add(OperationResult(f"i_mu({labels[i]},{labels[j]})", value=result.value,
                                       error=result.error, iterations=result.n, details=result.to_dict()))

    def _spectrum(self, ctx: RunContext, report: Report) -> None:
        action = ctx.solved()
        values = action.L_mu if action.descended else action.l_mu
        report.spectrum = [{'label': label, 'l_mu': values[label], 'error': action.quad_error}
                           for label in action.labels]
        report.add(OperationResult('action_function', value=action.spectrum, error=action.quad_error,
                                   iterations=ctx.grid, details=action.to_dict()))
        report.add(OperationResult('width', value=action.width, error=action.quad_error))

    def _verify(self, ctx: RunContext, report: Report) -> None:
        expect = ctx.scenario.expect
        if not expect:
            raise ScenarioError('expect', "nothing to verify")
        for key, spec in expect.items():
            if key not in self._checks:
                raise ScenarioError(f"expect.{key}", "unknown check")
            result = report.add(self._checks[key](ctx, spec))
            logger.info("%s/%s: %s", ctx.scenario.name, result.operation,
                        "pass" if result.passed else "FAIL")
        if ctx.action is not None:
            values = ctx.action.L_mu if ctx.action.descended else ctx.action.l_mu
            report.spectrum = [{'label': label, 'l_mu': values[label], 'error': ctx.action.quad_error}
                               for label in ctx.action.labels]

    # checks

    def _check_invariant(self, ctx: RunContext, spec: Any) -> OperationResult:
        try:
            gap = ctx.measure.check_invariance(ctx.isotopy, ctx.tol)
        except MeasureError as e:
            return OperationResult('invariant', value=None, passed=not spec, details={'reason': str(e)})
        return OperationResult('invariant', value=gap, passed=bool(spec))

    def _check_no_fixed(self, ctx: RunContext, spec: Any) -> OperationResult:
        records = [r for r in find_fixed_points(ctx.isotopy, FIXED_GRID, ctx.tol) if r.contractible]
        return OperationResult('no_fixed', value=len(records), passed=(not records) == bool(spec))

    def _check_min_displacement(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        value = displacement_minimum(ctx.isotopy, FIXED_GRID)
        return OperationResult('min_displacement', value=value,
                               passed=abs(value - spec['value']) <= spec.get('tol', 1e-9))

    def _check_rho(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        rho = rotation_vector_measure(ctx.isotopy, ctx.measure, ctx.grid, ctx.tol, ctx.threads)
        gap = float(np.max(np.abs(rho.vector - np.asarray(spec['value'], dtype=float))))
        return OperationResult('rho', value=rho.vector.tolist(), error=rho.error,
                               passed=gap <= spec.get('tol', 0.0) + 10 * rho.error)

    def _check_width(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        action = ctx.solved()
        return OperationResult('width', value=action.width, error=action.quad_error, iterations=ctx.grid,
                               passed=abs(action.width - spec['value']) <= spec.get('tol', ctx.tol.quad),
                               details={'residual': action.residual, 'spectrum': action.spectrum})

    def _check_linking(self, ctx: RunContext, spec: List[Dict[str, Any]]) -> OperationResult:
        matrix = linking_matrix(ctx.isotopy, ctx.lifts, ctx.scenario.labels, ctx.tol, ctx.threads)
        mismatches = [item for item in spec if matrix.value(item['a'], item['b']) != item['value']]
        report_rows = [{'a': a, 'b': b, 'value': v} for a, b, v in matrix.rows()]
        return OperationResult('linking', value=report_rows, passed=not mismatches,
                               details={'mismatches': mismatches})

    def _check_properties(self, ctx: RunContext, spec: Any) -> OperationResult:
        result = check_linking_properties(ctx.isotopy, ctx.lifts, ctx.seed, ctx.tol)
        return OperationResult('properties', value=result.checks, passed=result.passed,
                               details=result.to_dict())

    def _check_recurrent(self, ctx: RunContext, spec: List[Dict[str, Any]]) -> OperationResult:
        a, b = ctx.pair()
        rows = []
        passed = True
        for item in spec:
            z = TorusPoint(*item['point'], ctx.isotopy.L)
            disk = ReturnDisk(z, float(item.get('radius', 0.1)), ctx.tol.return_cap)
            result = recurrent_linking(ctx.isotopy, a, b, z, disk, ctx.tol, ctx.seed)
            expected = item['value']
            if isinstance(expected, str):
                ok = result.exact is not None and result.exact == Fraction(expected)
            else:
                ok = abs(result.value - float(expected)) <= item.get('tol', ctx.tol.conv)
            passed = passed and ok
            rows.append({'point': item['point'], 'expected': expected, **result.to_dict(), 'passed': ok})
        return OperationResult('recurrent', value=[r['value'] for r in rows], passed=passed,
                               details={'points': rows})

    def _check_kac(self, ctx: RunContext, spec: Any) -> OperationResult:
        disk = ctx.scenario.build_disk()
        if disk is None:
            raise ScenarioError('disk', "Kac check needs a disk")
        result = kac_check(ctx.isotopy, ctx.measure, disk, ctx.tol)
        return OperationResult('kac', value=result.return_integral, passed=result.passed,
                               details=result.to_dict())

    def _check_iteration(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        a, b = ctx.pair()
        result = verify_iteration(ctx.isotopy, ctx.measure, a, b, spec.get('qs', [2, 3, 5]),
                                  ctx.grid, ctx.tol, ctx.threads, ctx.seed)
        return OperationResult('iteration', value=[c.ratio for c in result.checks], passed=result.passed,
                               details=result.to_dict())

    def _check_schwarz(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        result = verify_schwarz(ctx.isotopy, ctx.measure, ctx.lifts, ctx.scenario.labels, ctx.grid,
                                spec.get('powers', ()), ctx.tol, ctx.threads, ctx.seed)
        passed = result.verdict == spec.get('verdict', result.verdict)
        if 'slope' in spec:
            slope_ok = result.slope is not None and \
                abs(result.slope - spec['slope']) <= spec.get('slope_rtol', 1e-2) * abs(spec['slope'])
            passed = passed and slope_ok
        return OperationResult('schwarz', value=result.verdict, passed=passed, details=result.to_dict())

    def _check_classical(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        action = ctx.solved()
        result = classical_cross_check(action, hamiltonian_for(ctx.isotopy), ctx.isotopy, ctx.tol)
        passed = result.passed
        if 'gap' in spec:
            passed = passed and abs(result.action_gap - spec['gap']) <= spec.get('tol', 1e-6)
        return OperationResult('classical', value=result.action_gap, passed=passed, details=result.to_dict())

    def _check_conjugation(self, ctx: RunContext, spec: Dict[str, Any]) -> OperationResult:
        by = ctx.scenario.build_isotopy(spec['by'], 'expect.conjugation.by')
        result = verify_conjugation(ctx.isotopy, by, ctx.measure, ctx.lifts, ctx.scenario.labels,
                                    ctx.grid, ctx.tol, ctx.threads, ctx.seed)
        return OperationResult('conjugation', value=result.deviation, passed=result.passed,
                               details=result.to_dict())
