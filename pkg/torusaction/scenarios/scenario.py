"""Declarative scenario files (JSON, schema version 1)."""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np

from torusaction.action.measures import Measure
from torusaction.dynamics.families import (
    make_identity,
    make_rigid_rotation,
    make_shear,
    make_slide,
    make_twist,
)
from torusaction.dynamics.isotopy import IsotopySpec, compose, conjugate, inverse, power
from torusaction.dynamics.orbits import ReturnDisk
from torusaction.exceptions import ConfigurationError, ScenarioError, TorusActionError
from torusaction.geometry.cover import DEFAULT_MODULUS, PlanePoint, TorusPoint
from torusaction.utils.config import Tolerances

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FAMILIES = ('twist', 'shear', 'rigid', 'identity', 'slide')
MEASURE_KINDS = ('atomic', 'lebesgue', 'disk-lebesgue')
OPS = ('power', 'inverse', 'compose', 'conjugate')


@dataclass
class LiftSpec:
    """Named fixed lift: a torus point with a chosen deck representative."""
    label: str
    point: List[float]
    deck: List[int]

    def lift(self, L: float) -> PlanePoint:
        return PlanePoint(self.point[0] + self.deck[0] * L, self.point[1] + self.deck[1] * L)

    def to_dict(self) -> Dict[str, Any]:
        return {'label': self.label, 'point': self.point, 'deck': self.deck}


def _require(data: Dict[str, Any], key: str, path: str) -> Any:
    if not isinstance(data, dict):
        raise ScenarioError(path, "expected an object")
    if key not in data:
        raise ScenarioError(f"{path}.{key}" if path else key, "missing required field")
    return data[key]


def _vector(value: Any, path: str, length: int = 2, kind=float) -> List:
    if not isinstance(value, (list, tuple)) or len(value) != length:
        raise ScenarioError(path, f"expected a list of {length} numbers")
    try:
        return [kind(v) for v in value]
    except (TypeError, ValueError):
        raise ScenarioError(path, f"expected a list of {length} numbers")


def _number(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(path, "expected a number")
    return float(value)


@dataclass
class Scenario:
    """Validated scenario: isotopy, measure, lifts, tolerances and expectations."""
    name: str
    L: float
    isotopy: Dict[str, Any]
    measure: Dict[str, Any]
    lifts: List[LiftSpec] = field(default_factory=list)
    tolerances: Dict[str, Any] = field(default_factory=dict)
    seed: int = 0
    grid: Optional[int] = None
    disk: Optional[Dict[str, Any]] = None
    expect: Dict[str, Any] = field(default_factory=dict)
    version: int = SCHEMA_VERSION
    source: Optional[str] = None

    @classmethod
    def from_dict(cls, data: Dict[str, Any], source: Optional[str] = None,
                  default_L: float = DEFAULT_MODULUS) -> 'Scenario':
        """Create Scenario from dictionary, validating every field.

        A scenario without an 'L' entry takes default_L as its modulus.

        Raises:
            ScenarioError: With the dotted path of the offending field
        """
        if not isinstance(data, dict):
            raise ScenarioError('', "scenario must be a JSON object")
        version = _require(data, 'version', '')
        if version != SCHEMA_VERSION:
            raise ScenarioError('version', f"unsupported schema version {version!r}")
        name = _require(data, 'name', '')
        if not isinstance(name, str) or not name:
            raise ScenarioError('name', "expected a non-empty string")
        L = _number(data.get('L', default_L), 'L')
        if L <= 0:
            raise ScenarioError('L', "torus modulus must be positive")

        isotopy = _require(data, 'isotopy', '')
        cls._check_isotopy(isotopy, 'isotopy')
        measure = _require(data, 'measure', '')
        cls._check_measure(measure, 'measure')

        lifts = []
        raw_lifts = data.get('lifts', [])
        if not isinstance(raw_lifts, list):
            raise ScenarioError('lifts', "expected a list")
        for i, item in enumerate(raw_lifts):
            path = f"lifts[{i}]"
            label = _require(item, 'label', path)
            point = _vector(_require(item, 'point', path), f"{path}.point")
            deck = _vector(item.get('deck', [0, 0]), f"{path}.deck", kind=int)
            lifts.append(LiftSpec(str(label), point, deck))
        labels = [lift.label for lift in lifts]
        if len(set(labels)) != len(labels):
            raise ScenarioError('lifts', "labels must be unique")

        tolerances = data.get('tolerances', {})
        try:
            Tolerances().with_overrides(tolerances)
        except (ConfigurationError, TypeError, ValueError) as e:
            raise ScenarioError('tolerances', str(e))

        seed = data.get('seed', 0)
        if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
            raise ScenarioError('seed', "expected a non-negative integer")
        grid = data.get('grid')
        if grid is not None and (not isinstance(grid, int) or grid < 4 or grid % 2):
            raise ScenarioError('grid', "expected an even integer >= 4")

        disk = data.get('disk')
        if disk is not None:
            _vector(_require(disk, 'center', 'disk'), 'disk.center')
            _number(_require(disk, 'radius', 'disk'), 'disk.radius')

        expect = data.get('expect', {})
        if not isinstance(expect, dict):
            raise ScenarioError('expect', "expected an object")
        if 'conjugation' in expect:
            conjugation = _require(expect, 'conjugation', 'expect')
            cls._check_isotopy(_require(conjugation, 'by', 'expect.conjugation'), 'expect.conjugation.by')

        return cls(name=name, L=L, isotopy=isotopy, measure=measure, lifts=lifts,
                   tolerances=tolerances, seed=seed, grid=grid, disk=disk, expect=expect,
                   version=version, source=source)

    @classmethod
    def from_file(cls, path: str, default_L: float = DEFAULT_MODULUS) -> 'Scenario':
        """Load a scenario file.

        Raises:
            ScenarioError: If the file is not valid JSON or fails validation
        """
        try:
            with open(path) as f:
                data = json.load(f)
        except json.JSONDecodeError as e:
            raise ScenarioError('', f"{path}: line {e.lineno}, column {e.colno}: {e.msg}")
        return cls.from_dict(data, source=str(path), default_L=default_L)

    @staticmethod
    def _check_isotopy(spec: Any, path: str) -> None:
        family = _require(spec, 'family', path)
        if family not in FAMILIES:
            raise ScenarioError(f"{path}.family", f"unknown family {family!r}")
        params = spec.get('params', {})
        if not isinstance(params, dict):
            raise ScenarioError(f"{path}.params", "expected an object")
        if family == 'twist':
            _vector(_require(params, 'center', f"{path}.params"), f"{path}.params.center")
        elif family == 'rigid':
            _vector(_require(params, 'v', f"{path}.params"), f"{path}.params.v")
        elif family == 'slide':
            _number(_require(params, 'amplitude', f"{path}.params"), f"{path}.params.amplitude")
        ops = spec.get('ops', [])
        if not isinstance(ops, list):
            raise ScenarioError(f"{path}.ops", "expected a list")
        for i, op in enumerate(ops):
            op_path = f"{path}.ops[{i}]"
            kind = _require(op, 'op', op_path)
            if kind not in OPS:
                raise ScenarioError(f"{op_path}.op", f"unknown operation {kind!r}")
            if kind == 'power':
                q = _require(op, 'q', op_path)
                if isinstance(q, bool) or not isinstance(q, int) or q < 1:
                    raise ScenarioError(f"{op_path}.q", "expected a positive integer")
            elif kind == 'compose':
                Scenario._check_isotopy(_require(op, 'with', op_path), f"{op_path}.with")
            elif kind == 'conjugate':
                Scenario._check_isotopy(_require(op, 'by', op_path), f"{op_path}.by")

    @staticmethod
    def _check_measure(spec: Any, path: str) -> None:
        kind = _require(spec, 'kind', path)
        if kind not in MEASURE_KINDS:
            raise ScenarioError(f"{path}.kind", f"unknown measure kind {kind!r}")
        data = spec.get('data', {})
        if not isinstance(data, dict):
            raise ScenarioError(f"{path}.data", "expected an object")
        if kind == 'disk-lebesgue':
            _vector(_require(data, 'center', f"{path}.data"), f"{path}.data.center")
            _number(_require(data, 'radius', f"{path}.data"), f"{path}.data.radius")
        elif kind == 'atomic':
            if 'points' not in data and 'orbits' not in data:
                raise ScenarioError(f"{path}.data", "atomic measure needs 'points' or 'orbits'")
            for i, point in enumerate(data.get('points', [])):
                _vector(point, f"{path}.data.points[{i}]")
            weights = data.get('weights')
            if weights is not None and len(weights) != len(data.get('points', [])):
                raise ScenarioError(f"{path}.data.weights", "one weight per point required")
            for i, orbit in enumerate(data.get('orbits', [])):
                _vector(_require(orbit, 'start', f"{path}.data.orbits[{i}]"), f"{path}.data.orbits[{i}].start")

    def tolerance_set(self, overrides: Optional[Dict[str, Any]] = None) -> Tolerances:
        """Tolerances of the scenario with command-line overrides on top."""
        return Tolerances().with_overrides(self.tolerances).with_overrides(overrides)

    def _family(self, spec: Dict[str, Any], path: str) -> IsotopySpec:
        family = spec['family']
        params = spec.get('params', {})
        try:
            if family == 'twist':
                center = TorusPoint(*params['center'], self.L)
                return make_twist(center, params.get('profile', 'linear'))
            if family == 'shear':
                return make_shear(self.L)
            if family == 'rigid':
                return make_rigid_rotation(params['v'], self.L)
            if family == 'slide':
                return make_slide(float(params['amplitude']), self.L)
            return make_identity(self.L)
        except ConfigurationError as e:
            raise ScenarioError(f"{path}.params", str(e))

    def build_isotopy(self, spec: Optional[Dict[str, Any]] = None, path: str = 'isotopy') -> IsotopySpec:
        """Isotopy of the scenario with its operations applied in order."""
        spec = spec if spec is not None else self.isotopy
        isotopy = self._family(spec, path)
        tol = self.tolerance_set()
        for i, op in enumerate(spec.get('ops', [])):
            kind = op['op']
            if kind == 'power':
                isotopy = power(isotopy, op['q'])
            elif kind == 'inverse':
                isotopy = inverse(isotopy, tol.inversion)
            elif kind == 'compose':
                isotopy = compose(isotopy, self.build_isotopy(op['with'], f"{path}.ops[{i}].with"))
            elif kind == 'conjugate':
                isotopy = conjugate(isotopy, self.build_isotopy(op['by'], f"{path}.ops[{i}].by"))
        return isotopy

    def build_measure(self, isotopy: IsotopySpec) -> Measure:
        """Measure of the scenario; periodic-orbit atoms are generated from the isotopy."""
        kind = self.measure['kind']
        data = self.measure.get('data', {})
        if kind == 'lebesgue':
            return Measure.lebesgue(self.L)
        if kind == 'disk-lebesgue':
            return Measure.disk_lebesgue(TorusPoint(*data['center'], self.L), float(data['radius']))
        points = [list(p) for p in data.get('points', [])]
        weights = list(data['weights']) if data.get('weights') is not None else \
            [1.0 / len(points)] * len(points) if points else []
        tol = self.tolerance_set()
        for i, orbit in enumerate(data.get('orbits', [])):
            try:
                cycle = Measure.periodic_orbit(isotopy, TorusPoint(*orbit['start'], self.L),
                                               float(orbit.get('mass', 1.0)), tol)
            except TorusActionError as e:
                raise ScenarioError(f"measure.data.orbits[{i}]", str(e))
            points.extend(cycle.points.tolist())
            weights.extend(cycle.weights.tolist())
        return Measure(kind='atomic', L=self.L, points=np.array(points), weights=np.array(weights),
                       full_support=False, label=data.get('label', 'atomic'))

    def build_disk(self) -> Optional[ReturnDisk]:
        if self.disk is None:
            return None
        return ReturnDisk(TorusPoint(*self.disk['center'], self.L), float(self.disk['radius']))

    def resolve_lifts(self, isotopy: IsotopySpec) -> List[PlanePoint]:
        """Plane lifts of the named points, each checked to be fixed by F~.

        Raises:
            ScenarioError: If a named point is not a contractible fixed point
        """
        tol = self.tolerance_set()
        lifts = []
        for i, spec in enumerate(self.lifts):
            p = spec.lift(self.L)
            xy = p.as_array()
            residual = float(np.linalg.norm(isotopy.time_one(xy) - xy))
            if residual >= tol.fixed:
                raise ScenarioError(f"lifts[{i}].point",
                                    f"not a contractible fixed point (residual {residual:.3e})")
            lifts.append(p)
        return lifts

    @property
    def labels(self) -> List[str]:
        return [spec.label for spec in self.lifts]

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        data = {
            'version': self.version,
            'name': self.name,
            'L': self.L,
            'seed': self.seed,
            'isotopy': self.isotopy,
            'measure': self.measure,
            'lifts': [spec.to_dict() for spec in self.lifts],
            'tolerances': self.tolerances,
            'expect': self.expect,
        }
        if self.grid is not None:
            data['grid'] = self.grid
        if self.disk is not None:
            data['disk'] = self.disk
        return data
