"""Data models for report storage."""
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional
import json


@dataclass
class OperationResult:
    """Outcome of one computation with its provenance."""
    operation: str
    value: Any
    error: Optional[float] = None
    iterations: Optional[int] = None
    passed: Optional[bool] = None
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'OperationResult':
        """Create OperationResult from dictionary."""
        return cls(**data)


@dataclass
class Report:
    """Results of one command on one scenario."""
    scenario: str
    command: str
    seed: int
    grid: int
    echo: Dict[str, Any]
    results: List[OperationResult] = field(default_factory=list)
    spectrum: List[Dict[str, Any]] = field(default_factory=list)   # label, l_mu, error
    linking: List[Dict[str, Any]] = field(default_factory=list)    # label_a, label_b, value

    @property
    def verdicts(self) -> Dict[str, bool]:
        """Pass/fail of every result that is a check."""
        return {r.operation: r.passed for r in self.results if r.passed is not None}

    @property
    def passed(self) -> bool:
        return all(self.verdicts.values())

    def add(self, result: OperationResult) -> OperationResult:
        self.results.append(result)
        return result

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        return {
            'scenario': self.scenario,
            'command': self.command,
            'seed': self.seed,
            'grid': self.grid,
            'echo': self.echo,
            'results': [r.to_dict() for r in self.results],
            'spectrum': self.spectrum,
            'linking': self.linking,
            'verdicts': self.verdicts,
            'passed': self.passed,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'Report':
        """Create Report from dictionary."""
        data = data.copy()
        data.pop('verdicts', None)
        data.pop('passed', None)
        data['results'] = [OperationResult.from_dict(r) for r in data.get('results', [])]
        return cls(**data)

    def to_json(self) -> str:
        """Convert to a deterministic JSON document."""
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, json_str: str) -> 'Report':
        """Create Report from JSON string."""
        return cls.from_dict(json.loads(json_str))
