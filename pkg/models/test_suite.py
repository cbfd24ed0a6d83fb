"""
Test Suite Data Model
Generated test cases: steps with concrete stimulation, cases and the suite
"""
from typing import Any, Dict, List, Optional


class TestStep:
    """
    One stimulation step of a test case.

    Attributes:
        name: Step name, e.g. "Scenario-1-Initialization"
        stimulation: Symbol -> plain JSON value applied at this step
        expected_observations: Oracle hint; the condition text is informative only
        instance: Scenario instance that produced the step
        transition: Automaton transition taken, e.g. "s0 -> accept"
        guard: Symbolic guard text of the transition
    """
    __test__ = False

    def __init__(
        self,
        name: str,
        stimulation: Optional[Dict[str, Any]] = None,
        condition: str = "",
        instance: Optional[str] = None,
        transition: Optional[str] = None,
        guard: Optional[str] = None
    ):
        self.name = name
        self.stimulation = dict(stimulation or {})
        self.condition = condition
        self.instance = instance
        self.transition = transition
        self.guard = guard

    @property
    def expected_observations(self) -> Dict[str, str]:
        return {'condition': self.condition}

    def to_dict(self) -> Dict[str, Any]:
        data = {
            'name': self.name,
            'stimulation': self.stimulation,
            'expected_observations': self.expected_observations,
        }
        # Generator provenance (absent in hand-written steps)
        if self.instance is not None:
            data['instance'] = self.instance
        if self.transition is not None:
            data['transition'] = self.transition
        if self.guard is not None:
            data['guard'] = self.guard
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TestStep':
        observations = data.get('expected_observations') or {}
        return cls(
            name=data['name'],
            stimulation=data.get('stimulation', {}),
            condition=observations.get('condition', ''),
            instance=data.get('instance'),
            transition=data.get('transition'),
            guard=data.get('guard')
        )

    def __eq__(self, other):
        return isinstance(other, TestStep) and self.to_dict() == other.to_dict()

    def __repr__(self):
        return f"TestStep({self.name!r}, {self.stimulation!r})"


class TestCase:
    """An ordered list of steps, applied one per tick"""
    __test__ = False

    def __init__(self, name: str, steps: Optional[List[TestStep]] = None, path: Optional[List[str]] = None):
        self.name = name
        self.steps = list(steps or [])
        self.path = list(path or [])

    def to_dict(self) -> Dict[str, Any]:
        data = {'name': self.name, 'steps': [s.to_dict() for s in self.steps]}
        if self.path:
            data['path'] = self.path
        return data

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TestCase':
        return cls(data['name'], [TestStep.from_dict(s) for s in data.get('steps', [])], data.get('path'))

    def __eq__(self, other):
        return isinstance(other, TestCase) and self.to_dict() == other.to_dict()

    def __len__(self):
        return len(self.steps)


class TestSuite:
    """
    Serializable collection of generated test cases.

    Features:
    - Metadata: spec hash, seed, generation time, incomplete flag
    - UNSAT paths reported instead of raised
    """
    __test__ = False

    def __init__(
        self,
        name: str,
        cases: Optional[List[TestCase]] = None,
        spec_hash: str = "",
        seed: int = 0,
        generated_at: Optional[str] = None,
        incomplete: bool = False,
        unsat: Optional[List[Dict[str, Any]]] = None
    ):
        self.name = name
        self.cases = list(cases or [])
        self.spec_hash = spec_hash
        self.seed = seed
        self.generated_at = generated_at
        self.incomplete = incomplete
        self.unsat = list(unsat or [])

    @property
    def metadata(self) -> Dict[str, Any]:
        return {
            'spec_hash': self.spec_hash,
            'seed': self.seed,
            'generated_at': self.generated_at,
            'incomplete': self.incomplete,
            'unsat': self.unsat,
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            'name': self.name,
            'metadata': self.metadata,
            'cases': [c.to_dict() for c in self.cases],
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> 'TestSuite':
        meta = data.get('metadata') or {}
        return cls(
            name=data.get('name', ''),
            cases=[TestCase.from_dict(c) for c in data.get('cases', [])],
            spec_hash=meta.get('spec_hash', ''),
            seed=meta.get('seed', 0),
            generated_at=meta.get('generated_at'),
            incomplete=meta.get('incomplete', False),
            unsat=meta.get('unsat', [])
        )

    def __eq__(self, other):
        return isinstance(other, TestSuite) and self.to_dict() == other.to_dict()

    def __len__(self):
        return len(self.cases)

    def __repr__(self):
        return f"TestSuite({self.name!r}, {len(self.cases)} cases)"
