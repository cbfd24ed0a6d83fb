"""
Run Trace
Valuation sequence of a system test run, NDJSON export and trace-law checks

Each row holds σ_k together with how it was formed: which scenario instance
wrote which symbol, which objects published, which interfaces propagated and
which collaboration events became effective.
"""
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterator, List, Mapping, Optional, Tuple

from config import SYMBOL_EOT
from engine.evaluator import values_equal
from models.values import value_to_json
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class TraceRow:
    """
    σ_tick and its provenance.

    Attributes:
        written: Symbol -> instance for scenario writes that formed this valuation
        frames: Frame of each writing instance when it wrote
        published: Objects whose cycle published into this valuation
        links: (from, to) interface pairs propagated into this valuation
        events: Collaboration events effective from this valuation on
        interfaces: (from, to) pairs of every live interface while this valuation was formed
        cycles: Object path -> (cycletime, phase) at the start of the step forming this valuation
    """
    tick: int
    valuation: Dict[str, Any]
    written: Dict[str, str] = field(default_factory=dict)
    frames: Dict[str, List[str]] = field(default_factory=dict)
    published: List[str] = field(default_factory=list)
    links: List[Tuple[str, str]] = field(default_factory=list)
    events: List[Dict[str, Any]] = field(default_factory=list)
    interfaces: List[Tuple[str, str]] = field(default_factory=list)
    cycles: Dict[str, Tuple[int, int]] = field(default_factory=dict)

    @property
    def end_of_test(self) -> bool:
        return self.valuation.get(SYMBOL_EOT) is True

    def to_dict(self) -> Dict[str, Any]:
        return {
            'tick': self.tick,
            'valuation': {k: value_to_json(v) for k, v in sorted(self.valuation.items())},
            'written': dict(sorted(self.written.items())),
            'published': list(self.published),
            'events': list(self.events),
        }


class Trace:
    """
    Ordered rows σ_0 .. σ_q.

    Features:
    - NDJSON export, one row per line
    - Output symbols per object for the output-constancy check
    """

    def __init__(self):
        self.rows: List[TraceRow] = []
        self.outputs: Dict[str, List[str]] = {}

    def append(self, row: TraceRow):
        self.rows.append(row)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self) -> Iterator[TraceRow]:
        return iter(self.rows)

    def __getitem__(self, k: int) -> TraceRow:
        return self.rows[k]

    @property
    def valuations(self) -> List[Dict[str, Any]]:
        return [row.valuation for row in self.rows]

    def first_tick(self, symbol: str, value: Any) -> Optional[int]:
        for row in self.rows:
            if symbol in row.valuation and values_equal(row.valuation[symbol], value):
                return row.tick
        return None

    def to_ndjson(self) -> str:
        return "".join(json.dumps(row.to_dict(), ensure_ascii=False, sort_keys=True) + "\n" for row in self.rows)

    def write(self, path: str) -> bool:
        try:
            Path(path).parent.mkdir(parents=True, exist_ok=True)
            Path(path).write_text(self.to_ndjson(), encoding="utf-8")
            logger.info(f"Trace written: {path} ({len(self.rows)} valuations)")
            return True
        except Exception as e:
            logger.error(f"Failed to write trace {path}: {e}")
            return False


# ════════════════════════════════════════════════════════
# TRACE LAWS
# ════════════════════════════════════════════════════════

def check_interface_law(trace: Trace) -> List[str]:
    """σ_k+1(to) = σ_k(from) for every live interface not overridden by a scenario"""
    problems = []
    for prev, row in zip(trace.rows, trace.rows[1:]):
        propagated = set(row.links)
        for source, target in row.interfaces:
            if source not in prev.valuation:
                continue
            if (source, target) not in propagated:
                problems.append(f"tick {row.tick}: live interface {source} -> {target} did not propagate")
            if target in row.written or target not in row.valuation:
                continue
            if not values_equal(row.valuation[target], prev.valuation[source]):
                problems.append(f"tick {row.tick}: {target} does not carry {source}")
    return problems


def check_output_constancy(trace: Trace) -> List[str]:
    """Outputs change only at the last phase of their object's cycle (or by a scenario write)"""
    problems = []
    for prev, row in zip(trace.rows, trace.rows[1:]):
        for path, symbols in trace.outputs.items():
            if path not in row.cycles:
                continue
            cycletime, phase = row.cycles[path]
            publishes = phase == cycletime - 1
            if publishes != (path in row.published):
                problems.append(f"tick {row.tick}: {path} published at phase {phase} of {cycletime}"
                                if not publishes else f"tick {row.tick}: {path} missed its publication")
            if publishes:
                continue
            for symbol in symbols:
                if symbol in row.written or symbol not in row.valuation or symbol not in prev.valuation:
                    continue
                if not values_equal(row.valuation[symbol], prev.valuation[symbol]):
                    problems.append(f"tick {row.tick}: {symbol} changed between cycles of {path}")
    return problems


def check_end_of_test(trace: Trace) -> List[str]:
    """EoT is false everywhere but the final valuation"""
    problems = []
    if not trace.rows:
        return ["empty trace"]
    for row in trace.rows[:-1]:
        if row.end_of_test:
            problems.append(f"tick {row.tick}: EoT before the final valuation")
    if not trace.rows[-1].end_of_test:
        problems.append("final valuation does not have EoT")
    return problems


def check_frame_soundness(trace: Trace) -> List[str]:
    """Every scenario write lies in the writer's frame"""
    problems = []
    for row in trace.rows:
        for symbol, instance in row.written.items():
            if symbol not in row.frames.get(instance, ()):
                problems.append(f"tick {row.tick}: {instance} wrote {symbol} outside its frame")
    return problems


def check_trace_laws(trace: Trace) -> Dict[str, List[str]]:
    """Problems per law; all lists empty for an engine-produced trace"""
    return {
        'interface': check_interface_law(trace),
        'output_constancy': check_output_constancy(trace),
        'end_of_test': check_end_of_test(trace),
        'frame': check_frame_soundness(trace),
    }


def snapshot(valuation: Mapping[str, Any]) -> Dict[str, Any]:
    return dict(valuation)
