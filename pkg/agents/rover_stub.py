"""
Rover Stub
Reference SUT of the bundled rover example: rovers, GPS sensor and command centre

Features:
- Grid rovers: one unit step per cycle, larger remaining axis first (x on ties)
- Dead reckoning: steps are planned from the reported position and applied to the true one
- Obstacle skirting around known exclusion zone cells
- GPS sensor reporting true positions unless a scenario overrides them
- Command centre bookkeeping: item reservations and reassignment of a lost rover's item
"""
import math
import re
from typing import Any, Dict, List, Mapping, Optional, Tuple

from config import STIM_PREFIX
from engine.geometry import in_exclusion_zone, is_close_to
from engine.stepper import ObjectRuntime, SutModel
from models.values import EnumLit, format_value, location, location_xy
from utils.logger import setup_logger

logger = setup_logger(__name__)

Cell = Tuple[int, int]

DEFAULT_SPIN_UP = 2
DEFAULT_LOAD_TICKS = 2

_ITEM_KEY = re.compile(r"^set_item(\d+)$")
_ZONE_KEY = re.compile(r"^set_zone(\d+)$")

START_SIGNAL = f"{STIM_PREFIX}simulation_start"


def stim_entities(valuation: Mapping[str, Any], pattern) -> Dict[int, Tuple[float, float]]:
    """Numbered placements (set_item1, set_item1_x, set_item1_y) present in a valuation"""
    found = {}
    for symbol, value in valuation.items():
        if not symbol.startswith(STIM_PREFIX) or value is not True:
            continue
        key = symbol[len(STIM_PREFIX):]
        match = pattern.match(key)
        if match:
            x = valuation.get(f"{symbol}_x")
            y = valuation.get(f"{symbol}_y")
            if x is not None and y is not None:
                found[int(match.group(1))] = (float(x), float(y))
    return dict(sorted(found.items()))


def _sign(v: float) -> int:
    return (v > 0) - (v < 0)


def _fmt(v: float) -> str:
    return str(int(v)) if float(v).is_integer() else str(v)


class RoverModel(SutModel):
    """
    Rover, GPS and command-centre behaviour for World runs.

    Args:
        spin_up: Idle cycles between entering approaching and the first step
        load_ticks: Cycles needed to load an item
    """
    name = "rover"

    def __init__(self, spin_up: int = DEFAULT_SPIN_UP, load_ticks: int = DEFAULT_LOAD_TICKS):
        self.spin_up = spin_up
        self.load_ticks = load_ticks
        self.reservations: Dict[int, int] = {}   # item number -> rover index
        self.items: Dict[int, Tuple[float, float]] = {}
        self.started = False

    def bind(self, world):
        super().bind(world)
        self.spec = world.spec
        self.consts = world.consts
        self.run_log = world.run_log
        logger.info(f"RoverModel initialized (spin-up {self.spin_up}, load {self.load_ticks})")

    # ════════════════════════════════════════════════════════
    # HELPERS
    # ════════════════════════════════════════════════════════

    def _status(self, name: str) -> EnumLit:
        decl = self.spec.enum("Status")
        return EnumLit(decl.name, name, decl.literals.index(name))

    def _is_rover(self, obj: ObjectRuntime) -> bool:
        return obj.decl.name == "Rover"

    def _rovers(self) -> List[ObjectRuntime]:
        return [obj for obj in self.world.objects.values() if self._is_rover(obj)]

    def _label(self, obj: ObjectRuntime) -> str:
        return f"Rover {(obj.index or 0) + 1}"

    def _in_zone(self, xy: Tuple[float, float]) -> bool:
        return in_exclusion_zone(location(*xy), self.consts.get("exclusionZone") or ())

    def _known_cells(self) -> List[Cell]:
        zones = stim_entities(self.world.current, _ZONE_KEY)
        return [(int(round(x)), int(round(y))) for x, y in zones.values()]

    def _close(self, a: Tuple[float, float], b: Tuple[float, float]) -> bool:
        eps = self.consts.get("epsilon")
        if isinstance(eps, (int, float)) and not isinstance(eps, bool):
            return is_close_to(location(*a), location(*b), float(eps))
        return is_close_to(location(*a), location(*b))

    def _t(self, tick: int) -> float:
        return self.world.time_of(tick)

    # ════════════════════════════════════════════════════════
    # SUT HOOKS
    # ════════════════════════════════════════════════════════

    def initial_values(self, obj: ObjectRuntime) -> Dict[str, Any]:
        if not self._is_rover(obj):
            return {}
        starts = self.consts.get("startPos") or ()
        index = obj.index or 0
        xy = location_xy(starts[index]) if index < len(starts) else None
        xy = xy or (0.0, 0.0)
        obj.state = {
            'true': xy, 'status': "initial", 'spin': 0, 'load': 0,
            'destroyed': False, 'dead': False, 'glitching': False,
        }
        return {'pos': location(*xy)}

    def cycle(self, obj: ObjectRuntime, tick: int) -> Dict[str, Any]:
        if not self._is_rover(obj):
            if not self.started and self.world.current.get(START_SIGNAL) is True:
                self._reserve(tick)
            return {}
        st = obj.state
        if st['dead'] or self.world.current.get(START_SIGNAL) is not True:
            return {}

        believed = location_xy(obj.latched.get('pos')) or st['true']
        if self._in_zone(believed):
            st['dead'] = True
            st['status'] = "fault"
            self.run_log.stamped(self._t(tick), f"{self._label(obj)} Pos {format_value(location(*believed))} "
                                                f"(State: DEAD)")
            logger.info(f"{self._label(obj)} reports fault at {believed}")
            return {'s': self._status("fault")}

        self._advance(obj, tick, believed)
        self.run_log.stamped(self._t(tick), f"{self._label(obj)} Pos {format_value(location(*believed))} "
                                            f"(State: {st['status'].upper()})")
        return {'s': self._status(st['status'])}

    def _advance(self, obj: ObjectRuntime, tick: int, believed: Tuple[float, float]):
        st = obj.state
        cmd = obj.latched.get('cmd')
        cmd = cmd.name if isinstance(cmd, EnumLit) else None
        dst = location_xy(obj.latched.get('dst'))
        status = st['status']

        if status == "initial":
            if cmd == "goToDst":
                st['status'], st['spin'] = "approaching", self.spin_up
        elif status == "approaching":
            if cmd == "returnToDst":
                st['status'] = "returning"
            elif st['spin'] > 0:
                st['spin'] -= 1
            elif dst is not None and self._close(believed, dst):
                st['status'] = "atDst"
            elif dst is not None:
                self._move(obj, believed, dst)
        elif status == "atDst":
            if cmd == "returnToDst":
                st['status'] = "returning"
            elif cmd == "pickUpItem":
                st['load'] += 1
                if st['load'] >= self.load_ticks:
                    st['status'] = "itemLoaded"
        elif status == "itemLoaded":
            if cmd == "returnToDst":
                st['status'] = "returningWithItem"
        elif status in ("returning", "returningWithItem"):
            if dst is not None and self._close(believed, dst):
                st['status'] = "returned" if status == "returning" else "returnedWithItem"
            elif dst is not None:
                self._move(obj, believed, dst)

    def _move(self, obj: ObjectRuntime, believed: Tuple[float, float], dst: Tuple[float, float]):
        st = obj.state
        if st['destroyed']:
            return
        dx, dy = self._plan(believed, dst)
        tx, ty = st['true']
        st['true'] = (tx + dx, ty + dy)
        if self._in_zone(st['true']):
            st['destroyed'] = True
            logger.info(f"{self._label(obj)} destroyed at {st['true']}")

    def _plan(self, pos: Tuple[float, float], dst: Tuple[float, float]) -> Cell:
        """Unit step from pos towards dst, skirting known zone cells"""
        rx, ry = dst[0] - pos[0], dst[1] - pos[1]
        along_x = (_sign(rx), 0)
        along_y = (0, _sign(ry))
        first, second = (along_x, along_y) if abs(rx) >= abs(ry) else (along_y, along_x)
        blocked = set(self._known_cells())

        def free(step: Cell) -> bool:
            cell = (int(round(pos[0] + step[0])), int(round(pos[1] + step[1])))
            return step != (0, 0) and cell not in blocked

        for step in (first, second):
            if free(step):
                return step
        # sidestep perpendicular to the blocked direction
        for step in ((first[1], first[0]), (-first[1], -first[0])):
            if free(step):
                return step
        return (0, 0)

    def sensors(self, tick: int, current: Mapping[str, Any], nxt: Mapping[str, Any]) -> Dict[str, Any]:
        return {obj.symbols['pos']: location(*obj.state['true']) for obj in self._rovers()}

    def after_step(self, tick: int, current: Mapping[str, Any], nxt: Mapping[str, Any],
                   written: Mapping[str, str]):
        for obj in self._rovers():
            st = obj.state
            symbol = obj.symbols['pos']
            if symbol in written and not st['glitching']:
                st['glitching'] = True
                true = location(*st['true'])
                self.run_log.tagged("GPS", f"Simulate fault for {self._label(obj)}")
                self.run_log.tagged("GPS", f"{self._label(obj)} True{format_value(true)} "
                                           f"GPS{format_value(nxt[symbol])}")
            elif symbol not in written and st['glitching']:
                st['glitching'] = False
                self.run_log.tagged("GPS", f"Signal restored for {self._label(obj)}")

    # ════════════════════════════════════════════════════════
    # COMMAND CENTRE
    # ════════════════════════════════════════════════════════

    def _reserve(self, tick: int):
        """Reserve every placed item for the nearest rover without a reservation"""
        self.started = True
        self.items = stim_entities(self.world.current, _ITEM_KEY)
        taken = set()
        for number, xy in self.items.items():
            candidates = [obj for obj in self._rovers() if obj.index not in taken]
            nearest = self._nearest(candidates, xy)
            if nearest is None:
                break
            taken.add(nearest.index)
            self.reservations[number] = nearest.index
            self.run_log.stamped(self._t(tick), f"Reserve Item {number} {self._item_text(xy)} "
                                                f"for {self._label(nearest)}", level="CommandCentre")

    def _nearest(self, candidates: List[ObjectRuntime], xy: Tuple[float, float]) -> Optional[ObjectRuntime]:
        def distance(obj: ObjectRuntime) -> Tuple[float, int]:
            px, py = obj.state['true']
            return (math.hypot(px - xy[0], py - xy[1]), obj.index or 0)
        return min(candidates, key=distance) if candidates else None

    @staticmethod
    def _item_text(xy: Tuple[float, float]) -> str:
        return f"({_fmt(xy[0])}, {_fmt(xy[1])})"

    def on_event(self, tick: int, event: Dict[str, Any]):
        if event['kind'] != "delete" or event.get('noop'):
            return
        path = event['target']
        lost = [n for n, index in self.reservations.items() if f"[{index}]" in path and ".r[" in path]
        operative = [obj for obj in self._rovers() if obj.path != path and not obj.state['dead']]
        for number in lost:
            xy = self.items[number]
            nearest = self._nearest(operative, xy)
            if nearest is None:
                self.run_log.stamped(self._t(tick + 1), f"No rover left for Item {number}",
                                     level="CommandCentre")
                del self.reservations[number]
                continue
            self.reservations[number] = nearest.index
            self.run_log.stamped(self._t(tick + 1), f"Reschedule Item {number} {self._item_text(xy)} "
                                                    f"to {self._label(nearest)}", level="CommandCentre")

