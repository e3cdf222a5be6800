"""
models.py
----------------
Builders for the bundled case studies: tumour growth (PPS), ant colony (OPERAS)
and the two-ant food exchange (CXM)
Copyright (C) 2026 operasim contributors

Licensed under the GNU GENERAL PUBLIC LICENSE, Version 3 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.gnu.org/licenses/gpl-3.0.html

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

from .cxm_system import Channel, CxmModel, MachineInstance
from .dsl_parser import parse_expression
from .errors import ParameterError
from .expressions import INPUT_VAR, IntLit, Var
from .multiset import Multiset
from .operas import AddChannel, AgentDecl, AgentType, OperasModel, ReconfigRule, RemoveChannel, percept_alphabet
from .pps_model import Die, Differentiate, Divide, PpsModel, Transform
from .seeded_rng import SeededRng
from .xm_engine import GuardedFunction, MemoryField, PEER, Port, PortKind, STREAM, Transition, XMachineDef

#
# tumour growth
#

DEFAULT_T_MAT = 3
DEFAULT_D_T = 6
DEFAULT_D_M = 4

STEM = "stem"
TRANSITORY = "transitory"
METATRANSITORY = "metatransitory"

AGE = "age"
META = "meta"


def _ms(*symbols: str) -> Multiset:
    return Multiset.from_symbols(symbols)


def tr(k: int) -> str:
    return f"tr{k}"


def mt(k: int) -> str:
    return f"mt{k}"


def build_tumour(t_mat: int = DEFAULT_T_MAT, d_t: int = DEFAULT_D_T, d_m: int = DEFAULT_D_M) -> PpsModel:
    """
    Tumour growth from a single stem cell.

    A stem cell {s} divides every step, either asymmetrically (a transitory daughter)
    or symmetrically (a metastatic stem {sm, meta}). Transitory cells carry the stage
    object trK and K copies of 'age'; they divide while younger than t_mat, then age
    by transformation and die at d_t. Offspring of a metastatic stem carry mtK and the
    meta marker, turn metatransitory at t_mat and die at d_m.
    """
    if min(t_mat, d_t, d_m) < 1:
        raise ParameterError(f"Ages must be positive (t_mat={t_mat}, d_t={d_t}, d_m={d_m})")
    if not t_mat < d_m:
        raise ParameterError(f"Maturity age t_mat={t_mat} must be below the metatransitory death age d_m={d_m}")
    if not d_m < d_t:
        raise ParameterError(f"Metatransitory death age d_m={d_m} must be below the transitory death age d_t={d_t}")

    rules = [
        Divide("s", _ms("s"), _ms(tr(0)), STEM, TRANSITORY),
        Divide("s", _ms("s"), _ms("sm", META), STEM),
        Divide("sm", _ms("sm"), _ms(mt(0)), STEM, TRANSITORY),
    ]
    for k in range(d_t):
        if k < t_mat:
            rules.append(Divide(tr(k), _ms(tr(k + 1), AGE), _ms(tr(k + 1), AGE), TRANSITORY))
        else:
            rules.append(Transform(tr(k), _ms(tr(k + 1), AGE), TRANSITORY))
    rules.append(Die(tr(d_t), TRANSITORY))

    for k in range(t_mat):
        rules.append(Divide(mt(k), _ms(mt(k + 1), AGE), _ms(mt(k + 1), AGE), TRANSITORY))
    rules.append(Differentiate(mt(t_mat), _ms(mt(t_mat + 1), AGE), TRANSITORY, METATRANSITORY))
    for k in range(t_mat + 1, d_m):
        rules.append(Transform(mt(k), _ms(mt(k + 1), AGE), METATRANSITORY))
    rules.append(Die(mt(d_m), METATRANSITORY))

    alphabet = {"s", "sm", META, AGE}
    alphabet.update(tr(k) for k in range(d_t + 1))
    alphabet.update(mt(k) for k in range(d_m + 1))
    return PpsModel(
        alphabet=frozenset(alphabet),
        cell_types=frozenset({STEM, TRANSITORY, METATRANSITORY}),
        initial_cells=((_ms("s"), STEM),),
        rules=tuple(rules),
        name="tumour",
    )


def cell_age(contents: Multiset) -> int:
    return contents.count(AGE)


#
# ant colony
#

DEFAULT_GRID = 10
DEFAULT_THRESHOLD = 5
DEFAULT_ANTS = 4
DEFAULT_MAX_FOOD = 10
DEFAULT_FOOD_SOURCES = ((7, 7, 10), (2, 8, 6))
DEFAULT_NEST_EXIT = (0, 0)

ANT = "ant"
FOOD = "food"
PHEROMONE = "pheromone"
NEST_EXIT = "nest_exit"

# parameters of the linear congruential walk kept in each ant's memory
LCG_MULTIPLIER = 1103515245
LCG_INCREMENT = 12345
LCG_MODULUS = 2**31

_NEXT_WALK = f"(walk * {LCG_MULTIPLIER} + {LCG_INCREMENT}) % {LCG_MODULUS}"
_NEXT_DIRECTION = f"({_NEXT_WALK}) / 65536 % 4"


def _fn(name: str, guard: str, output: str | None = None, updates: dict[str, str] | None = None, source: Port = STREAM, target: Port = STREAM) -> GuardedFunction:
    return GuardedFunction(
        name=name,
        guard=parse_expression(guard),
        output=Var(INPUT_VAR) if output is None else parse_expression(output),
        updates=tuple((f, parse_expression(e)) for f, e in (updates or {}).items()),
        source=source,
        target=target,
    )


def _step_towards(prefix: str) -> dict[str, str]:
    return {
        "x": f"if input == '{prefix}_E' then x + 1 else if input == '{prefix}_W' then x - 1 else x",
        "y": f"if input == '{prefix}_S' then y + 1 else if input == '{prefix}_N' then y - 1 else y",
    }


def _directions(prefix: str) -> str:
    return "{" + ", ".join(f"'{prefix}_{d}'" for d in ("N", "E", "S", "W")) + "}"


def ant_machine(width: int, height: int, threshold: int) -> XMachineDef:
    """
    Behaviour of a worker ant. Inactive ants rest, give their surplus to a peer or wake
    up when hungry; active ants eat, follow food and pheromone, wander or leave through
    the nest exit; ants outside forage and re-enter at random.
    """
    hungry = "food < threshold"
    tick = "input == 'tick'"
    functions = [
        _fn("giveFood", f"{tick} and food > threshold", "food - threshold", {"food": "threshold"}, target=PEER),
        _fn("rest", f"{tick} and food == threshold", "'stay'"),
        _fn("wake", f"{tick} and {hungry}", "'stay'"),
        _fn("takeEnoughFood", "input > 0", "'stay'", {"food": "food + input"}, source=PEER),
        _fn("eat", f"input == 'food_here' and {hungry}", "'take_food'", {"food": "food + 1"}),
        _fn("seek", f"input in {_directions(FOOD)} and {hungry}", "'drop_pheromone'", _step_towards(FOOD)),
        _fn("go_out", f"input == 'nest_exit_here' and {hungry}", "'stay'"),
        _fn("follow", f"input in {_directions(PHEROMONE)} and {hungry}", "'move'", _step_towards(PHEROMONE)),
        _fn(
            "wander",
            f"{tick} and {hungry}",
            "'move'",
            {
                "x": f"if {_NEXT_DIRECTION} == 1 and x < {width - 1} then x + 1 "
                f"else if {_NEXT_DIRECTION} == 3 and x > 0 then x - 1 else x",
                "y": f"if {_NEXT_DIRECTION} == 2 and y < {height - 1} then y + 1 "
                f"else if {_NEXT_DIRECTION} == 0 and y > 0 then y - 1 else y",
                "walk": _NEXT_WALK,
            },
        ),
        _fn("settle", f"{tick} and food >= threshold", "'stay'"),
        _fn("forage", f"{tick} and {_NEXT_DIRECTION} != 0", "'stay'", {"food": "food + 1", "walk": _NEXT_WALK}),
        _fn("reenter", f"{tick} and {_NEXT_DIRECTION} == 0", "'move'", {"walk": _NEXT_WALK}),
    ]
    transitions = [
        Transition("inactive", "giveFood", "inactive"),
        Transition("inactive", "rest", "inactive"),
        Transition("inactive", "wake", "active"),
        Transition("inactive", "takeEnoughFood", "inactive"),
        Transition("active", "takeEnoughFood", "inactive"),
        Transition("active", "eat", "active"),
        Transition("active", "seek", "active"),
        Transition("active", "go_out", "outside"),
        Transition("active", "follow", "active"),
        Transition("active", "wander", "active"),
        Transition("active", "settle", "inactive"),
        Transition("outside", "forage", "outside"),
        Transition("outside", "reenter", "active"),
    ]
    return XMachineDef(
        name=ANT,
        inputs=percept_alphabet(frozenset({FOOD, NEST_EXIT, PHEROMONE})),
        outputs=frozenset({"take_food", "drop_pheromone", "move", "stay"}),
        states=frozenset({"inactive", "active", "outside"}),
        memory=(
            MemoryField("x", "int", IntLit(0)),
            MemoryField("y", "int", IntLit(0)),
            MemoryField("food", "int", IntLit(0)),
            MemoryField("threshold", "int", IntLit(threshold)),
            MemoryField("walk", "int", IntLit(1)),
        ),
        functions=tuple(functions),
        transitions=tuple(transitions),
        initial_state="inactive",
    )


def build_ants(
    n_ants: int = DEFAULT_ANTS,
    width: int = DEFAULT_GRID,
    height: int = DEFAULT_GRID,
    threshold: int = DEFAULT_THRESHOLD,
    seed: int = 0,
    food_sources: tuple[tuple[int, int, int], ...] = DEFAULT_FOOD_SOURCES,
    nest_exit: tuple[int, int] | None = DEFAULT_NEST_EXIT,
    max_initial_food: int = DEFAULT_MAX_FOOD,
) -> OperasModel:
    """
    A colony of worker ants on a grid. Positions, initial food in [0, max_initial_food]
    and walk states are drawn from the seed. Lonely ants connect to their nearest
    neighbour; an ant with several peers drops the farthest one.
    """
    if width < 1 or height < 1:
        raise ParameterError(f"Grid {width}x{height} must be at least 1x1")
    if threshold <= 0:
        raise ParameterError(f"Threshold {threshold} must be positive")
    if n_ants < 0 or max_initial_food < 0:
        raise ParameterError("Ant count and initial food must not be negative")
    for x, y, n in food_sources:
        if not (0 <= x < width and 0 <= y < height) or n < 1:
            raise ParameterError(f"Food source ({x},{y}) x{n} is outside the grid or empty")
    if nest_exit is not None and not (0 <= nest_exit[0] < width and 0 <= nest_exit[1] < height):
        raise ParameterError(f"Nest exit {nest_exit} is outside the grid")

    rng = SeededRng(seed)
    agents = []
    for _ in range(n_ants):
        memory = {
            "x": rng.integer_in(0, width - 1),
            "y": rng.integer_in(0, height - 1),
            "food": rng.integer_in(0, max_initial_food),
            "walk": rng.integer_in(1, LCG_MODULUS - 1),
        }
        agents.append(AgentDecl(ANT, tuple((f, IntLit(v)) for f, v in memory.items())))

    places = [(x, y, Multiset({FOOD: n})) for x, y, n in food_sources]
    if nest_exit is not None:
        places.append((nest_exit[0], nest_exit[1], Multiset({NEST_EXIT: 1})))

    ant = AgentType(ANT, frozenset({FOOD, NEST_EXIT, PHEROMONE}), ant_machine(width, height, threshold))
    return OperasModel(
        width=width,
        height=height,
        agent_types=(ant,),
        agents=tuple(agents),
        places=tuple(places),
        rules=(
            ReconfigRule("meet", parse_expression("peers == 0"), AddChannel("nearest")),
            ReconfigRule("part", parse_expression("peers > 1"), RemoveChannel("farthest_peer")),
        ),
        name="ants",
    )


#
# food exchange between two ants
#

SHARE_CHANNEL = "share"


def build_food_exchange(donor_food: int = 10, receiver_food: int = 2, threshold: int = DEFAULT_THRESHOLD, ticks: int = 3) -> CxmModel:
    """
    A donor ant above the threshold sends its surplus over the 'share' channel; a hungry
    receiver wakes, takes it one round later and settles.
    """
    if threshold <= 0:
        raise ParameterError(f"Threshold {threshold} must be positive")
    if donor_food < 0 or receiver_food < 0:
        raise ParameterError("Food reserves must not be negative")
    if ticks < 0:
        raise ParameterError("Tick count must not be negative")

    share = Port(PortKind.CHANNEL, SHARE_CHANNEL)
    memory = (MemoryField("food", "int", IntLit(0)), MemoryField("threshold", "int", IntLit(threshold)))
    donor = XMachineDef(
        name="donor",
        inputs=frozenset({"tick"}),
        outputs=frozenset({"stay"}),
        states=frozenset({"inactive"}),
        memory=memory,
        functions=(
            _fn("giveFood", "food > threshold", "food - threshold", {"food": "threshold"}, target=share),
            _fn("rest", "food <= threshold", "'stay'"),
        ),
        transitions=(
            Transition("inactive", "giveFood", "inactive"),
            Transition("inactive", "rest", "inactive"),
        ),
        initial_state="inactive",
    )
    receiver = XMachineDef(
        name="receiver",
        inputs=frozenset({"tick"}),
        outputs=frozenset({"stay"}),
        states=frozenset({"inactive", "active"}),
        memory=memory,
        functions=(
            _fn("wake", "food < threshold", "'stay'"),
            _fn("rest", "food >= threshold", "'stay'"),
            _fn("takeEnoughFood", "true", "'stay'", {"food": "food + input"}, source=share),
            _fn("settle", "food >= threshold", "'stay'"),
        ),
        transitions=(
            Transition("inactive", "wake", "active"),
            Transition("inactive", "rest", "inactive"),
            Transition("active", "takeEnoughFood", "active"),
            Transition("active", "settle", "inactive"),
        ),
        initial_state="inactive",
    )
    stream = ("tick",) * ticks
    return CxmModel(
        machines=(donor, receiver),
        instances=(
            MachineInstance("giver", "donor", (("food", IntLit(donor_food)),), stream),
            MachineInstance("taker", "receiver", (("food", IntLit(receiver_food)),), stream),
        ),
        channels=(Channel(SHARE_CHANNEL, "giver", "taker"),),
        name="food_exchange",
    )
