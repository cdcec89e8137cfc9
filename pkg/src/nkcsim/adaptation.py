"""Adaptation primitives for binary decision sequences.

Decision values are exact :class:`fractions.Fraction` objects; threshold
comparisons never touch floats. Random streams are ``numpy.random.Generator``
instances and every draw is a single ``rng.random()`` call, so the number of
uniforms a generator consumes is a function of the configuration only.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import InvalidInputError, InvalidSeedError, UnsupportedRuleError

HALF = Fraction(1, 2)


class Role(str, enum.Enum):
    HUMAN = "human"
    AI = "ai"


class Rule(str, enum.Enum):
    """How a window of past states becomes a decision value."""

    HEURISTIC_LINEAR = "heuristic"  # weights 1..W, most recent heaviest
    RULE_UNIFORM = "uniform"  # equal weights
    HALLUCINATORY = "hallucinatory"  # no memory, fair coin


class Perpetuation(str, enum.Enum):
    RULE_BASED = "rule"
    HALLUCINATORY = "hallucinatory"


@dataclass(frozen=True)
class Threshold:
    tie_maps_to_one: bool = False


@dataclass(frozen=True)
class Probabilistic:
    pass


UpdateMode = Union[Threshold, Probabilistic]


@dataclass(frozen=True)
class BitSequence:
    states: tuple[int, ...]

    def __post_init__(self) -> None:
        states = tuple(self.states)
        if not states:
            raise InvalidInputError("a bit sequence needs at least one state")
        for s in states:
            if s not in (0, 1) or isinstance(s, float):
                raise InvalidInputError(f"decision states must be 0 or 1, got {s!r}")
        object.__setattr__(self, "states", tuple(int(s) for s in states))

    @property
    def length(self) -> int:
        return len(self.states)

    def __len__(self) -> int:
        return len(self.states)

    def __iter__(self):
        return iter(self.states)

    def __getitem__(self, item):
        return self.states[item]

    def ones(self) -> int:
        return sum(self.states)


@dataclass(frozen=True)
class AgentSpec:
    """One searching agent.

    ``n`` is the size of the agent's search space and ``k`` the number of
    prior states its update rule looks at.
    """

    role: Role
    n: int
    k: int
    rule: Rule
    mode: UpdateMode = Probabilistic()

    def __post_init__(self) -> None:
        if not isinstance(self.n, int) or self.n < 1:
            raise InvalidInputError(f"n must be a positive integer, got {self.n!r}")
        if not isinstance(self.k, int) or not 0 <= self.k <= self.n - 1:
            raise InvalidInputError(f"k must satisfy 0 <= k <= n-1 = {self.n - 1}, got {self.k!r}")
        if self.role is Role.HUMAN and self.rule is not Rule.HEURISTIC_LINEAR:
            raise InvalidInputError("human agents adapt with the heuristic (linear-weight) rule")
        if self.role is Role.AI and self.rule is Rule.HEURISTIC_LINEAR:
            raise InvalidInputError("AI agents adapt with the uniform or hallucinatory rule")
        if not isinstance(self.mode, (Threshold, Probabilistic)):
            raise InvalidInputError(f"unknown update mode {self.mode!r}")


def weights(rule: Rule, width: int) -> tuple[int, ...]:
    """Integer weights for a window of ``width`` states, oldest first."""
    if rule is Rule.HEURISTIC_LINEAR:
        return tuple(range(1, width + 1))
    if rule is Rule.RULE_UNIFORM:
        return (1,) * width
    raise UnsupportedRuleError("the hallucinatory rule has no decision value")


def decision_ratio(window: Sequence[int], rule: Rule) -> tuple[int, int]:
    """Unreduced (weighted sum, total weight) behind :func:`decision_value`."""
    if rule is Rule.HALLUCINATORY:
        raise UnsupportedRuleError("the hallucinatory rule has no decision value")
    if len(window) == 0:
        raise InvalidInputError("decision window is empty")
    w = weights(rule, len(window))
    return sum(a * int(x) for a, x in zip(w, window)), sum(w)


def decision_value(window: Sequence[int], rule: Rule) -> Fraction:
    """Weighted mean of ``window`` (oldest state first) under ``rule``.

    >>> decision_value([0, 0, 0, 1, 1], Rule.HEURISTIC_LINEAR)
    Fraction(3, 5)
    >>> decision_value([0, 0, 0, 1, 1], Rule.RULE_UNIFORM)
    Fraction(2, 5)
    """
    return Fraction(*decision_ratio(window, rule))


def fair_bit(rng: np.random.Generator) -> int:
    return 1 if rng.random() < 0.5 else 0


def bernoulli_bit(rng: np.random.Generator, p: Fraction) -> int:
    # u < num/den evaluated as u*den < num; the batch engine uses the same expression
    return 1 if rng.random() * p.denominator < p.numerator else 0


def threshold_bit(value: Fraction, tie_maps_to_one: bool) -> int:
    if value > HALF:
        return 1
    return 1 if (tie_maps_to_one and value == HALF) else 0


def next_state(
    window: Sequence[int],
    rule: Rule,
    mode: UpdateMode,
    rng: np.random.Generator | None = None,
) -> int:
    """Next decision state given the window of prior states."""
    if rule is Rule.HALLUCINATORY:
        return fair_bit(_need(rng))
    value = decision_value(window, rule)
    if isinstance(mode, Threshold):
        return threshold_bit(value, mode.tie_maps_to_one)
    return bernoulli_bit(_need(rng), value)


def _need(rng: np.random.Generator | None) -> np.random.Generator:
    if rng is None:
        raise InvalidInputError("this update needs a random stream")
    return rng


@dataclass(frozen=True)
class Step:
    """Diagnostic record of one generated state."""

    index: int  # 1-based position in the generated sequence
    window: tuple[int, ...]
    base_count: int  # how many window entries come from the seeding sequence
    value: Fraction | None  # None for fair draws
    state: int


def generate_self_seeded(
    spec: AgentSpec,
    rng: np.random.Generator,
    trace: list[Step] | None = None,
) -> BitSequence:
    """Search of length ``spec.n`` started from fair coin flips.

    The first ``max(k, 1)`` states are fair draws; every later state is
    ``next_state`` over the ``k`` most recent states. With ``k == 0`` or the
    hallucinatory rule all states are fair draws.
    """
    states: list[int] = []
    n, k = spec.n, spec.k
    memoryless = k == 0 or spec.rule is Rule.HALLUCINATORY
    n_initial = n if memoryless else max(k, 1)
    for i in range(n_initial):
        bit = fair_bit(rng)
        states.append(bit)
        if trace is not None:
            trace.append(Step(i + 1, (), 0, None, bit))
    for i in range(n_initial, n):
        window = states[i - k:i]
        value = decision_value(window, spec.rule)
        if isinstance(spec.mode, Threshold):
            bit = threshold_bit(value, spec.mode.tie_maps_to_one)
        else:
            bit = bernoulli_bit(rng, value)
        states.append(bit)
        if trace is not None:
            trace.append(Step(i + 1, tuple(window), 0, value, bit))
    return BitSequence(tuple(states))


def seed_window(base: Sequence[int], generated: Sequence[int], index: int, width: int) -> tuple[tuple[int, ...], int]:
    """Window for generated state ``index`` (1-based) and its base-state count.

    While ``index`` is within the seeding sequence the window slides along the
    seeding sequence followed by the earliest generated states. Past the end
    of the seeding sequence it is the ``width`` most recent generated states.
    """
    n_base = len(base)
    if index <= n_base:
        from_base = tuple(base[index - 1:index - 1 + width])
        rest = tuple(generated[:width - len(from_base)])
        return from_base + rest, len(from_base)
    return tuple(generated[index - 1 - width:index - 1]), 0


def generate_from_seed_window(
    base: BitSequence | Sequence[int],
    window_size: int,
    target_len: int,
    rule: Rule,
    mode: UpdateMode,
    perpetuation: Perpetuation = Perpetuation.RULE_BASED,
    rng: np.random.Generator | None = None,
    trace: list[Step] | None = None,
) -> BitSequence:
    """Continue another agent's sequence with a sliding window of ``window_size``.

    States at positions up to ``len(base)`` always follow ``rule``; beyond
    that, hallucinatory perpetuation replaces the rule with fair draws.
    """
    base = tuple(base)
    if window_size < 1 or target_len < 1:
        raise InvalidInputError("window size and target length must be positive")
    if window_size > len(base):
        raise InvalidSeedError(f"window size {window_size} exceeds seed length {len(base)}")
    generated: list[int] = []
    for i in range(1, target_len + 1):
        if rule is Rule.HALLUCINATORY or (
            perpetuation is Perpetuation.HALLUCINATORY and i > len(base)
        ):
            bit = fair_bit(_need(rng))
            window, from_base, value = (), 0, None
        else:
            window, from_base = seed_window(base, generated, i, window_size)
            value = decision_value(window, rule)
            if isinstance(mode, Threshold):
                bit = threshold_bit(value, mode.tie_maps_to_one)
            else:
                bit = bernoulli_bit(_need(rng), value)
        generated.append(bit)
        if trace is not None:
            trace.append(Step(i, window, from_base, value, bit))
    return BitSequence(tuple(generated))


def payoff(seq: BitSequence | Iterable[int]) -> Fraction:
    """Fraction of states equal to 1."""
    states = tuple(seq)
    if not states:
        raise InvalidInputError("payoff of an empty sequence")
    return Fraction(sum(states), len(states))
