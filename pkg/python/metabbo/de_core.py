"""
Differential evolution whose mutation operator and scale factor are chosen anew in every generation.

An action is an integer in [0, 15) that selects one of five mutation operators and one of three scale
factors: action = 3 * operator_index + strength_index.  The engine is driven by a policy, a callable
that maps the current optimization state (see `metabbo.features`) to an action.

Points are evaluated in batches by an "evaluator", which is anything that maps a matrix of points (one
per row) to a vector of values and has `bounds`: a `Problem` or a `SurrogateEvaluator`.
"""

import logging
import math
from typing import Callable, List, NamedTuple, Optional, Tuple

import numpy as np

from metabbo.errors import InvalidArgumentError, PopulationTooSmallError
from metabbo.features import Progress, extract_state

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

MUTATION_OPERATORS = ("rand1", "best1", "current_to_rand", "current_to_pbest", "current_to_best")
MUTATION_STRENGTHS = (0.1, 0.5, 0.9)
N_ACTIONS = len(MUTATION_OPERATORS) * len(MUTATION_STRENGTHS)

MIN_POPULATION_SIZE = 5

Policy = Callable[[np.ndarray], int]


class MutationConfig:
    """
    >>> MutationConfig("best1", 0.5)
    MutationConfig('best1', 0.5)
    >>> MutationConfig("rand2", 0.5)
    Traceback (most recent call last):
    metabbo.errors.InvalidArgumentError: unknown mutation operator 'rand2'
    """

    def __init__(self, operator: str, strength: float) -> None:
        if operator not in MUTATION_OPERATORS:
            raise InvalidArgumentError("unknown mutation operator '{}'".format(operator))
        self.operator = operator
        self.strength = float(strength)

    def __eq__(self, other):
        if not isinstance(other, MutationConfig):
            return False
        return self.operator == other.operator and self.strength == other.strength

    def __hash__(self):
        return hash((self.operator, self.strength))

    def __repr__(self):
        return "{}({!r}, {!r})".format(self.__class__.__name__, self.operator, self.strength)


def decode_action(action: int) -> MutationConfig:
    """
    Return the mutation config of the action.

    >>> decode_action(0), decode_action(14)
    (MutationConfig('rand1', 0.1), MutationConfig('current_to_best', 0.9))
    >>> decode_action(15)
    Traceback (most recent call last):
    metabbo.errors.InvalidArgumentError: action must be in [0, 15), got 15
    """
    if isinstance(action, bool) or not 0 <= action < N_ACTIONS or int(action) != action:
        raise InvalidArgumentError("action must be in [0, {:d}), got {}".format(N_ACTIONS, action))
    operator_index, strength_index = divmod(int(action), len(MUTATION_STRENGTHS))
    return MutationConfig(MUTATION_OPERATORS[operator_index], MUTATION_STRENGTHS[strength_index])


def encode_action(config: MutationConfig) -> int:
    """
    >>> encode_action(MutationConfig("rand1", 0.5))
    1
    """
    if config.strength not in MUTATION_STRENGTHS:
        raise InvalidArgumentError("scale factor {} is not one of {}".format(config.strength, MUTATION_STRENGTHS))
    return MUTATION_OPERATORS.index(config.operator) * len(MUTATION_STRENGTHS) + MUTATION_STRENGTHS.index(
        config.strength
    )


STATIC_DE_ACTION = encode_action(MutationConfig("rand1", 0.5))


class Population:
    """
    Members (one per row of xs) with their values and the best point found over the whole run.
    """

    def __init__(self, xs: np.ndarray, ys: np.ndarray, best_x: np.ndarray, best_y: float) -> None:
        self.xs = xs
        self.ys = ys
        self.best_x = best_x
        self.best_y = float(best_y)

    @classmethod
    def from_evaluated(cls, xs: np.ndarray, ys: np.ndarray) -> "Population":
        best_idx = int(np.argmin(ys))
        return cls(xs, ys, xs[best_idx].copy(), ys[best_idx])

    @property
    def size(self) -> int:
        return self.xs.shape[0]

    @property
    def dim(self) -> int:
        return self.xs.shape[1]

    @property
    def best_idx(self) -> int:
        """Index of the best current member (lowest index among ties)."""
        return int(np.argmin(self.ys))

    @property
    def mean_y(self) -> float:
        return float(np.mean(self.ys))


def _evaluate(evaluator, xs: np.ndarray) -> np.ndarray:
    return np.asarray(evaluator(xs), dtype=float).reshape(xs.shape[0])


def draw_distinct_indices(rng: np.random.Generator, size: int, count: int) -> np.ndarray:
    """
    Return a (size, count) matrix whose row i holds `count` distinct indices from [0, size), none equal to i.

    >>> r = draw_distinct_indices(np.random.default_rng(1), 5, 3)
    >>> bool(all(len(set(row)) == 3 and i not in row for i, row in enumerate(r.tolist())))
    True
    """
    keys = rng.random((size, size))
    keys[np.arange(size), np.arange(size)] = np.inf
    return np.argsort(keys, axis=1, kind="stable")[:, :count]


def mutate(
    population: Population, config: MutationConfig, rng: np.random.Generator, pbest_fraction: float = 0.1
) -> np.ndarray:
    """
    Return the donor vectors (one per member) of the chosen mutation operator.

    The random indices of every row are distinct and differ from the row's own index.  For
    current_to_pbest, the p-best member is drawn uniformly from the ceil(p * NP) best members.

    >>> pop = Population.from_evaluated(np.full((5, 2), 1.5), np.zeros(5))
    >>> mutate(pop, MutationConfig("current_to_rand", 0.9), np.random.default_rng(0)).tolist()[0]
    [1.5, 1.5]
    """
    size = population.size
    if size < MIN_POPULATION_SIZE:
        raise PopulationTooSmallError(
            "population of {:d} is too small, need at least {:d} members".format(size, MIN_POPULATION_SIZE)
        )
    xs = population.xs
    f = config.strength
    r = draw_distinct_indices(rng, size, 3)
    x1, x2, x3 = xs[r[:, 0]], xs[r[:, 1]], xs[r[:, 2]]
    if config.operator == "rand1":
        return x1 + f * (x2 - x3)
    if config.operator == "best1":
        return xs[population.best_idx] + f * (x1 - x2)
    if config.operator == "current_to_rand":
        return xs + f * (x1 - xs) + f * (x2 - x3)
    if config.operator == "current_to_pbest":
        n_top = max(1, int(math.ceil(pbest_fraction * size)))
        top = np.argsort(population.ys, kind="stable")[:n_top]
        pbest = top[rng.integers(n_top, size=size)]
        return xs + f * (xs[pbest] - xs) + f * (x1 - x2)
    if config.operator == "current_to_best":
        return xs + f * (xs[population.best_idx] - xs) + f * (x1 - x2)
    raise InvalidArgumentError("unknown mutation operator '{}'".format(config.operator))


def crossover_select(
    population: Population,
    donors: np.ndarray,
    evaluator,
    rng: np.random.Generator,
    crossover_rate: float = 0.7,
) -> Population:
    """
    Return the next population after binomial crossover, clamping to the bounds and greedy selection.

    A trial replaces its parent when it is at least as good.
    """
    if donors.shape != population.xs.shape:
        raise InvalidArgumentError(
            "donors have shape {}, population has shape {}".format(donors.shape, population.xs.shape)
        )
    size, dim = donors.shape
    lower, upper = evaluator.bounds
    mask = rng.random((size, dim)) < crossover_rate
    mask[np.arange(size), rng.integers(dim, size=size)] = True
    trials = np.clip(np.where(mask, donors, population.xs), lower, upper)
    trial_ys = _evaluate(evaluator, trials)
    accept = trial_ys <= population.ys
    xs = np.where(accept[:, np.newaxis], trials, population.xs)
    ys = np.where(accept, trial_ys, population.ys)
    best_trial = int(np.argmin(trial_ys))
    if trial_ys[best_trial] < population.best_y:
        return Population(xs, ys, trials[best_trial].copy(), trial_ys[best_trial])
    return Population(xs, ys, population.best_x, population.best_y)


class DeConfig:
    """
    >>> DeConfig(population_size=4)
    Traceback (most recent call last):
    metabbo.errors.PopulationTooSmallError: population of 4 is too small, need at least 5 members
    """

    def __init__(
        self,
        population_size: int = 100,
        crossover_rate: float = 0.7,
        pbest_fraction: float = 0.1,
        max_fes: int = 20000,
    ) -> None:
        if population_size < MIN_POPULATION_SIZE:
            raise PopulationTooSmallError(
                "population of {:d} is too small, need at least {:d} members".format(
                    population_size, MIN_POPULATION_SIZE
                )
            )
        if not 0.0 <= crossover_rate <= 1.0:
            raise InvalidArgumentError("crossover rate must be in [0, 1], got {}".format(crossover_rate))
        if not 0.0 < pbest_fraction <= 1.0:
            raise InvalidArgumentError("p-best fraction must be in (0, 1], got {}".format(pbest_fraction))
        if max_fes < population_size:
            raise InvalidArgumentError(
                "budget of {:d} evaluations does not cover a population of {:d}".format(max_fes, population_size)
            )
        self.population_size = population_size
        self.crossover_rate = crossover_rate
        self.pbest_fraction = pbest_fraction
        self.max_fes = max_fes


class TraceRecord(NamedTuple):
    generation: int
    fes: int
    action: Optional[int]
    best_y: float
    mean_y: float


TRACE_HEADER = TraceRecord._fields


class DifferentialEvolution:
    """
    One optimization run: `start()` evaluates the initial population, each `advance(action)` one generation.

    Both return the optimization state after the generation.  The run is over when the remaining budget
    does not cover another generation, so a run takes max_fes // NP generations, initialization included.

    >>> from metabbo.problems import ProblemSpec
    >>> engine = DifferentialEvolution(ProblemSpec("sphere", 2).instantiate(), DeConfig(10, max_fes=100), seed=3)
    >>> trace = engine.run(constant_policy(STATIC_DE_ACTION))
    >>> len(trace), engine.fes, trace[-1].best_y <= trace[0].best_y
    (10, 100, True)
    """

    def __init__(self, evaluator, config: DeConfig, seed, max_fes: Optional[int] = None) -> None:
        self.evaluator = evaluator
        self.config = config
        self.max_fes = config.max_fes if max_fes is None else max_fes
        if self.max_fes < config.population_size:
            raise InvalidArgumentError(
                "budget of {:d} evaluations does not cover a population of {:d}".format(
                    self.max_fes, config.population_size
                )
            )
        self.rng = np.random.default_rng(seed)
        self.population = None  # type: Optional[Population]
        self.fes = 0
        self.generation = 0
        self.trace = []  # type: List[TraceRecord]
        self._initial_best = np.inf
        self._previous_best = np.inf
        self._stagnation = 0

    @property
    def total_generations(self) -> int:
        return self.max_fes // self.config.population_size

    @property
    def done(self) -> bool:
        return self.fes + self.config.population_size > self.max_fes

    @property
    def best_y(self) -> float:
        return np.inf if self.population is None else self.population.best_y

    def _current(self) -> Population:
        if self.population is None:
            raise InvalidArgumentError("run has not been started")
        return self.population

    def progress(self) -> Progress:
        population = self._current()
        return Progress(
            fes=self.fes,
            max_fes=self.max_fes,
            stagnation_gens=self._stagnation,
            total_generations=max(1, self.total_generations - 1),
            y_init=self._initial_best,
            y_prev=self._previous_best,
            y_now=population.best_y,
        )

    def state(self) -> np.ndarray:
        return extract_state(self._current(), self.progress(), self.evaluator.bounds)

    def start(self) -> np.ndarray:
        size = self.config.population_size
        lower, upper = self.evaluator.bounds
        dim = self.evaluator.dim
        xs = self.rng.uniform(lower, upper, size=(size, dim))
        self.population = Population.from_evaluated(xs, _evaluate(self.evaluator, xs))
        self.fes = size
        self.generation = 0
        self._initial_best = self._previous_best = self.population.best_y
        self._stagnation = 0
        self._record(None)
        return self.state()

    def advance(self, action: int) -> np.ndarray:
        population = self._current()
        if self.done:
            raise InvalidArgumentError("budget of {:d} evaluations is used up".format(self.max_fes))
        donors = mutate(population, decode_action(action), self.rng, self.config.pbest_fraction)
        following = crossover_select(population, donors, self.evaluator, self.rng, self.config.crossover_rate)
        self._previous_best = population.best_y
        self._stagnation = 0 if following.best_y < population.best_y else self._stagnation + 1
        self.population = following
        self.fes += self.config.population_size
        self.generation += 1
        self._record(action)
        return self.state()

    def _record(self, action: Optional[int]) -> None:
        population = self._current()
        self.trace.append(TraceRecord(self.generation, self.fes, action, population.best_y, population.mean_y))

    def run(self, policy: Policy) -> List[TraceRecord]:
        state = self.start()
        while not self.done:
            state = self.advance(policy(state))
        logger.debug(
            "Finished run with %d generations and %d evaluations, best value %g",
            self.generation + 1,
            self.fes,
            self.best_y,
        )
        return self.trace


def constant_policy(action: int) -> Policy:
    decode_action(action)

    def policy(state: np.ndarray) -> int:
        return action

    return policy


def random_search(evaluator, max_fes: int, seed, batch_size: int = 100) -> List[Tuple[int, float]]:
    """
    Evaluate uniform random points until the budget is used up; return (fes, best_y) after every batch.

    >>> from metabbo.problems import ProblemSpec
    >>> curve = random_search(ProblemSpec("sphere", 2).instantiate(), 250, seed=1)
    >>> [fes for fes, _ in curve]
    [100, 200, 250]
    """
    rng = np.random.default_rng(seed)
    lower, upper = evaluator.bounds
    best_y = np.inf
    fes = 0
    curve = []
    while fes < max_fes:
        n = min(batch_size, max_fes - fes)
        ys = _evaluate(evaluator, rng.uniform(lower, upper, size=(n, evaluator.dim)))
        best_y = min(best_y, float(np.min(ys)))
        fes += n
        curve.append((fes, best_y))
    return curve
