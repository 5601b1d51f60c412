"""
Typed view of the (validated) settings: one object per stage that the computational modules take.
"""

from typing import List

from metabbo.de_core import DeConfig
from metabbo.errors import InvalidArgumentError
from metabbo.networks import NetworkConfig
from metabbo.problems import OOD_MODES, ProblemSpec, canonical_name
from metabbo.rl_agent import AgentConfig
from metabbo.surrogate import SlsConfig

EVALUATORS = ("surrogate", "true_function")
BASELINES = ("random_search", "static_de")


class PlsConfig:
    """
    Settings of policy learning.  With evaluator "true_function" the policy learns on the real problems.
    """

    def __init__(
        self,
        max_learning_steps: int = 1500000,
        evaluator: str = "surrogate",
        checkpoint_period: int = 100000,
        log_period: int = 1000,
    ) -> None:
        if evaluator not in EVALUATORS:
            raise InvalidArgumentError("unknown evaluator '{}'".format(evaluator))
        if max_learning_steps < 0:
            raise InvalidArgumentError("maximum learning steps must not be negative")
        self.max_learning_steps = max_learning_steps
        self.evaluator = evaluator
        self.checkpoint_period = max(1, checkpoint_period)
        self.log_period = max(1, log_period)


class EvaluationConfig:
    def __init__(self, runs: int = 51, ood: str = "none", baselines: List[str] = None) -> None:
        if ood != "none" and ood not in OOD_MODES:
            raise InvalidArgumentError("unknown out-of-distribution mode '{}'".format(ood))
        baselines = list(BASELINES) if baselines is None else list(baselines)
        unknown = [name for name in baselines if name not in BASELINES]
        if unknown:
            raise InvalidArgumentError("unknown baseline(s): {}".format(", ".join(unknown)))
        self.runs = runs
        self.ood = ood
        self.baselines = baselines


class RunConfig:
    """
    All settings of a run.

    >>> import metabbo.config
    >>> config = RunConfig(metabbo.config.load_settings(preset="desk"), preset="desk")
    >>> config.dim, config.de.population_size, config.network.kan_hidden
    (2, 20, [5])
    >>> len(config.train_specs()), config.train_specs()[0].label
    (16, 'sphere-2d')
    """

    def __init__(self, settings: dict, preset: str = "full") -> None:
        self.settings = settings
        self.preset = preset

        run = settings["run"]
        self.seed = run["seed"]
        self.output_dir = run["output_dir"]
        self.workers = run["workers"]

        problems = settings["problems"]
        self.dim = problems["dim"]
        self.lower = float(problems["lower"])
        self.upper = float(problems["upper"])
        if not self.lower < self.upper:
            raise InvalidArgumentError("invalid problem bounds [{}, {}]".format(self.lower, self.upper))
        self.train_functions = [canonical_name(name) for name in problems["train"]]
        self.test_functions = [canonical_name(name) for name in problems["test"]]

        sampling = settings["sampling"]
        self.n_samples = sampling["n_samples"]
        self.holdout_fraction = sampling["holdout_fraction"]

        networks = settings["networks"]
        self.network = NetworkConfig(
            networks["arch"],
            kan_hidden=networks["kan"]["hidden"],
            grid_size=networks["kan"]["grid_size"],
            spline_order=networks["kan"]["spline_order"],
            coeff_std=networks["kan"]["coeff_std"],
            mlp_hidden=networks["mlp"]["hidden"],
            rbf_centers=networks["rbf"]["centers"],
        )

        surrogate = settings["surrogate"]
        self.sls = SlsConfig(
            batch_size=surrogate["batch_size"],
            mse_epochs=surrogate["mse_epochs"],
            roa_epochs=surrogate["roa_epochs"],
            learning_rate=surrogate["learning_rate"],
            mix_epochs=surrogate["mix_epochs"],
            loss=surrogate["loss"],
            optimizer=surrogate["optimizer"],
        )

        self.de = DeConfig(**settings["de"])
        self.agent = AgentConfig(**settings["agent"])
        self.pls = PlsConfig(**settings["pls"])
        self.evaluation = EvaluationConfig(**settings["evaluation"])

    def spec(self, name: str, dim: int = None) -> ProblemSpec:
        return ProblemSpec(name, self.dim if dim is None else dim, lower=self.lower, upper=self.upper)

    def train_specs(self) -> List[ProblemSpec]:
        return [self.spec(name) for name in self.train_functions]

    def test_specs(self) -> List[ProblemSpec]:
        return [self.spec(name) for name in self.test_functions]
