"""
The two learning stages end to end and the evaluation of learned policies.

Surrogate learning:  one network per training problem, trained on Latin hypercube samples of the true
    function.  These samples are the only true-function evaluations made while learning.
Policy learning:  DE runs on the surrogates (cycling through the problems in a fixed order) produce the
    experience for deep Q-learning of the policy that configures DE in every generation.
Evaluation:  every method (learned policies, DE with a fixed config, random search) is run repeatedly on
    the true test functions.  Results are ranked per problem and averaged over problems.

Output files land below the output directory:
    samples/<problem>.csv                       samples with normalization header
    surrogates/<problem>-<arch>-<loss>.ckpt.json
    surrogates/<problem>-<arch>-<loss>.loss.csv    loss curve (phase, epoch, mse, oc, lambda, order_acc)
    surrogates/metrics.csv                      one row per trained surrogate
    policy/<name>.ckpt.json, policy/<name>.log.csv (learning_step, loss, epsilon, mean_q)
    evaluation/runs.jsonl                       one run record per line
    evaluation/curves.csv                       (method, problem, run, fes, best_y)
    evaluation/summary.csv                      (problem, method, mean, std, rank)
    evaluation/ranks.csv                        (method, average_rank)
"""

import concurrent.futures
import logging
import os
from collections import OrderedDict
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata
from tqdm import tqdm

from metabbo.config import derive_seed
from metabbo.config.run import PlsConfig, RunConfig
from metabbo.de_core import STATIC_DE_ACTION, DeConfig, DifferentialEvolution, constant_policy, random_search
from metabbo.errors import (
    FailedSurrogatesError,
    InvalidArgumentError,
    MetaBBOSystemError,
    TrainingDivergenceError,
)
from metabbo.json_encoder import dumps_line
from metabbo.monitor import Monitor
from metabbo.networks import ARCHITECTURES, Network, NetworkConfig, build_network
from metabbo.networks.checkpoint import CHECKPOINT_SUFFIX
from metabbo.problems import EvalCounter, ProblemSpec, apply_ood
from metabbo.rl_agent import DqnAgent, ReplayBuffer, Transition, reward, write_training_log
from metabbo.sampling import SampleSet, build_dataset, dataset_filename
from metabbo.surrogate import (
    SlsConfig,
    SurrogateEvaluator,
    TrainedSurrogate,
    export_landscape,
    train_surrogate,
    write_landscape,
    write_loss_curve,
)
from metabbo.text import format_lines, format_scientific, join_with_quotes, write_csv
from metabbo.timer import Timer

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

__all__ = ["PlsConfig", "RunRecord", "run_sls", "run_pls", "evaluate_policy", "run_baseline", "run_ablations"]

SURROGATE_METRICS_HEADER = (
    "problem",
    "arch",
    "loss",
    "n_samples",
    "true_evaluations",
    "train_mse",
    "holdout_mse",
    "holdout_order_acc",
)
SUMMARY_HEADER = ("problem", "method", "mean", "std", "rank")
LANDSCAPE_FUNCTIONS = ("rosenbrock_original", "schwefel")
LANDSCAPE_SAMPLES = 10000
ABLATION_PARTS = ("architectures", "loss", "landscapes")


# --- Surrogate learning stage


def surrogate_filename(output_dir: str, spec: ProblemSpec, arch: str, loss: str) -> str:
    return os.path.join(output_dir, "surrogates", "{}-{}-{}{}".format(spec.label, arch, loss, CHECKPOINT_SUFFIX))


def sample_seed(root_seed: int, spec: ProblemSpec, n: int, repeat: int = 0) -> int:
    return derive_seed(root_seed, "samples", spec.label, n, repeat)


def obtain_dataset(
    spec: ProblemSpec, n: int, seed: int, output_dir: str, counter: Optional[EvalCounter] = None
) -> SampleSet:
    """
    Return the samples of the problem, reading them from the output directory when they were drawn before.
    """
    filename = dataset_filename(output_dir, spec)
    if os.path.exists(filename):
        dataset = SampleSet.load(filename)
        if dataset.problem == spec.to_dict() and len(dataset) == n and dataset.seed == seed:
            return dataset
        logger.warning("Samples in '%s' do not match the settings, drawing new samples", filename)
    with Monitor(spec.label, "sample", n=n, seed=seed):
        dataset = build_dataset(spec, n, seed, counter)
    os.makedirs(os.path.dirname(filename), exist_ok=True)
    dataset.save(filename)
    return dataset


def train_one_surrogate(
    spec: ProblemSpec,
    config: RunConfig,
    output_dir: str,
    network_config: Optional[NetworkConfig] = None,
    sls: Optional[SlsConfig] = None,
    n_samples: Optional[int] = None,
    repeat: int = 0,
    counter: Optional[EvalCounter] = None,
) -> TrainedSurrogate:
    """
    Sample the problem (unless samples exist), train a surrogate on all but the holdout samples and save it.
    """
    network_config = network_config or config.network
    sls = sls or config.sls
    n = n_samples or config.n_samples
    root = config.seed
    dataset = obtain_dataset(spec, n, sample_seed(root, spec, n, repeat), output_dir, counter)
    train, holdout = dataset.split(config.holdout_fraction, seed=derive_seed(root, "holdout", spec.label, repeat))
    rng = np.random.default_rng(derive_seed(root, "init", spec.label, network_config.arch, repeat))
    net = build_network(network_config, spec.dim, rng, xs=train.normalize_x(train.xs))
    filename = surrogate_filename(output_dir, spec, network_config.arch, sls.loss)
    with Monitor(spec.label, "train_surrogate", arch=network_config.arch, loss=sls.loss) as monitor:
        surrogate = train_surrogate(train, net, sls, derive_seed(root, "sls", spec.label, repeat), holdout=holdout)
        monitor.add_extra("holdout_order_acc", surrogate.metadata["holdout_order_acc"])
    surrogate.metadata.update({"n_samples": n, "true_evaluations": n, "repeat": repeat})
    write_loss_curve(filename.replace(CHECKPOINT_SUFFIX, ".loss.csv"), surrogate.metadata.pop("loss_curve"))
    surrogate.save(filename)
    logger.info(
        "Surrogate of '%s' (%s, %s loss) has holdout order accuracy %.4f",
        spec.label,
        network_config.arch,
        sls.loss,
        surrogate.metadata["holdout_order_acc"],
    )
    return surrogate


def _metrics_row(surrogate: TrainedSurrogate) -> list:
    return [surrogate.label] + [surrogate.metadata.get(name) for name in SURROGATE_METRICS_HEADER[1:]]


def run_sls(
    specs: Sequence[ProblemSpec], config: RunConfig, output_dir: str, counter: Optional[EvalCounter] = None
) -> List[TrainedSurrogate]:
    """
    Train one surrogate per problem.  A diverging problem does not stop the others; failures are reported
    (with an exception) after all problems were tried.
    """
    trained = []
    failed = []
    timer = Timer()
    for spec in specs:
        try:
            trained.append(train_one_surrogate(spec, config, output_dir, counter=counter))
        except TrainingDivergenceError as exc:
            logger.error("Surrogate of '%s' failed: %s", spec.label, exc)
            failed.append(spec.label)
    rows = [_metrics_row(surrogate) for surrogate in trained]
    write_csv(os.path.join(output_dir, "surrogates", "metrics.csv"), SURROGATE_METRICS_HEADER, rows)
    logger.info("Trained %d surrogate(s) (%s)", len(trained), timer)
    if failed:
        raise FailedSurrogatesError(failed, len(trained))
    return trained


# --- Policy learning stage


def policy_filename(output_dir: str, name: str = "policy") -> str:
    return os.path.join(output_dir, "policy", name + CHECKPOINT_SUFFIX)


def training_evaluators(
    config: RunConfig, output_dir: str, counter: EvalCounter, sls: Optional[SlsConfig] = None
) -> list:
    """
    Return what DE runs evaluate during policy learning: the saved surrogates or the true problems.
    """
    specs = config.train_specs()
    if config.pls.evaluator == "true_function":
        return [spec.instantiate(counter) for spec in specs]
    loss = (sls or config.sls).loss
    evaluators = []
    for spec in specs:
        filename = surrogate_filename(output_dir, spec, config.network.arch, loss)
        if not os.path.exists(filename):
            raise InvalidArgumentError(
                "missing surrogate '{}' (train surrogates first or use the true functions)".format(filename)
            )
        surrogate = TrainedSurrogate.load(filename)
        if surrogate.dim != spec.dim:
            raise InvalidArgumentError(
                "surrogate '{}' has dimension {:d}, expected {:d}".format(filename, surrogate.dim, spec.dim)
            )
        evaluators.append(SurrogateEvaluator(surrogate))
    return evaluators


def run_pls(
    evaluators: Sequence,
    agent: DqnAgent,
    de_config: DeConfig,
    pls: PlsConfig,
    seed: int,
    output_dir: Optional[str] = None,
    name: str = "policy",
    true_counter: Optional[EvalCounter] = None,
) -> Tuple[DqnAgent, List[tuple]]:
    """
    Learn the policy until the agent has taken pls.max_learning_steps learning steps.

    Episodes are full DE runs; problems take turns in the given order.  Every generation adds one
    transition to the replay buffer and (after the warm-up) takes one learning step.  Learning stops
    right after the last learning step, which ends the current episode early.

    Returns the agent and the training log rows (learning_step, loss, epsilon, mean_q).
    """
    if not evaluators:
        raise InvalidArgumentError("no problems to learn on")
    true_counter = true_counter or EvalCounter()
    consumed_before = true_counter.consumed
    rng = np.random.default_rng(derive_seed(seed, "pls", agent.learning_steps))
    schedule = agent.config.epsilon_schedule(pls.max_learning_steps)
    buffer = ReplayBuffer(agent.config.replay_capacity)
    log = []  # type: List[tuple]
    checkpoint = policy_filename(output_dir, name) if output_dir else None
    timer = Timer()
    if agent.learning_steps < pls.max_learning_steps:
        logger.info(
            "Learning policy on %d problem(s) from step %d to %d",
            len(evaluators),
            agent.learning_steps,
            pls.max_learning_steps,
        )
    try:
        while agent.learning_steps < pls.max_learning_steps:
            evaluator = evaluators[agent.episodes % len(evaluators)]
            engine = DifferentialEvolution(evaluator, de_config, seed=derive_seed(seed, "episode", agent.episodes))
            state = engine.start()
            while not engine.done and agent.learning_steps < pls.max_learning_steps:
                agent.epsilon = schedule(agent.learning_steps)
                action = agent.select_action(state, rng, training=True)
                previous_best = engine.best_y
                next_state = engine.advance(action)
                gain = reward(previous_best, engine.best_y, agent.config.reward_literal)
                buffer.append(Transition(state, action, gain, next_state, engine.done))
                state = next_state
                if len(buffer) < agent.config.warmup:
                    continue
                loss = agent.learn(buffer, rng)
                step = agent.learning_steps
                if step % pls.log_period == 0:
                    log.append((step, loss, agent.epsilon, agent.last_mean_q))
                if checkpoint and step % pls.checkpoint_period == 0:
                    agent.save(checkpoint, {"evaluator": pls.evaluator})
                    write_training_log(checkpoint.replace(CHECKPOINT_SUFFIX, ".log.csv"), log)
            agent.episodes += 1
            if agent.episodes % len(evaluators) == 0:
                logger.debug(
                    "Finished %d episodes at learning step %d (%s)", agent.episodes, agent.learning_steps, timer
                )
    except TrainingDivergenceError:
        if checkpoint:
            agent.save(checkpoint.replace(CHECKPOINT_SUFFIX, "-diverged" + CHECKPOINT_SUFFIX))
        raise

    true_evaluations = true_counter.consumed - consumed_before
    if pls.evaluator == "surrogate" and true_evaluations != 0:
        raise MetaBBOSystemError(
            "policy learning on surrogates evaluated true functions {:d} times".format(true_evaluations)
        )
    if checkpoint:
        agent.save(checkpoint, {"evaluator": pls.evaluator, "true_evaluations": true_evaluations})
        write_training_log(checkpoint.replace(CHECKPOINT_SUFFIX, ".log.csv"), log)
    logger.info(
        "Policy learning stopped after %d learning steps in %d episodes, %d true evaluations (%s)",
        agent.learning_steps,
        agent.episodes,
        true_evaluations,
        timer,
    )
    return agent, log


def learn_policy(
    config: RunConfig,
    output_dir: str,
    name: str = "policy",
    sls: Optional[SlsConfig] = None,
    resume_from: Optional[str] = None,
    seed_key: Optional[str] = None,
) -> DqnAgent:
    """
    Learn (or continue learning) the policy called name and save it into the output directory.

    The initial weights and the rollouts are seeded from seed_key, which defaults to the name.
    """
    seed_key = seed_key or name
    counter = EvalCounter()
    evaluators = training_evaluators(config, output_dir, counter, sls)
    if resume_from:
        agent = DqnAgent.load(resume_from, config.agent)
        logger.info("Resuming from '%s' at learning step %d", resume_from, agent.learning_steps)
    else:
        agent = DqnAgent(config.agent, seed=derive_seed(config.seed, "agent", seed_key))
    with Monitor(name, "train_policy", evaluator=config.pls.evaluator) as monitor:
        agent, _ = run_pls(
            evaluators,
            agent,
            config.de,
            config.pls,
            derive_seed(config.seed, "pls", seed_key),
            output_dir=output_dir,
            name=name,
            true_counter=counter,
        )
        monitor.add_extra("learning_steps", agent.learning_steps)
        monitor.add_extra("true_evaluations", counter.consumed)
    return agent


# --- Evaluation


class GreedyPolicy:
    """Pick the action with the largest Q-value of the network (lowest index among ties)."""

    def __init__(self, network: Network) -> None:
        self.network = network

    def __call__(self, state: np.ndarray) -> int:
        return int(np.argmax(self.network.predict(state)))


class Method:
    """
    A named way of solving problems: "policy" (DE configured by a learned policy), "static_de" (DE with
    rand1 and F=0.5 throughout) or "random_search".
    """

    KINDS = ("policy", "static_de", "random_search")

    def __init__(self, name: str, kind: str, network: Optional[Network] = None) -> None:
        if kind not in self.KINDS:
            raise InvalidArgumentError("unknown method kind '{}'".format(kind))
        if kind == "policy" and network is None:
            raise InvalidArgumentError("method '{}' needs a policy network".format(name))
        self.name = name
        self.kind = kind
        self.network = network

    @classmethod
    def from_agent(cls, name: str, agent: DqnAgent) -> "Method":
        return cls(name, "policy", agent.prediction.copy())

    @classmethod
    def baseline(cls, kind: str) -> "Method":
        return cls(kind, kind)


class RunRecord:
    """
    Result of one run of one method on one problem.  The trace holds (fes, best_y) after every generation.

    Wall time is kept in memory (and in the events file) but not in the run log so that run logs of
    repeated runs are identical.
    """

    def __init__(
        self,
        method: str,
        problem: str,
        run: int,
        seed: int,
        trace: List[Tuple[int, float]],
        fes: int,
        wall_time: float = 0.0,
        actions: Optional[List[int]] = None,
    ) -> None:
        self.method = method
        self.problem = problem
        self.run = run
        self.seed = seed
        self.trace = trace
        self.fes = fes
        self.wall_time = wall_time
        self.actions = actions

    @property
    def final_best_y(self) -> float:
        return self.trace[-1][1]

    def to_dict(self) -> dict:
        record = OrderedDict(
            [
                ("method", self.method),
                ("problem", self.problem),
                ("run", self.run),
                ("seed", self.seed),
                ("final_best_y", self.final_best_y),
                ("fes", self.fes),
                ("trace", [list(point) for point in self.trace]),
            ]
        )
        if self.actions is not None:
            record["actions"] = self.actions
        return record


class EvaluationTask(NamedTuple):
    method: Method
    spec: dict
    run: int
    seed: int
    de_config: DeConfig


def run_task(task: EvaluationTask) -> RunRecord:
    """
    Run the method once on the true function, with the evaluation budget enforced.
    """
    spec = ProblemSpec.from_dict(task.spec)
    max_fes = task.de_config.max_fes
    counter = EvalCounter(budget=max_fes, enforce=True)
    problem = spec.instantiate(counter)
    actions = None
    with Timer() as timer:
        if task.method.kind == "random_search":
            trace = random_search(problem, max_fes, task.seed, batch_size=task.de_config.population_size)
        else:
            policy = constant_policy(STATIC_DE_ACTION)
            if task.method.kind == "policy":
                policy = GreedyPolicy(task.method.network)  # type: ignore
            engine = DifferentialEvolution(problem, task.de_config, task.seed)
            records = engine.run(policy)
            trace = [(record.fes, record.best_y) for record in records]
            actions = [record.action for record in records[1:]]
    return RunRecord(task.method.name, spec.label, task.run, task.seed, trace, counter.consumed, timer.elapsed, actions)


def run_baseline(method: str, spec: ProblemSpec, de_config: DeConfig, seed: int, run: int = 0) -> RunRecord:
    """
    Run random search or DE with a fixed config (rand1, F=0.5) once, with the same budget as the policies.
    """
    return run_task(EvaluationTask(Method.baseline(method), spec.to_dict(), run, seed, de_config))


def evaluation_specs(config: RunConfig, ood: Optional[str] = None) -> List[ProblemSpec]:
    mode = config.evaluation.ood if ood is None else ood
    specs = config.test_specs()
    if mode == "none":
        return specs
    return [apply_ood(spec, mode, derive_seed(config.seed, "ood", mode, spec.label)) for spec in specs]


class EvaluationResult:
    def __init__(self, records: List[RunRecord], summary: List[list], average_ranks: "OrderedDict[str, float]"):
        self.records = records
        self.summary = summary
        self.average_ranks = average_ranks


def summarize(records: List[RunRecord], methods: Sequence[str], problems: Sequence[str]) -> EvaluationResult:
    """
    Return mean and std of the final best values per (problem, method), ranks of methods per problem (by
    mean, ties share the average rank) and the average rank per method over problems.
    """
    finals = OrderedDict()  # type: Dict[Tuple[str, str], List[float]]
    for record in records:
        finals.setdefault((record.problem, record.method), []).append(record.final_best_y)
    summary = []
    ranks_by_method = OrderedDict((method, []) for method in methods)  # type: OrderedDict
    for problem in problems:
        means = [float(np.mean(finals[(problem, method)])) for method in methods]
        stds = [float(np.std(finals[(problem, method)])) for method in methods]
        ranks = rankdata(means, method="average")
        for method, mean, std, rank in zip(methods, means, stds, ranks):
            summary.append([problem, method, mean, std, float(rank)])
            ranks_by_method[method].append(float(rank))
    average_ranks = OrderedDict((method, float(np.mean(ranks))) for method, ranks in ranks_by_method.items())
    return EvaluationResult(records, summary, average_ranks)


def evaluate_policy(
    methods: Sequence[Method],
    specs: Sequence[ProblemSpec],
    runs: int,
    de_config: DeConfig,
    root_seed: int,
    output_dir: Optional[str] = None,
    workers: int = 1,
) -> EvaluationResult:
    """
    Run every method `runs` times on every problem (true functions only) and rank the methods.

    Run i of every method on a problem uses the same seed.  Results come back in the order of problems,
    methods, runs no matter how many workers ran them.
    """
    names = [method.name for method in methods]
    if len(set(names)) != len(names):
        raise InvalidArgumentError("method names must be unique: {}".format(join_with_quotes(names)))
    tasks = [
        EvaluationTask(method, spec.to_dict(), run, derive_seed(root_seed, "evaluation", spec.label, run), de_config)
        for spec in specs
        for method in methods
        for run in range(runs)
    ]
    logger.info(
        "Evaluating %d method(s) on %d problem(s) with %d run(s) each using %d worker(s)",
        len(methods),
        len(specs),
        runs,
        workers,
    )
    with Monitor("evaluation", "evaluate", methods=names, problems=[spec.label for spec in specs], runs=runs):
        if workers > 1:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
                chunksize = max(1, len(tasks) // (4 * workers))
                records = list(tqdm(executor.map(run_task, tasks, chunksize=chunksize), total=len(tasks), disable=None))
        else:
            records = [run_task(task) for task in tqdm(tasks, disable=None)]
    result = summarize(records, names, [spec.label for spec in specs])
    if output_dir:
        write_evaluation(result, os.path.join(output_dir, "evaluation"))
    return result


def write_evaluation(result: EvaluationResult, output_dir: str) -> None:
    os.makedirs(output_dir, exist_ok=True)
    with open(os.path.join(output_dir, "runs.jsonl"), "w") as f:
        for record in result.records:
            f.write(dumps_line(record.to_dict()))
            f.write("\n")
    curve_rows = [
        (record.method, record.problem, record.run, fes, best_y)
        for record in result.records
        for fes, best_y in record.trace
    ]
    write_csv(os.path.join(output_dir, "curves.csv"), ("method", "problem", "run", "fes", "best_y"), curve_rows)
    write_csv(os.path.join(output_dir, "summary.csv"), SUMMARY_HEADER, result.summary)
    write_csv(os.path.join(output_dir, "ranks.csv"), ("method", "average_rank"), list(result.average_ranks.items()))
    logger.info("Wrote %d run record(s) to '%s'", len(result.records), output_dir)


def format_evaluation(result: EvaluationResult) -> str:
    rows = [
        [problem, method, format_scientific(mean), format_scientific(std), "{:g}".format(rank)]
        for problem, method, mean, std, rank in result.summary
    ]
    rank_rows = [[method, "{:.3f}".format(rank)] for method, rank in result.average_ranks.items()]
    return format_lines(rows, SUMMARY_HEADER) + "\n\n" + format_lines(rank_rows, ("method", "average_rank"))


def load_methods(policies: Dict[str, str], baselines: Sequence[str], config: RunConfig) -> List[Method]:
    """
    Return methods for the policy checkpoints (by name) followed by the baselines.
    """
    methods = [Method.from_agent(name, DqnAgent.load(filename, config.agent)) for name, filename in policies.items()]
    methods.extend(Method.baseline(kind) for kind in baselines)
    return methods


# --- Ablations


def run_architecture_ablation(
    config: RunConfig, output_dir: str, specs: Sequence[ProblemSpec], repeats: int = 1
) -> List[list]:
    """
    Train every architecture on every problem (same samples) and rank the architectures per problem by
    holdout MSE (lowest first) and holdout order accuracy (highest first).  One row per (problem, arch).
    """
    rows = []
    for spec in specs:
        mse = OrderedDict((arch, []) for arch in ARCHITECTURES)  # type: OrderedDict
        accuracy = OrderedDict((arch, []) for arch in ARCHITECTURES)  # type: OrderedDict
        for repeat in range(repeats):
            repeat_dir = os.path.join(output_dir, "repeat-{:d}".format(repeat))
            for arch in ARCHITECTURES:
                surrogate = train_one_surrogate(
                    spec, config, repeat_dir, network_config=config.network.with_arch(arch), repeat=repeat
                )
                mse[arch].append(surrogate.metadata["holdout_mse"])
                accuracy[arch].append(surrogate.metadata["holdout_order_acc"])
        mean_mse = [float(np.mean(values)) for values in mse.values()]
        mean_accuracy = [float(np.mean(values)) for values in accuracy.values()]
        mse_ranks = rankdata(mean_mse, method="average")
        accuracy_ranks = rankdata([-value for value in mean_accuracy], method="average")
        for i, arch in enumerate(ARCHITECTURES):
            rows.append(
                [spec.label, arch, mean_mse[i], mean_accuracy[i], float(mse_ranks[i]), float(accuracy_ranks[i])]
            )
    write_csv(
        os.path.join(output_dir, "architectures.csv"),
        ("problem", "arch", "holdout_mse", "holdout_order_acc", "mse_rank", "order_acc_rank"),
        rows,
    )
    return rows


def learn_loss_policies(config: RunConfig, output_dir: str) -> "OrderedDict[str, DqnAgent]":
    """
    Train surrogates with the ROA loss and with MSE only and learn one policy on each set.

    Both branches use the same samples, initial weights and seeds, so they differ only in the loss.
    """
    agents = OrderedDict()  # type: OrderedDict[str, DqnAgent]
    for sls in (config.sls.with_loss("roa"), config.sls.with_loss("mse")):
        for spec in config.train_specs():
            train_one_surrogate(spec, config, output_dir, sls=sls)
        name = "policy-" + sls.loss
        agents[name] = learn_policy(config, output_dir, name=name, sls=sls, seed_key="policy")
    return agents


def run_loss_ablation(config: RunConfig, output_dir: str) -> EvaluationResult:
    """
    Learn policies on ROA and MSE-only surrogates and evaluate both together with the baselines.
    """
    agents = learn_loss_policies(config, output_dir)
    policies = OrderedDict((name, policy_filename(output_dir, name)) for name in agents)
    methods = load_methods(policies, config.evaluation.baselines, config)
    return evaluate_policy(
        methods,
        evaluation_specs(config),
        config.evaluation.runs,
        config.de,
        config.seed,
        output_dir=output_dir,
        workers=config.workers,
    )


def export_landscapes(config: RunConfig, output_dir: str, resolution: int = 101) -> List[list]:
    """
    Train ROA and MSE-only surrogates of two-dimensional problems and write grids of true and predicted values.
    """
    rows = []
    for name in LANDSCAPE_FUNCTIONS:
        spec = config.spec(name, dim=2)
        problem = spec.instantiate()
        for sls in (config.sls.with_loss("roa"), config.sls.with_loss("mse")):
            surrogate = train_one_surrogate(spec, config, output_dir, sls=sls, n_samples=LANDSCAPE_SAMPLES)
            grid = export_landscape(problem, surrogate, resolution)
            write_landscape(os.path.join(output_dir, "{}-{}.grid.csv".format(spec.label, sls.loss)), grid)
            rows.append([spec.label, sls.loss, surrogate.metadata["holdout_order_acc"]])
    write_csv(os.path.join(output_dir, "landscapes.csv"), ("problem", "loss", "holdout_order_acc"), rows)
    return rows


def run_ablations(
    config: RunConfig, output_dir: str, parts: Sequence[str] = ABLATION_PARTS, repeats: int = 1
) -> Dict[str, object]:
    unknown = [part for part in parts if part not in ABLATION_PARTS]
    if unknown:
        raise InvalidArgumentError("unknown ablation(s): {}".format(join_with_quotes(unknown)))
    report = OrderedDict()  # type: Dict[str, object]
    if "architectures" in parts:
        with Monitor("architectures", "ablate"):
            report["architectures"] = run_architecture_ablation(
                config, os.path.join(output_dir, "architectures"), config.train_specs(), repeats
            )
    if "landscapes" in parts:
        with Monitor("landscapes", "ablate"):
            report["landscapes"] = export_landscapes(config, os.path.join(output_dir, "landscapes"))
    if "loss" in parts:
        with Monitor("loss", "ablate"):
            report["loss"] = run_loss_ablation(config, os.path.join(output_dir, "loss"))
    return report
