"""
Driver for the surrogate-trained optimizer configuration based on sub-commands.

This can be the entry point for a console script.  Some functions are broken out
so that they can be leveraged by utilities in addition to the top-level script.

The typical sequence of commands is:
    metabbo sample            (draw samples of the training problems)
    metabbo train-surrogate   (one surrogate per training problem)
    metabbo train-policy      (learn the policy on the surrogates)
    metabbo evaluate          (compare the policy against the baselines on the test problems)
"""

import argparse
import fnmatch
import logging
import os
import shlex
import sys
import traceback
from collections import OrderedDict
from contextlib import contextmanager
from typing import List, Optional

import metabbo.config
import metabbo.monitor
import metabbo.pipeline
import metabbo.selftest
from metabbo.config.run import RunConfig
from metabbo.errors import InvalidArgumentError, MetaBBODelayedExit, MetaBBOError, OutputExistsError
from metabbo.networks import ARCHITECTURES
from metabbo.problems import FUNCTION_NAMES, OOD_MODES, TRAIN_FUNCTIONS, EvalCounter, ProblemSpec
from metabbo.sampling import build_dataset, dataset_filename
from metabbo.text import format_lines, format_scientific, join_with_quotes
from metabbo.timer import Timer

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

OOD_ALIASES = {"30d": "plain_30d", "sr": "shift_rotate_10d"}
EVALUATOR_ALIASES = {"true": "true_function"}


def croak(error, exit_code):
    """
    Print first line of exception and then bail out with the exit code.

    When you have a large stack trace, it's easy to miss the trigger and
    so we call it out here again, on stderr.
    """
    full_tb = "\n".join(traceback.format_exception_only(type(error), error))
    header = full_tb.split("\n")[0]
    if sys.stderr.isatty():
        message = "Bailing out: \033[01;31m{}\033[0m".format(header)
    else:
        message = "Bailing out: {}".format(header)
    print(message, file=sys.stderr)
    sys.exit(exit_code)


@contextmanager
def execute_or_bail():
    """
    Either execute (the wrapped code) successfully or bail out with a helpful error message.

    Also measures execution time and does some basic error handling so that commands can be chained, UNIX-style.
    """
    timer = Timer()
    try:
        yield
    except InvalidArgumentError as exc:
        logger.exception("Command never got off the ground:")
        croak(exc, 1)
    except MetaBBOError as exc:
        if isinstance(exc, MetaBBODelayedExit):
            logger.critical("Something bad happened: %s", str(exc))
        else:
            logger.critical("Something bad happened:", exc_info=True)
        logger.info("Ran for %.2fs before this untimely end!", timer.elapsed)
        croak(exc, 2)
    except Exception as exc:
        logger.critical("Something terrible happened:", exc_info=True)
        logger.info("Ran for %.2fs before encountering disaster!", timer.elapsed)
        croak(exc, 3)
    except BaseException as exc:
        logger.critical("Something really terrible happened:", exc_info=True)
        logger.info("Ran for %.2fs before an exceptional termination!", timer.elapsed)
        croak(exc, 5)
    else:
        logger.info("Ran for %.2fs and finished successfully!", timer.elapsed)


def run_arg_as_command(my_name="metabbo"):
    """
    Use the sub-command's callback in `func` to actually run the sub-command.
    This function can be used as an entry point for a console script.
    """
    parser = build_full_parser(my_name)
    args = parser.parse_args()
    if not args.func:
        parser.print_usage()
        return
    # We need to configure logging before running context because that context expects logging to be setup.
    try:
        metabbo.config.configure_logging(args.prolix, args.log_level, log_dir=args.output_dir)
    except Exception as exc:
        croak(exc, 1)

    with execute_or_bail():
        overrides = list(args.overrides) + args.command.overrides(args)
        config = metabbo.config.load_config(args.config, args.preset, overrides)
        if args.use_output_dir:
            prepare_output_dir(args, config)
        args.func(args, config)


def prepare_output_dir(args, config: RunConfig) -> None:
    """
    Refuse to replace earlier results (unless asked to), then continue the log and record the resolved settings
    in the output directory.
    """
    existing = [filename for filename in args.command.outputs(args, config) if os.path.exists(filename)]
    if existing and not args.overwrite:
        raise OutputExistsError(
            "output exists already (use --overwrite to replace): {}".format(join_with_quotes(existing))
        )
    metabbo.config.move_log_file(config.output_dir)
    metabbo.config.write_resolved_config(config.output_dir)
    metabbo.monitor.start_monitors(config.output_dir)


class FancyArgumentParser(argparse.ArgumentParser):
    """
    Add feature to read command line arguments from files and support:
        * One argument per line (whitespace is trimmed)
        * Comments or empty lines (either are ignored)

    To use this feature, add an argument with "@" and have values ready inside of it, one per line:
        cat > problems <<EOF
        --problem
        sphere
        --problem
        schwefel
        EOF
        metabbo train-surrogate @problems
    """

    def __init__(self, **kwargs) -> None:
        fromfile_prefix_chars = kwargs.pop("fromfile_prefix_chars", "@")
        super().__init__(fromfile_prefix_chars=fromfile_prefix_chars, **kwargs)

    def convert_arg_line_to_args(self, arg_line: str) -> List[str]:
        """
        Return argument from the current line (when arguments are processed from a file).

        >>> parser = FancyArgumentParser()
        >>> parser.convert_arg_line_to_args("--verbose")
        ['--verbose']
        >>> parser.convert_arg_line_to_args(" schwefel ")
        ['schwefel']
        >>> parser.convert_arg_line_to_args("rastrigin # multimodal")
        ['rastrigin']
        >>> parser.convert_arg_line_to_args(" # single-line comment")
        []
        >>> parser.convert_arg_line_to_args("--problem accidentally_on_one_line")
        Traceback (most recent call last):
        ValueError: unrecognizable argument value in line: --problem accidentally_on_one_line
        """
        args = shlex.split(arg_line, comments=True)
        if len(args) > 1:
            raise ValueError("unrecognizable argument value in line: {}".format(arg_line.strip()))
        return args


def add_settings_arguments(parser):
    """
    Add the options about settings which every sub-command shares.
    """
    parser.add_argument(
        "-c",
        "--config",
        help="add configuration file or directory of files (may be repeated)",
        action="append",
        default=[],
    )
    parser.add_argument(
        "--preset",
        help="start from the settings of this preset (default: '%(default)s')",
        choices=metabbo.config.PRESETS,
        default="full",
    )
    parser.add_argument(
        "--set",
        help="override a single setting, like 'de.max_fes=2000' (may be repeated)",
        action="append",
        default=[],
        dest="overrides",
        metavar="SECTION.KEY=VALUE",
    )
    parser.add_argument("--seed", help="set the root seed (overrides 'run.seed')", type=int)
    parser.add_argument("--output-dir", help="write results into this directory (overrides 'run.output_dir')")
    parser.add_argument(
        "--overwrite", help="replace results from an earlier run", default=False, action="store_true"
    )

    parser.set_defaults(use_output_dir=True)


def build_basic_parser(prog_name, description=None):
    """
    Build basic parser which only knows about the version and the sub-commands.

    The options about settings are added to the sub-parsers (see `add_settings_arguments`) so that
    they can be given after the sub-command, like 'metabbo sample --seed 1'.
    """
    parser = FancyArgumentParser(prog=prog_name, description=description, fromfile_prefix_chars="@")

    # Set some defaults (in case no sub-command's add_to_parser is called)
    parser.set_defaults(prolix=None)
    parser.set_defaults(log_level=None)
    parser.set_defaults(func=None)
    return parser


def build_full_parser(prog_name):
    """
    Build a parser by adding sub-parsers for sub-commands.
    Other options, even if shared between sub-commands, are in the sub-parsers to avoid
    having to awkwardly insert them between program name and sub-command name.

    :param prog_name: Name that should show up as command name in help
    :return: instance of ArgumentParser that is ready to parse and run sub-commands
    """
    parser = build_basic_parser(
        prog_name, description="This command allows to learn and evaluate policies that configure DE."
    )

    package = metabbo.config.package_version()
    parser.add_argument("-V", "--version", action="version", version="%(prog)s ({})".format(package))

    subparsers = parser.add_subparsers(
        help="specify one of these sub-commands (which can all provide more help)",
        title="available sub-commands",
        dest="sub_command",
    )
    for klass in [
        # Surrogate learning
        SampleCommand,
        TrainSurrogateCommand,
        # Policy learning and evaluation
        TrainPolicyCommand,
        EvaluateCommand,
        AblateCommand,
        # Environment commands
        ShowConfigCommand,
        ListProblemsCommand,
        # General and development commands
        SelfTestCommand,
    ]:
        cmd = klass()
        cmd.add_to_parser(subparsers)

    return parser


def add_standard_arguments(parser, options):
    """
    Provide "standard" arguments in the sense that the name and description should be the
    same when used by multiple sub-commands.

    :param parser: should be a sub-parser
    :param options: see option strings below, like "problem", "arch"
    """
    if "problem" in options:
        parser.add_argument(
            "-p",
            "--problem",
            help="pick a benchmark function (may be repeated; default: all training functions)",
            action="append",
            default=[],
            dest="problems",
        )
    if "dim" in options:
        parser.add_argument("--dim", help="set problem dimension (overrides 'problems.dim')", type=int)
    if "n" in options:
        parser.add_argument("--n", help="set number of samples (overrides 'sampling.n_samples')", type=int)
    if "arch" in options:
        parser.add_argument(
            "--arch",
            help="select surrogate network architecture (overrides 'networks.arch')",
            choices=ARCHITECTURES,
        )
    if "loss" in options:
        parser.add_argument(
            "--loss", help="select surrogate loss (overrides 'surrogate.loss')", choices=("roa", "mse")
        )
    if "workers" in options:
        parser.add_argument(
            "-x", "--workers", help="run evaluations in N processes (overrides 'run.workers')", type=int, metavar="N"
        )


class SubCommand:
    """
    Instances (of child classes) will setup sub-parsers and have callbacks for those.
    """

    def __init__(self, name: str, help_: str, description: str, aliases: Optional[List[str]] = None) -> None:
        self.name = name
        self.help = help_
        self.description = description
        self.aliases = aliases

    def add_to_parser(self, parent_parser) -> argparse.ArgumentParser:
        if self.aliases is not None:
            parser = parent_parser.add_parser(
                self.name, help=self.help, description=self.description, aliases=self.aliases
            )
        else:
            parser = parent_parser.add_parser(self.name, help=self.help, description=self.description)
        parser.set_defaults(func=self.callback, command=self)
        add_settings_arguments(parser)

        # Log level and prolix setting need to be always known since `run_arg_as_command` depends on them.
        group = parser.add_mutually_exclusive_group()
        group.add_argument("-o", "--prolix", help="send full log to console", default=False, action="store_true")
        group.add_argument(
            "-v", "--verbose", help="increase verbosity", action="store_const", const="DEBUG", dest="log_level"
        )
        group.add_argument(
            "-q", "--quiet", help="decrease verbosity", action="store_const", const="WARNING", dest="log_level"
        )

        self.add_arguments(parser)
        return parser

    def add_arguments(self, parser):
        """Override this method for sub-classes"""
        pass

    def overrides(self, args) -> List[str]:
        """
        Return settings overrides ("section.key=value") from the command line options of the sub-command.
        """
        options = [
            ("seed", "run.seed"),
            ("output_dir", "run.output_dir"),
            ("workers", "run.workers"),
            ("dim", "problems.dim"),
            ("n", "sampling.n_samples"),
            ("arch", "networks.arch"),
            ("loss", "surrogate.loss"),
            ("runs", "evaluation.runs"),
            ("ood", "evaluation.ood"),
            ("evaluator", "pls.evaluator"),
        ]
        found = []
        for attribute, setting in options:
            value = getattr(args, attribute, None)
            if value is not None:
                found.append("{}={}".format(setting, value))
        return found

    def outputs(self, args, config: RunConfig) -> List[str]:
        """Return files that the sub-command creates (and which must not exist unless overwriting)."""
        return []

    @staticmethod
    def selected_specs(args, config: RunConfig) -> List[ProblemSpec]:
        if args.problems:
            return [config.spec(name) for name in args.problems]
        return config.train_specs()

    def callback(self, args, config):
        """Override this method for sub-classes"""
        raise NotImplementedError("Instance of {} has no proper callback".format(self.__class__.__name__))


class SampleCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "sample",
            "draw samples of training problems",
            "Evaluate the training problems at Latin hypercube samples and write one file per problem.",
        )

    def add_arguments(self, parser):
        add_standard_arguments(parser, ["problem", "dim", "n"])

    def outputs(self, args, config):
        return [dataset_filename(config.output_dir, spec) for spec in self.selected_specs(args, config)]

    def callback(self, args, config):
        n = config.n_samples
        for spec in self.selected_specs(args, config):
            seed = metabbo.pipeline.sample_seed(config.seed, spec, n)
            counter = EvalCounter()
            with metabbo.monitor.Monitor(spec.label, "sample", n=n, seed=seed):
                dataset = build_dataset(spec, n, seed, counter)
            filename = dataset_filename(config.output_dir, spec)
            os.makedirs(os.path.dirname(filename), exist_ok=True)
            dataset.save(filename)
            print(filename)


class TrainSurrogateCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "train-surrogate",
            "train one surrogate per training problem",
            "Train the surrogate network of each training problem on its samples (drawing them if needed)."
            " Training uses the MSE loss first and then the relative-order-aware loss unless '--loss mse'.",
        )

    def add_arguments(self, parser):
        add_standard_arguments(parser, ["problem", "dim", "n", "arch", "loss"])

    def outputs(self, args, config):
        return [
            metabbo.pipeline.surrogate_filename(config.output_dir, spec, config.network.arch, config.sls.loss)
            for spec in self.selected_specs(args, config)
        ]

    def callback(self, args, config):
        counter = EvalCounter()
        trained = metabbo.pipeline.run_sls(self.selected_specs(args, config), config, config.output_dir, counter)
        rows = [
            [
                surrogate.label,
                surrogate.metadata["arch"],
                surrogate.metadata["loss"],
                format_scientific(surrogate.metadata["holdout_mse"]),
                "{:.4f}".format(surrogate.metadata["holdout_order_acc"]),
            ]
            for surrogate in trained
        ]
        print(format_lines(rows, ("problem", "arch", "loss", "holdout_mse", "holdout_order_acc")))
        logger.info("Surrogate learning used %d evaluations of true functions", counter.consumed)


class TrainPolicyCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "train-policy",
            "learn the policy that configures DE",
            "Learn the policy with deep Q-learning from DE runs on the surrogates of the training problems"
            " (or on the true functions with '--evaluator true').",
        )

    def add_arguments(self, parser):
        add_standard_arguments(parser, ["dim", "arch", "loss"])
        parser.add_argument(
            "--evaluator",
            help="evaluate DE runs with the surrogates or the true functions (overrides 'pls.evaluator')",
            choices=("surrogate", "true_function", "true"),
        )
        parser.add_argument("--name", help="name of the policy (default: '%(default)s')", default="policy")
        parser.add_argument(
            "--resume",
            help="continue from the last checkpoint (or the checkpoint in FILE)",
            nargs="?",
            const="",
            metavar="FILE",
        )

    def overrides(self, args):
        found = super().overrides(args)
        if getattr(args, "evaluator", None) in EVALUATOR_ALIASES:
            found.remove("pls.evaluator={}".format(args.evaluator))
            found.append("pls.evaluator={}".format(EVALUATOR_ALIASES[args.evaluator]))
        return found

    def outputs(self, args, config):
        if args.resume is not None:
            return []
        return [metabbo.pipeline.policy_filename(config.output_dir, args.name)]

    def callback(self, args, config):
        resume_from = None
        if args.resume is not None:
            resume_from = args.resume or metabbo.pipeline.policy_filename(config.output_dir, args.name)
            if not os.path.exists(resume_from):
                raise InvalidArgumentError("cannot resume, missing checkpoint '{}'".format(resume_from))
        agent = metabbo.pipeline.learn_policy(config, config.output_dir, name=args.name, resume_from=resume_from)
        print(metabbo.pipeline.policy_filename(config.output_dir, args.name))
        logger.info(
            "Policy '%s' took %d learning steps in %d episodes", args.name, agent.learning_steps, agent.episodes
        )


class EvaluateCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "evaluate",
            "evaluate policies and baselines on test problems",
            "Run learned policies and the baselines repeatedly on the (true) test problems and rank them."
            " Policies are given as NAME=FILE, the default is the policy in the output directory.",
        )

    def add_arguments(self, parser):
        add_standard_arguments(parser, ["dim", "workers"])
        parser.add_argument("--runs", help="set number of runs per problem (overrides 'evaluation.runs')", type=int)
        parser.add_argument(
            "--ood",
            help="evaluate on out-of-distribution variants (overrides 'evaluation.ood')",
            choices=("none",) + OOD_MODES + tuple(OOD_ALIASES),
        )
        parser.add_argument(
            "--policy",
            help="evaluate the policy in checkpoint FILE under NAME (may be repeated)",
            action="append",
            default=[],
            dest="policies",
            metavar="NAME=FILE",
        )
        parser.add_argument(
            "--no-policy", help="evaluate only the baselines", default=False, action="store_true"
        )
        parser.add_argument(
            "-p",
            "--problem",
            help="pick a test function (may be repeated; default: all test functions)",
            action="append",
            default=[],
            dest="problems",
        )

    def overrides(self, args):
        found = super().overrides(args)
        if getattr(args, "ood", None) in OOD_ALIASES:
            found.remove("evaluation.ood={}".format(args.ood))
            found.append("evaluation.ood={}".format(OOD_ALIASES[args.ood]))
        return found

    def outputs(self, args, config):
        return [os.path.join(config.output_dir, "evaluation", "runs.jsonl")]

    @staticmethod
    def policies(args, config) -> "OrderedDict[str, str]":
        policies = OrderedDict()  # type: OrderedDict[str, str]
        if args.no_policy:
            return policies
        for text in args.policies:
            name, sep, filename = text.partition("=")
            if not sep or not name or not filename:
                raise InvalidArgumentError("policy must look like 'NAME=FILE', got '{}'".format(text))
            policies[name] = filename
        if not policies:
            policies["policy"] = metabbo.pipeline.policy_filename(config.output_dir)
        missing = [filename for filename in policies.values() if not os.path.exists(filename)]
        if missing:
            raise InvalidArgumentError("missing policy checkpoint(s): {}".format(join_with_quotes(missing)))
        return policies

    def callback(self, args, config):
        methods = metabbo.pipeline.load_methods(self.policies(args, config), config.evaluation.baselines, config)
        if not methods:
            raise InvalidArgumentError("nothing to evaluate")
        specs = metabbo.pipeline.evaluation_specs(config)
        if args.problems:
            wanted = [config.spec(name).name for name in args.problems]
            specs = [spec for spec in specs if spec.name in wanted]
        result = metabbo.pipeline.evaluate_policy(
            methods,
            specs,
            config.evaluation.runs,
            config.de,
            config.seed,
            output_dir=config.output_dir,
            workers=config.workers,
        )
        print(metabbo.pipeline.format_evaluation(result))


class AblateCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "ablate",
            "compare surrogate architectures and losses",
            "Compare KAN, MLP and RBF surrogates ('architectures'), policies learned on surrogates trained"
            " with and without the relative-order-aware loss ('loss'), and write landscapes of 2D surrogates"
            " ('landscapes').",
        )

    def add_arguments(self, parser):
        add_standard_arguments(parser, ["dim", "n", "workers"])
        parser.add_argument(
            "parts",
            help="select ablations among {} (default: all)".format(join_with_quotes(metabbo.pipeline.ABLATION_PARTS)),
            nargs="*",
            default=[],
        )
        parser.add_argument(
            "--repeats", help="repeat architecture comparison with N seeds", type=int, default=1, metavar="N"
        )

    def outputs(self, args, config):
        parts = args.parts or metabbo.pipeline.ABLATION_PARTS
        return [os.path.join(config.output_dir, "ablation", part) for part in parts]

    def callback(self, args, config):
        report = metabbo.pipeline.run_ablations(
            config,
            os.path.join(config.output_dir, "ablation"),
            parts=args.parts or metabbo.pipeline.ABLATION_PARTS,
            repeats=args.repeats,
        )
        if "architectures" in report:
            rows = [
                [problem, arch, format_scientific(mse), "{:.4f}".format(accuracy), mse_rank, accuracy_rank]
                for problem, arch, mse, accuracy, mse_rank, accuracy_rank in report["architectures"]
            ]
            print(format_lines(rows, ("problem", "arch", "holdout_mse", "holdout_order_acc", "mse_rank", "acc_rank")))
        if "landscapes" in report:
            rows = [[problem, loss, "{:.4f}".format(accuracy)] for problem, loss, accuracy in report["landscapes"]]
            print(format_lines(rows, ("problem", "loss", "holdout_order_acc")))
        if "loss" in report:
            print(metabbo.pipeline.format_evaluation(report["loss"]))


class ShowConfigCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "show-config",
            "show settings",
            "Print settings (after merging defaults, preset, config files and overrides)."
            " Names may be glob patterns like 'de.*'.",
            aliases=["settings"],
        )

    def add_arguments(self, parser):
        parser.set_defaults(log_level="CRITICAL")
        parser.set_defaults(use_output_dir=False)
        parser.add_argument("names", help="print just the values for the chosen settings", nargs="*")

    def callback(self, args, config):
        mapping = metabbo.config.get_config_map()
        patterns = args.names or ["*"]
        rows = [
            [name, str(value)]
            for name, value in mapping.items()
            if any(fnmatch.fnmatch(name, pattern) for pattern in patterns)
        ]
        print(format_lines(rows, ("name", "value")))


class ListProblemsCommand(SubCommand):
    def __init__(self):
        super().__init__(
            "list-problems",
            "list benchmark functions",
            "List the benchmark functions with their split membership and the location of their optimum.",
        )

    def add_arguments(self, parser):
        parser.set_defaults(log_level="CRITICAL")
        parser.set_defaults(use_output_dir=False)
        add_standard_arguments(parser, ["dim"])

    def callback(self, args, config):
        rows = []
        for name in FUNCTION_NAMES:
            problem = config.spec(name).instantiate()
            optimum = problem.optimum_location()
            location = ", ".join("{:.3g}".format(value) for value in optimum[:3])
            if len(optimum) > 3:
                location += ", ..."
            rows.append([name, "train" if name in TRAIN_FUNCTIONS else "test", problem.dim, "[{}]".format(location)])
        print(format_lines(rows, ("function", "split", "dim", "optimum")))


class SelfTestCommand(SubCommand):
    def __init__(self):
        super().__init__("selftest", "run code tests", "Run self test of the package.")

    def add_arguments(self, parser):
        # For self-tests, dial logging back to (almost) nothing so that logging in console doesn't mix with test output.
        parser.set_defaults(log_level="CRITICAL")
        parser.set_defaults(use_output_dir=False)
        parser.add_argument(
            "test_family",
            help="select which family of tests to run",
            nargs="?",
            choices=["pep8", "doctest", "type-check", "all"],
            default="all",
        )

    def callback(self, args, config):
        if args.test_family in ("pep8", "all"):
            metabbo.selftest.run_pep8("metabbo", args.log_level)
        if args.test_family in ("doctest", "all"):
            metabbo.selftest.run_doctest("metabbo.selftest", args.log_level)
        if args.test_family in ("type-check", "all"):
            metabbo.selftest.run_type_checker()


if __name__ == "__main__":
    run_arg_as_command()
