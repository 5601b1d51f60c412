"""
Exceptions for the toolkit, grouped by what you would need to do to fix them.

This module is import-free besides text utilities so that everybody can import it.
"""

from metabbo.text import join_with_quotes


class MetaBBOError(Exception):
    """
    Parent to all exceptions of this package which allows to write effective except statements
    """


class MetaBBOSystemError(MetaBBOError):
    """
    Blunder in the code -- you'll need to check the code, sorry about that.
    """


class MetaBBOConfigError(MetaBBOError):
    """
    Error in the settings -- you'll need to check your config files or command line overrides.
    """


class MetaBBORuntimeError(MetaBBOError):
    """
    Error found at runtime -- the data, the budget, or the training run itself is the problem.
    """


class MetaBBODelayedExit(MetaBBOError):
    """
    Exception raised when errors were suppressed during "keep going" processing.
    """


class SelfTestError(MetaBBOSystemError):
    """
    Exception when one of the built-in test suites fails
    """


class SchemaInvalidError(MetaBBOSystemError):
    pass


class SchemaValidationError(MetaBBOConfigError):
    pass


class StaleTapeError(MetaBBOSystemError):
    """
    Exception when a backward pass is attempted with a tape that does not belong to the network's current state
    """


class UnknownProblemError(MetaBBOConfigError):
    """
    Exception when a benchmark function name (or an OOD mode) is not known
    """


class UnknownArchitectureError(MetaBBOConfigError):
    """
    Exception when a network architecture (or optimizer) name is not known
    """


class InvalidArgumentError(MetaBBORuntimeError):
    """
    Exception when arguments are detected to be invalid by the command callback or an operation
    """


class DimensionMismatchError(InvalidArgumentError):
    """
    Exception when the shape of an input does not match what the problem or network expects
    """


class BudgetExhaustedError(MetaBBORuntimeError):
    """
    Exception when an enforced evaluation budget would be exceeded
    """


class PopulationTooSmallError(InvalidArgumentError):
    """
    Exception when a mutation operator cannot draw enough distinct individuals
    """


class InsufficientReplayError(MetaBBORuntimeError):
    """
    Exception when the replay buffer does not hold enough transitions to sample a batch
    """


class CheckpointError(MetaBBORuntimeError):
    """
    Exception when a checkpoint file cannot be read back (wrong version, wrong shapes, ...)
    """


class OutputExistsError(InvalidArgumentError):
    """
    Exception when an output file exists already and overwriting was not requested
    """


class TrainingDivergenceError(MetaBBORuntimeError):
    def __init__(self, stage: str, step: int, value: float) -> None:
        self.stage = stage
        self.step = step
        self.value = value
        self.message = "{0.stage} diverged at step {0.step:d} (value={0.value!r})".format(self)

    def __str__(self):
        return self.message


class FailedSurrogatesError(MetaBBODelayedExit):
    def __init__(self, failed_problems, trained_count: int) -> None:
        self.failed_problems = list(failed_problems)
        self.message = "surrogate training failed for {}, {:d} surrogate(s) trained".format(
            join_with_quotes(self.failed_problems), trained_count
        )

    def __str__(self):
        return self.message
