"""
Surrogate learning: one network per training problem, fitted to normalized samples in two phases.

Phase one minimizes the mean squared error over shuffled minibatches.  Phase two sorts every minibatch by
true value (descending) and minimizes the relative-order-aware loss

    loss = mean_i [ lambda * 1/2 (y_i - p_i)^2 + OC_i ]
    OC_i = 1/2 ( |y_{i-1} - p_i| + |p_i - y_{i+1}| )

where the order-correction term OC pulls every prediction between the true values of its sorted neighbors
(at the ends of the batch, only the one existing neighbor contributes).  The weight lambda starts at one and
is multiplied by (1 - epoch / T_mix) after every epoch of phase two.
"""

import logging
from typing import Callable, Iterator, List, Optional, Tuple

import funcy as fy
import numpy as np

from metabbo.errors import InvalidArgumentError, TrainingDivergenceError
from metabbo.networks import Network
from metabbo.networks.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from metabbo.networks.optim import build_optimizer
from metabbo.problems import EvalCounter, Problem, ProblemSpec
from metabbo.sampling import Normalizer, SampleSet
from metabbo.text import write_csv

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())

LOSS_CURVE_HEADER = ("phase", "epoch", "mse", "oc", "lambda", "order_acc")

# Pairwise comparisons are done in blocks of rows to bound memory.
_PAIR_BLOCK_ROWS = 512


class SlsConfig:
    """
    Settings of surrogate learning.

    >>> SlsConfig(mix_epochs=0)
    Traceback (most recent call last):
    metabbo.errors.InvalidArgumentError: mix_epochs must be at least 1, got 0
    """

    def __init__(
        self,
        batch_size: int = 100,
        mse_epochs: int = 300,
        roa_epochs: int = 1000,
        learning_rate: float = 0.01,
        mix_epochs: Optional[int] = None,
        loss: str = "roa",
        optimizer: str = "adam",
        eval_period: int = 50,
    ) -> None:
        if mix_epochs is None:
            mix_epochs = max(roa_epochs, 1)
        for name, value, minimum in [
            ("batch_size", batch_size, 1),
            ("mse_epochs", mse_epochs, 0),
            ("roa_epochs", roa_epochs, 0),
            ("mix_epochs", mix_epochs, 1),
            ("eval_period", eval_period, 1),
        ]:
            if value < minimum:
                raise InvalidArgumentError("{} must be at least {:d}, got {}".format(name, minimum, value))
        if not learning_rate > 0.0:
            raise InvalidArgumentError("learning rate must be positive, got {}".format(learning_rate))
        if loss not in ("roa", "mse"):
            raise InvalidArgumentError("unknown surrogate loss '{}'".format(loss))
        self.batch_size = batch_size
        self.mse_epochs = mse_epochs
        self.roa_epochs = roa_epochs
        self.learning_rate = learning_rate
        self.mix_epochs = mix_epochs
        self.loss = loss
        self.optimizer = optimizer
        self.eval_period = eval_period

    def with_loss(self, loss: str) -> "SlsConfig":
        return SlsConfig(
            self.batch_size,
            self.mse_epochs,
            self.roa_epochs,
            self.learning_rate,
            self.mix_epochs,
            loss,
            self.optimizer,
            self.eval_period,
        )


def mse_loss(y_true, y_pred) -> Tuple[float, np.ndarray]:
    """
    Return mean of 1/2 (y - p)^2 and its gradient wrt. the predictions.

    >>> loss, grad = mse_loss([1.0], [0.0])
    >>> loss, grad.tolist()
    (0.5, [-1.0])
    """
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if len(y_true) == 0:
        raise InvalidArgumentError("cannot compute loss of an empty batch")
    if y_true.shape != y_pred.shape:
        raise InvalidArgumentError("true values and predictions differ in shape")
    diff = y_pred - y_true
    return float(0.5 * np.mean(np.square(diff))), diff / len(diff)


def order_correction(y_true_sorted, y_pred) -> Tuple[np.ndarray, np.ndarray]:
    """
    Return the order-correction term of every element and its (sub)gradient wrt. the element's prediction.

    The batch must be sorted by true value, descending.  The subgradient of |u| at u = 0 is 0.

    >>> oc, _ = order_correction([9.0, 5.1, 5.0, 3.0, 1.0], [9.0, 5.0, 5.1, 3.0, 1.0])
    >>> oc.round(12).tolist()
    [1.95, 2.0, 1.05, 2.0, 1.0]
    """
    y_true = np.asarray(y_true_sorted, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if len(y_true) < 2:
        raise InvalidArgumentError("order correction needs a batch of at least two elements")
    if y_true.shape != y_pred.shape:
        raise InvalidArgumentError("true values and predictions differ in shape")
    if np.any(np.diff(y_true) > 0.0):
        raise InvalidArgumentError("batch must be sorted by true value in descending order")
    oc = np.zeros_like(y_pred)
    grad = np.zeros_like(y_pred)
    # Upper neighbor y_{i-1} exists for i >= 1, lower neighbor y_{i+1} exists for i <= N - 2
    above = y_true[:-1] - y_pred[1:]
    oc[1:] += 0.5 * np.abs(above)
    grad[1:] -= 0.5 * np.sign(above)
    below = y_pred[:-1] - y_true[1:]
    oc[:-1] += 0.5 * np.abs(below)
    grad[:-1] += 0.5 * np.sign(below)
    return oc, grad


def roa_loss(y_true_sorted, y_pred, lam: float) -> Tuple[float, np.ndarray]:
    """
    Return the relative-order-aware loss of a sorted batch and its gradient wrt. the predictions.

    >>> loss, grad = roa_loss([9.0, 5.1, 5.0, 3.0, 1.0], [9.0, 5.0, 5.1, 3.0, 1.0], lam=0.0)
    >>> round(loss, 12)
    1.6
    """
    if lam < 0.0:
        raise InvalidArgumentError("lambda must not be negative, got {}".format(lam))
    y_true = np.asarray(y_true_sorted, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    oc, oc_grad = order_correction(y_true, y_pred)
    diff = y_pred - y_true
    n = len(y_true)
    loss = float(np.mean(lam * 0.5 * np.square(diff) + oc))
    return loss, (lam * diff + oc_grad) / n


def lambda_schedule(epoch: int, mix_epochs: int, lam: float = 1.0) -> float:
    """
    Return the weight of the MSE term after the given epoch (starting from `lam` before the epoch).

    >>> lambda_schedule(1, 1000)
    0.999
    >>> lambda_schedule(1000, 1000, 0.3)
    0.0
    """
    return max(0.0, lam * (1.0 - epoch / mix_epochs))


def pairwise_order_accuracy(y_true, y_pred) -> float:
    """
    Return the fraction of pairs with distinct true values whose predictions are ordered the same way.

    Pairs with tied predictions count as disagreeing.  Without any pair of distinct true values, return 1.

    >>> pairwise_order_accuracy([9.0, 5.1, 5.0, 3.0, 1.0], [9.0, 5.0, 5.1, 3.0, 1.0])
    0.9
    >>> pairwise_order_accuracy([1.0, 2.0, 3.0], [-1.0, -2.0, -3.0])
    0.0
    """
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    n = len(y_true)
    if n < 2:
        raise InvalidArgumentError("order accuracy needs at least two points")
    columns = np.arange(n)
    comparable = 0
    concordant = 0
    for start in range(0, n, _PAIR_BLOCK_ROWS):
        rows = np.arange(start, min(n, start + _PAIR_BLOCK_ROWS))
        true_sign = np.sign(y_true[rows, np.newaxis] - y_true[np.newaxis, :])
        pred_sign = np.sign(y_pred[rows, np.newaxis] - y_pred[np.newaxis, :])
        valid = (columns[np.newaxis, :] > rows[:, np.newaxis]) & (true_sign != 0.0)
        comparable += int(np.count_nonzero(valid))
        concordant += int(np.count_nonzero(valid & (true_sign == pred_sign)))
    if comparable == 0:
        return 1.0
    return concordant / comparable


class TrainedSurrogate:
    """
    A trained network with the normalization of its training data: predict() maps raw points to raw values.
    """

    def __init__(self, network: Network, normalizer: Normalizer, metadata: Optional[dict] = None) -> None:
        self.network = network
        self.normalizer = normalizer
        self.metadata = dict(metadata or {})

    @property
    def dim(self) -> int:
        return self.network.in_dim

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.normalizer.lower, self.normalizer.upper

    @property
    def label(self) -> str:
        return self.metadata.get("problem_label", "surrogate")

    def predict_normalized(self, xs) -> np.ndarray:
        outputs = self.network.predict(self.normalizer.normalize_x(np.atleast_2d(xs)))
        return outputs[:, 0]

    def predict(self, xs) -> np.ndarray:
        return self.normalizer.denormalize_y(self.predict_normalized(xs))

    def save(self, filename: str) -> None:
        save_checkpoint(
            filename,
            Checkpoint({"surrogate": self.network}, normalization=self.normalizer.to_dict(), metadata=self.metadata),
        )

    @classmethod
    def load(cls, filename: str) -> "TrainedSurrogate":
        checkpoint = load_checkpoint(filename)
        return cls(
            checkpoint.networks["surrogate"], Normalizer.from_dict(checkpoint.normalization), checkpoint.metadata
        )


def order_accuracy(model: TrainedSurrogate, holdout: SampleSet) -> float:
    """
    Return the pairwise order accuracy of the model's predictions on the holdout samples.
    """
    return pairwise_order_accuracy(holdout.ys, model.predict(holdout.xs))


def _minibatches(rng: np.random.Generator, n: int, batch_size: int) -> Iterator[np.ndarray]:
    for batch in fy.chunks(batch_size, rng.permutation(n).tolist()):
        yield np.array(batch, dtype=int)


def _check_finite(stage: str, step: int, value: float) -> None:
    if not np.isfinite(value):
        raise TrainingDivergenceError(stage, step, value)


def train_surrogate(
    dataset: SampleSet,
    net: Network,
    cfg: SlsConfig,
    seed,
    holdout: Optional[SampleSet] = None,
    on_epoch: Optional[Callable[[tuple], None]] = None,
) -> TrainedSurrogate:
    """
    Train the network on the normalized samples: MSE epochs, then (for the ROA loss) ROA epochs.

    Every epoch produces a row (phase, epoch, mse, oc, lambda, order_acc) which is passed to `on_epoch` and
    kept in the metadata under "loss_curve".  The holdout order accuracy is filled in every `eval_period`
    epochs and after the last epoch of each phase.
    """
    if net.in_dim != dataset.dim or net.out_dim != 1:
        raise InvalidArgumentError(
            "network with shape {:d} -> {:d} does not fit samples of dimension {:d}".format(
                net.in_dim, net.out_dim, dataset.dim
            )
        )
    rng = np.random.default_rng(seed)
    optimizer = build_optimizer(cfg.optimizer, cfg.learning_rate)
    xs = dataset.normalize_x(dataset.xs)
    ys = dataset.normalize_y(dataset.ys)
    n = len(ys)
    curve = []  # type: List[tuple]
    model = TrainedSurrogate(net, dataset.normalizer)
    step = 0

    def holdout_accuracy(epoch: int, last_epoch: int) -> Optional[float]:
        if holdout is None or (epoch % cfg.eval_period != 0 and epoch != last_epoch):
            return None
        return order_accuracy(model, holdout)

    def record(row: tuple) -> None:
        curve.append(row)
        if on_epoch is not None:
            on_epoch(row)

    for epoch in range(1, cfg.mse_epochs + 1):
        losses = []
        for batch in _minibatches(rng, n, cfg.batch_size):
            step += 1
            outputs, tape = net.forward(xs[batch])
            loss, grad = mse_loss(ys[batch], outputs[:, 0])
            _check_finite("surrogate training (MSE phase)", step, loss)
            optimizer.step(net, net.backward(tape, grad[:, np.newaxis]))
            losses.append(loss * len(batch))
        mse = sum(losses) / n
        record(("mse", epoch, mse, None, None, holdout_accuracy(epoch, cfg.mse_epochs)))

    lam = 1.0
    if cfg.loss == "roa":
        for epoch in range(1, cfg.roa_epochs + 1):
            mse_sum, oc_sum, count = 0.0, 0.0, 0
            for batch in _minibatches(rng, n, cfg.batch_size):
                if len(batch) < 2:
                    continue
                step += 1
                # Descending by true value, ties broken by sample index
                batch = batch[np.lexsort((batch, -ys[batch]))]
                outputs, tape = net.forward(xs[batch])
                predictions = outputs[:, 0]
                loss, grad = roa_loss(ys[batch], predictions, lam)
                _check_finite("surrogate training (ROA phase)", step, loss)
                oc, _ = order_correction(ys[batch], predictions)
                optimizer.step(net, net.backward(tape, grad[:, np.newaxis]))
                mse_sum += float(np.sum(0.5 * np.square(predictions - ys[batch])))
                oc_sum += float(np.sum(oc))
                count += len(batch)
            record(
                (
                    "roa",
                    epoch,
                    mse_sum / max(count, 1),
                    oc_sum / max(count, 1),
                    lam,
                    holdout_accuracy(epoch, cfg.roa_epochs),
                )
            )
            lam = lambda_schedule(epoch, cfg.mix_epochs, lam)

    if hasattr(net, "check_grid"):
        net.check_grid()  # type: ignore

    outputs = net.predict(xs)[:, 0]
    final_mse, _ = mse_loss(ys, outputs)
    model.metadata.update(
        {
            "seed": seed,
            "arch": net.arch,
            "loss": cfg.loss,
            "train_mse": final_mse,
            "holdout_order_acc": None if holdout is None else order_accuracy(model, holdout),
            "holdout_mse": None if holdout is None else holdout_mse(model, holdout),
            "learning_steps": step,
            "loss_curve": curve,
        }
    )
    if dataset.problem is not None:
        model.metadata["problem"] = dataset.problem
        model.metadata["problem_label"] = ProblemSpec.from_dict(dataset.problem).label
    return model


def holdout_mse(model: TrainedSurrogate, holdout: SampleSet) -> float:
    """Return the MSE loss on the holdout samples (in normalized units)."""
    loss, _ = mse_loss(holdout.normalize_y(holdout.ys), model.predict_normalized(holdout.xs))
    return loss


def write_loss_curve(filename: str, curve: List[tuple]) -> None:
    write_csv(filename, LOSS_CURVE_HEADER, curve)


class SurrogateEvaluator:
    """
    Evaluate points with a trained surrogate in place of the true function.

    Calls are counted (on a counter of their own) but are not evaluations of the true function.
    """

    def __init__(self, surrogate: TrainedSurrogate) -> None:
        self.surrogate = surrogate
        self.counter = EvalCounter()

    @property
    def name(self) -> str:
        return self.surrogate.label

    @property
    def dim(self) -> int:
        return self.surrogate.dim

    @property
    def bounds(self) -> Tuple[float, float]:
        return self.surrogate.bounds

    def evaluate(self, xs) -> np.ndarray:
        points = np.atleast_2d(np.asarray(xs, dtype=float))
        self.counter.charge(points.shape[0])
        return self.surrogate.predict(points)

    __call__ = evaluate


def export_landscape(problem: Problem, surrogate: TrainedSurrogate, resolution: int = 101) -> List[tuple]:
    """
    Return rows (x1, x2, f_true, f_pred) on a regular grid over the box of a two-dimensional problem.
    """
    if problem.dim != 2 or surrogate.dim != 2:
        raise InvalidArgumentError("landscapes are only exported for two-dimensional problems")
    if resolution < 2:
        raise InvalidArgumentError("resolution must be at least 2, got {}".format(resolution))
    lower, upper = problem.bounds
    axis = np.linspace(lower, upper, resolution)
    x1, x2 = np.meshgrid(axis, axis, indexing="ij")
    points = np.column_stack([x1.ravel(), x2.ravel()])
    f_true = problem.evaluate(points)
    f_pred = surrogate.predict(points)
    return [tuple(row) for row in np.column_stack([points, f_true, f_pred]).tolist()]


def write_landscape(filename: str, rows: List[tuple]) -> None:
    write_csv(filename, ("x1", "x2", "f_true", "f_pred"), rows)

