"""
Monitoring (and logging) for the stages of a run.

This module provides a context that records the start time of a step (like sampling a dataset or
training the surrogate of one problem) along with its successful or unsuccessful completion.
Events for start, finish or failure are emitted to every registered dispatcher, normally a
JSON-lines file in the output directory.
"""

import logging
import os
import threading
import traceback
import uuid
from copy import deepcopy
from typing import List, Optional

from metabbo.json_encoder import dumps_line
from metabbo.timer import Timer, utc_now

logger = logging.getLogger(__name__)
logger.addHandler(logging.NullHandler())


STEP_START = "start"
STEP_FINISH = "finish"
STEP_FAIL = "fail"

EVENTS_FILE_NAME = "events.jsonl"


def trace_key():
    """
    Return a "trace key" suitable to track program execution.  It's most likely unique between invocations.

    >>> len(trace_key())
    16
    """
    return uuid.uuid4().hex[:16].upper()


class MetaMonitor(type):
    """
    Metaclass to implement read-only attributes of our Monitor

    If you need to find out the current trace key, call Monitor.run_id.
    """

    @property
    def run_id(cls):
        if cls._trace_key is None:
            cls._trace_key = trace_key()
        return cls._trace_key


class Monitor(metaclass=MetaMonitor):
    """
    Context manager to monitor steps for some target (usually a problem label)

    Monitor instances have these properties which will be stored in the event payload:
        run_id: a trace key for each invocation (All monitors of the same run share the 'run_id'.)
        target: what the step works on, like 'sphere-2d'
        step: what is running, like 'sample' or 'train-surrogate'

    The payloads will have at least the properties of the Monitor instance and:
        event: one of ('start', 'finish', 'fail')
        timestamp: UTC timestamp

    In case of errors, they are added as an array 'errors'.  Extra keyword arguments end up
    in the 'extra' field of the payloads.

    >>> id_ = Monitor.run_id
    >>> isinstance(id_, str)
    True
    >>> Monitor.run_id == id_
    True
    >>> with Monitor("sphere-2d", "sample", n=10) as m:
    ...     m.add_extra("y_min", 0.0)
    >>> m.add_extra("n", 20)
    Traceback (most recent call last):
        ...
    KeyError: "duplicate key in 'extra' payload"
    """

    # See MetaMonitor class for getters
    _trace_key = None

    def __init__(self, target: str, step: str, **kwargs) -> None:
        self._monitor_id = trace_key()
        self._target = target
        self._step = step
        # Create a deep copy so that changes that the caller might make later do not alter our payload
        self._extra = deepcopy(dict(**kwargs))
        self._timer = Timer()

    @property
    def run_id(self):
        return Monitor.run_id

    @property
    def target(self):
        return self._target

    @property
    def step(self):
        return self._step

    @property
    def monitor_id(self):
        return self._monitor_id

    def __enter__(self):
        logger.info("Starting %s step for '%s'", self.step, self.target)
        self._timer = Timer().__enter__()
        MonitorPayload(self, STEP_START, utc_now(), extra=self._extra).emit()
        return self

    def __exit__(self, exc_type, exc_value, tb):
        self._timer.__exit__(exc_type, exc_value, tb)
        seconds = self._timer.elapsed
        if exc_type is None:
            event = STEP_FINISH
            errors = None
            logger.info("Finished %s step for '%s' (%0.2fs)", self._step, self._target, seconds)
        else:
            event = STEP_FAIL
            errors = [
                {
                    "code": (exc_type.__module__ + "." + exc_type.__qualname__).upper(),
                    "message": traceback.format_exception_only(exc_type, exc_value)[0].strip(),
                }
            ]
            logger.warning("Failed %s step for '%s' (%0.2fs)", self._step, self._target, seconds)

        MonitorPayload(self, event, utc_now(), elapsed=seconds, errors=errors, extra=self._extra).emit()

    def add_extra(self, key, value):
        if key in self._extra:
            raise KeyError("duplicate key in 'extra' payload")
        self._extra[key] = value


class MonitorPayload:
    """
    Simple class to encapsulate data for Monitor events which knows how to morph itself for JSON.
    You should consider all attributes to be read-only.
    """

    # Append instances with a 'store' method here
    dispatchers = []  # type: List[PayloadDispatcher]

    def __init__(self, monitor, event, timestamp, elapsed=None, errors=None, extra=None):
        self.run_id = monitor.run_id
        self.target = monitor.target
        self.step = monitor.step
        self.monitor_id = monitor.monitor_id
        self.event = event
        self.timestamp = timestamp
        self.elapsed = elapsed
        self.errors = errors
        self.extra = extra

    def emit(self):
        payload = dict(vars(self))
        # Delete entries that are often not present:
        for key in ["elapsed", "extra", "errors"]:
            if not payload[key]:
                del payload[key]
        logger.debug("Monitor payload = %s", dumps_line(payload))
        for d in MonitorPayload.dispatchers:
            d.store(payload)


class PayloadDispatcher:
    def store(self, payload):
        """
        Send payload to persistence layer
        """
        raise NotImplementedError("PayloadDispatcher failed to implement store method")


class JsonLinesStorage(PayloadDispatcher):
    """
    Append every payload as one line of JSON to a file.

    >>> import tempfile
    >>> with tempfile.TemporaryDirectory() as tmp_dir:
    ...     storage = JsonLinesStorage(os.path.join(tmp_dir, "events.jsonl"))
    ...     storage.store({"event": "start", "target": "sphere-2d"})
    ...     with open(storage.filename) as f:
    ...         print(f.read().strip())
    {"event":"start","target":"sphere-2d"}
    """

    def __init__(self, filename: str) -> None:
        self.filename = filename
        self._lock = threading.Lock()

    def store(self, payload: dict):
        line = dumps_line(payload)
        with self._lock:
            with open(self.filename, "a") as f:
                f.write(line + "\n")


class InsertTraceKey(logging.Filter):
    """
    Called as a logging filter, insert the run id into the logging record for the log's trace key.
    """

    def filter(self, record):
        record.trace_key = Monitor.run_id
        return True


def start_monitors(output_dir: Optional[str]) -> None:
    """
    Register the events file in the output directory (if there is one) as a dispatcher.
    """
    if output_dir is None:
        logger.debug("No output directory, events are only logged")
        return
    os.makedirs(output_dir, exist_ok=True)
    filename = os.path.join(output_dir, EVENTS_FILE_NAME)
    if any(getattr(d, "filename", None) == filename for d in MonitorPayload.dispatchers):
        return
    logger.info("Writing events to '%s'", filename)
    MonitorPayload.dispatchers.append(JsonLinesStorage(filename))
