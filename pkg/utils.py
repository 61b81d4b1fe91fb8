"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import collections
import csv
from dataclasses import dataclass, field
import logging
import multiprocessing as mp
import os
import time
import torch

TOOL_NAME = "oscillator-calibration"
__version__ = "0.1.0"


class CalibrationError(Exception):
    """
    Base class for failures that terminate a command. `exit_code` is the
    process exit status `calib.py` returns for it.
    """

    exit_code = 4


class ConfigError(CalibrationError):
    exit_code = 2

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__(
            "Invalid configuration:\n" + "\n".join("  " + p for p in self.problems)
        )


class DataError(CalibrationError):
    exit_code = 3


class ComputeError(CalibrationError):
    exit_code = 4


class MissingPrerequisiteError(CalibrationError):
    exit_code = 5

    def __init__(self, path, producer):
        self.path = path
        self.producer = producer
        super().__init__(f"Missing {path}, run `{producer}` first.")


@dataclass
class Meters:
    """
    Proposal and acceptance counts per sampler block (e.g. "theta_4", "s",
    "tau2").
    """

    proposed: dict = field(default_factory=lambda: collections.defaultdict(int))
    accepted: dict = field(default_factory=lambda: collections.defaultdict(int))

    def update(self, key, accepted):
        self.proposed[key] += 1
        self.accepted[key] += int(accepted)

    def rate(self, key):
        n = self.proposed.get(key, 0)
        return self.accepted.get(key, 0) / n if n > 0 else 0.0

    def rates(self):
        return {k: self.rate(k) for k in sorted(self.proposed)}

    def reset(self):
        self.proposed.clear()
        self.accepted.clear()
        return self

    def state_dict(self):
        return {"proposed": dict(self.proposed), "accepted": dict(self.accepted)}

    def load_state_dict(self, state):
        self.reset()
        self.proposed.update(state["proposed"])
        self.accepted.update(state["accepted"])


# Used to measure the time taken for multiple events
class Timer:
    def __init__(self, keys):
        self.keys = keys
        self.n = {}
        self.running_time = {}
        self.total_time = {}
        self.reset()

    def start(self, key):
        self.running_time[key] = time.perf_counter()
        return self

    def stop(self, key):
        self.total_time[key] += time.perf_counter() - self.running_time[key]
        self.n[key] += 1
        self.running_time[key] = None
        return self

    def reset(self):
        for k in self.keys:
            self.total_time[k] = 0.0
            self.running_time[k] = None
            self.n[k] = 0
        return self

    def value(self):
        vals = {}
        for k in self.keys:
            if self.n[k] == 0:
                raise ValueError(f"Timer key {k} was never stopped")
            vals[k] = self.total_time[k] / self.n[k]
        return vals

    def summary(self):
        return ", ".join(
            "{} : {:.2f}ms".format(k, v * 1000.0) for k, v in self.value().items()
        )


def format_float(x):
    # shortest repr that round-trips
    return repr(float(x))


def write_header(fid, config_hash, producer, metadata=None):
    fid.write(f"# tool={TOOL_NAME} version={__version__}\n")
    fid.write(f"# config_hash={config_hash}\n")
    fid.write(f"# producer={producer}\n")
    for key, value in (metadata or {}).items():
        fid.write(f"# {key}={value}\n")


def write_table(path, columns, rows, config_hash, producer, metadata=None):
    """
    Writes a delimited-text table with the standard `#` header block.
    """
    with open(path, "w", newline="") as fid:
        write_header(fid, config_hash, producer, metadata)
        writer = csv.writer(fid, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def format_cell(value):
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def append_rows(path, rows):
    """
    Appends rows to a table written by `write_table`, floats formatted with
    `format_float`.
    """
    with open(path, "a", newline="") as fid:
        writer = csv.writer(fid, lineterminator="\n")
        for row in rows:
            writer.writerow([format_cell(v) for v in row])


def read_header(path):
    header = {}
    with open(path, "r") as fid:
        for line in fid:
            if not line.startswith("#"):
                break
            for item in line[1:].split():
                if "=" in item:
                    key, value = item.split("=", 1)
                    header[key] = value
    return header


def read_table(path):
    """
    Reads a table written by `write_table`.

    Returns:
        (header, columns, rows) where `header` maps metadata keys to strings,
        `columns` is the column row and `rows` a list of string lists.
    """
    header = read_header(path)
    with open(path, "r", newline="") as fid:
        lines = (line for line in fid if not line.startswith("#"))
        reader = csv.reader(lines)
        try:
            columns = next(reader)
        except StopIteration:
            raise ValueError(f"Table {path} has no column row")
        rows = [row for row in reader if row]
    return header, columns, rows


class WorkerPool:
    """
    Ordered map on a process pool, or in-process when `workers <= 1`.
    `initializer(*initargs)` runs once per worker (or once locally).
    """

    def __init__(self, workers=1, initializer=None, initargs=()):
        self.workers = workers
        self.initializer = initializer
        self.initargs = initargs
        self._pool = None

    def __enter__(self):
        if self.workers > 1:
            self._pool = mp.Pool(
                processes=self.workers,
                initializer=self.initializer,
                initargs=self.initargs,
            )
        elif self.initializer is not None:
            self.initializer(*self.initargs)
        return self

    def map(self, func, items, chunksize=1):
        items = list(items)
        if self._pool is None:
            return [func(item) for item in items]
        return self._pool.map(func, items, chunksize=chunksize)

    def __exit__(self, exc_type, exc, tb):
        if self._pool is not None:
            if exc_type is None:
                self._pool.close()
            else:
                self._pool.terminate()
            self._pool.join()
            self._pool = None
        return False


def parallel_map(func, items, workers=1, chunksize=1, initializer=None, initargs=()):
    with WorkerPool(workers, initializer, initargs) as pool:
        return pool.map(func, items, chunksize)


def save_checkpoint(state, checkpoint_path):
    directory = os.path.dirname(checkpoint_path)
    if directory and not os.path.exists(directory):
        os.makedirs(directory)
    tmp_path = checkpoint_path + ".tmp"
    torch.save(state, tmp_path)
    os.replace(tmp_path, checkpoint_path)
    logging.info(f"Saved checkpoint {checkpoint_path}")


def load_checkpoint(checkpoint_path):
    if not os.path.exists(checkpoint_path):
        raise MissingPrerequisiteError(checkpoint_path, "calibrate")
    return torch.load(checkpoint_path, weights_only=False)
