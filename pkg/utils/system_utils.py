import json
import os
import time
from errno import EEXIST

import numpy as np


def mkdir_p(folder_path):
    # Creates a directory. equivalent to using mkdir -p on the command line
    try:
        os.makedirs(folder_path)
    except OSError as exc:
        if exc.errno == EEXIST and os.path.isdir(folder_path):
            pass
        else:
            raise


def _to_builtin(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError("not JSON serializable: {!r}".format(type(value)))


def dumps_record(record):
    return json.dumps(record, default=_to_builtin, sort_keys=False)


class JsonlWriter:
    """Line-delimited JSON records; stdout when path is None."""

    def __init__(self, path=None, stream=None):
        self.path = path
        self._stream = stream
        self._owned = False
        if path is not None:
            folder = os.path.dirname(path)
            if folder:
                mkdir_p(folder)
            self._stream = open(path, "w")
            self._owned = True

    def write(self, record):
        if self._stream is None:
            return
        self._stream.write(dumps_record(record) + "\n")
        self._stream.flush()

    def close(self):
        if self._owned:
            self._stream.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False


def read_jsonl(path):
    with open(path) as f:
        return [json.loads(line) for line in f if line.strip()]


def searchForRuns(folder, name="records.jsonl"):
    runs = []
    for root, _, files in os.walk(folder):
        if name in files:
            runs.append(os.path.join(root, name))
    return sorted(runs)


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NOT_CONVERGED = 2
EXIT_INTERNAL = 3


def run_record(command, **fields):
    record = {"command": command, "timestamp": time.time()}
    record.update(fields)
    return record


def write_results(folder, results, name="results.json"):
    with open(os.path.join(folder, name), "w") as fp:
        json.dump(results, fp, indent=True, default=_to_builtin)
