"""Shared fixtures.

The default end-to-end pipeline (dataset generation, training,
evaluation at reference seeds) is expensive enough that several tests
want to share one run of it.  `default_pipeline` executes it once per
session through the command line front end and hands out the artifact
paths; the determinism test re-runs the same commands into a second
directory and compares bytes.
"""

import time

import pytest

from tricalib import cli


def run_cli(argv):
    """Invoke the CLI in-process and return its exit code."""
    return cli.main(argv)


def _coerce(val):
    for cast in (int, float):
        try:
            return cast(val)
        except ValueError:
            pass
    if val in ("True", "False"):
        return val == "True"
    return val


def read_report(path):
    """Parse a `key = value` report file; values typed where possible."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            key, _, val = line.partition("=")
            out[key.strip()] = _coerce(val.strip())
    return out


class PipelineArtifacts:
    def __init__(self, root):
        self.root = root
        self.dataset = root / "train.csv"
        self.checkpoint = root / "model.ckpt"
        self.report_dir = root / "train_report"
        self.eval_dir = root / "eval"
        self.wall_clock = None

    def run(self):
        t0 = time.perf_counter()
        assert run_cli(["gen-dataset", "-o", str(self.dataset)]) == 0
        assert run_cli(["train", "-i", str(self.dataset), "-o", str(self.checkpoint),
                        "--report-dir", str(self.report_dir)]) == 0
        assert run_cli(["evaluate", "-m", str(self.checkpoint), "-i", str(self.dataset),
                        "-o", str(self.eval_dir)]) == 0
        self.wall_clock = time.perf_counter() - t0
        return self

    @property
    def train_report(self):
        return read_report(self.report_dir / "report.txt")

    @property
    def eval_report(self):
        return read_report(self.eval_dir / "report.txt")


@pytest.fixture(scope="session")
def default_pipeline(tmp_path_factory):
    """One full default-seed pipeline run, shared across the session."""
    root = tmp_path_factory.mktemp("default_pipeline")
    return PipelineArtifacts(root).run()
