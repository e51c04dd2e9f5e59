"""Collects one PASS/FAIL line per acceptance criterion and prints them
after the run, so they show up without -s."""

import time
from contextlib import contextmanager

ACCEPTANCE_LINES = []


@contextmanager
def criterion(number, title, limit_seconds, tolerance="exact"):
    """Time the block, fail it if it overruns, and record one summary line.

    The block may fill the yielded dict with short facts for the line.
    """
    facts = {}
    start = time.perf_counter()
    status = "FAIL"
    try:
        yield facts
        elapsed = time.perf_counter() - start
        assert elapsed < limit_seconds, f"took {elapsed:.1f}s, limit {limit_seconds}s"
        status = "PASS"
    finally:
        elapsed = time.perf_counter() - start
        extra = ", ".join(f"{k}={v}" for k, v in facts.items())
        line = f"[{status}] criterion {number:>2}: {title} | tolerance: {tolerance} | {elapsed:.1f}s (limit {limit_seconds}s)"
        if extra:
            line += " | " + extra
        ACCEPTANCE_LINES.append(line)
        print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
