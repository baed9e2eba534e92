"""Acceptance suite: one test per criterion, one PASS/FAIL line per check.

The scale is chosen with the ``BFAMILY_ACCEPTANCE`` environment variable:
``all`` (default) runs every criterion including the t = 2500 lefton counts,
``desk`` stops those runs at t = 600 and ``fast`` keeps only the sub-minute
criteria. Evolution runs are shared through the session cache, and the
conservation criterion runs last so that it sees every completed run.
"""

import os

import pytest

from bfamily import verify as vf

SCALE = os.environ.get("BFAMILY_ACCEPTANCE", "all")
NUMBERS, FULL = vf.select(SCALE)
ORDER = [n for n in NUMBERS if n != 10] + ([10] if 10 in NUMBERS else [])


@pytest.fixture(scope="session")
def context(run_cache):
    return vf.Context(full=FULL, cache=run_cache)


@pytest.mark.parametrize("number", ORDER, ids=[f"criterion_{n}" for n in ORDER])
def test_criterion(number, context, acceptance_lines):
    checks = vf.run_criterion(number, context)
    for chk in checks:
        line = chk.line()
        print(line)
        acceptance_lines.append(line)
    failed = [c.line() for c in checks if not c.passed]
    assert not failed, "\n".join(failed)
