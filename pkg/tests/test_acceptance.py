"""Acceptance gate: each criterion prints one pass/fail line.

The suite runs once per session; the parametrized tests then report
each criterion separately so a regression names the broken one.  Run
with -s to see the pinned tolerances and measured values.
"""

import pytest

from kalzak.acceptance import ALL_CRITERIA, run_all

IDS = [fn.__name__.replace("criterion_", "") for fn in ALL_CRITERIA]


@pytest.fixture(scope="module")
def gate(request):
    # route the per-criterion lines past pytest's capture so the
    # measured values appear in a plain -v run
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")
    echo = reporter.write_line if reporter else None
    return run_all(echo=echo)


def test_gate_shape(gate):
    assert len(gate) == 10
    assert [r.index for r in gate] == list(range(1, 11))
    assert len({r.name for r in gate}) == 10


@pytest.mark.parametrize("k", range(len(ALL_CRITERIA)), ids=IDS)
def test_criterion(gate, k):
    result = gate[k]
    print(result.line())
    assert result.passed, result.line()
