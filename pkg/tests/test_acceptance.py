"""The ten acceptance criteria at their stated tolerances.

The whole run takes about 20 minutes on one core; each criterion gets its
own test so the summary shows one pass/fail line per criterion.
"""

import pytest

from oseen_tp import acceptance


@pytest.fixture(scope="module")
def checks(request):
    out = {c.number: c for c in acceptance.run_all(seed=0)}
    # printed in the terminal summary by conftest
    request.config.acceptance_lines = [out[k].line() for k in sorted(out)]
    return out


@pytest.mark.parametrize("number", range(1, 11))
def test_criterion(checks, number):
    chk = checks[number]
    print(chk.line())
    assert chk.passed, chk.line()
