"""One test per acceptance criterion, each at full size and tolerance."""

import pytest

from verinfer import acceptance

from .conftest import RESULTS


@pytest.mark.parametrize("number", sorted(acceptance.CRITERIA))
def test_criterion(number):
    res = acceptance.run(number)
    RESULTS.append(res)
    print(res.line())
    assert res.ok, res.line()
