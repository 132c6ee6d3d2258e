"""One test per acceptance criterion; each prints its pass/fail line with the measured values."""
import pytest

from shearstab import acceptance

from conftest import CRITERION_LINES


@pytest.mark.parametrize("number", sorted(acceptance.CHECKS))
def test_criterion(number):
    check = acceptance.run_check(number)
    line = check.line()
    print(line)
    CRITERION_LINES.append(line)
    assert check.passed, line
