import re
from fractions import Fraction
from pathlib import Path

import pytest

from otclass.oracle import read_fixture

RATIONAL = re.compile(r"-?\d+/\d+")
FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def _decode(v):
    if isinstance(v, str) and RATIONAL.fullmatch(v):
        return Fraction(v)
    if isinstance(v, list):
        return [_decode(x) for x in v]
    if isinstance(v, dict):
        return {k: _decode(x) for k, x in v.items()}
    return v


@pytest.fixture
def golden():
    def load(name):
        rec = read_fixture(FIXTURES / f"{name}.json")
        assert rec["derived_example_id"] == name
        return _decode(rec["instance"]), _decode(rec["oracle_result"])

    return load


def example_plans():
    """The four plans on three uniform atoms at 0, 1, 2 and targets 0, 1."""
    from otclass import make_plan

    rows = {
        "f": [["1/6", "1/6"], [0, "1/3"], [0, "1/3"]],
        "g": [[0, "1/3"], ["1/6", "1/6"], [0, "1/3"]],
        "h": [["3/30", "7/30"], ["2/30", "8/30"], [0, "1/3"]],
        "k": [["1/30", "9/30"], ["4/30", "6/30"], [0, "1/3"]],
    }
    return {name: make_plan([0, 1, 2], [0, 1], r, mode="rational") for name, r in rows.items()}


@pytest.fixture
def plans():
    return example_plans()
