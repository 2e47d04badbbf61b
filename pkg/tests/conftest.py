import time

import pytest

from otmas import (
    MultilevelParams,
    PolynomialCost,
    make_problem,
    multilevel_solve,
)

_LADDERS = {}


@pytest.fixture(scope="session")
def ladder():
    """Cached multilevel runs shared across the acceptance criteria.

    Returns (results, wall_seconds) for a given study; repeated requests
    reuse the first run so the expensive ladders execute once per session.
    """

    def get(example, p, level_min, level_max, auto_tune=False):
        key = (example, p, level_min, level_max, auto_tune)
        if key not in _LADDERS:
            params = MultilevelParams(level_min=level_min,
                                      level_max=level_max,
                                      auto_tune_theta=auto_tune)
            start = time.perf_counter()
            results = multilevel_solve(make_problem(example),
                                       PolynomialCost(p), params)
            _LADDERS[key] = (results, time.perf_counter() - start)
        return _LADDERS[key]

    return get
