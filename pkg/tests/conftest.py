from fractions import Fraction

import numpy as np
import pytest
from hypothesis import strategies as st

from ea_lab.metric import builtin_metric

BUILTINS = ("sl2", "sol", "euc", "sol_euc")


def rationals(max_num=20, max_den=9):
    return st.builds(Fraction, st.integers(-max_num, max_num), st.integers(1, max_den))


def rational_vectors(dim, **kw):
    return st.tuples(*[rationals(**kw)] * dim)


def random_rational_vector(rng, dim, bound=9):
    return tuple(Fraction(int(a), int(b)) for a, b in zip(rng.integers(-bound, bound + 1, dim),
                                                         rng.integers(1, bound + 1, dim)))


@pytest.fixture(scope="session")
def metrics():
    return {name: builtin_metric(name) for name in BUILTINS}


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# acceptance results collected by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"criterion {key}: {'PASS' if ok else 'FAIL'}  {detail}")


def validate_schema(instance, name):
    """Validate against a shipped schema, resolving references between schema files."""
    import jsonschema
    from referencing import Registry, Resource

    from ea_lab.schemas import load_schema

    names = ("algebra", "metric", "trajectory")
    registry = Registry().with_resources(
        (f"{n}.schema.json", Resource.from_contents(load_schema(n))) for n in names)
    schema = load_schema(name)
    jsonschema.validators.validator_for(schema)(schema, registry=registry).validate(instance)
