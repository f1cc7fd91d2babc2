import numpy as np
import pytest

from proxlab.func_model import (
    FunctionDescriptor,
    GridSpec,
    QuadraticFunction,
    builtin_descriptor,
    sample_to_grid,
)

STANDARD_SPEC = GridSpec.make(-3.0, 3.0, 1201)


def quad_descriptor(*diag):
    if len(diag) == 1:
        return FunctionDescriptor("quadratic", QuadraticFunction(((diag[0],),)))
    return FunctionDescriptor(
        "quadratic",
        QuadraticFunction(tuple(tuple(row) for row in np.diag(diag))))


@pytest.fixture(scope="session")
def spec():
    return STANDARD_SPEC


@pytest.fixture(scope="session")
def fk05(spec):
    return sample_to_grid(builtin_descriptor("fk", eps=0.5), spec, label="fk05")


@pytest.fixture(scope="session")
def fk03(spec):
    return sample_to_grid(builtin_descriptor("fk", eps=0.3), spec, label="fk03")


@pytest.fixture(scope="session")
def fk07(spec):
    return sample_to_grid(builtin_descriptor("fk", eps=0.7), spec, label="fk07")


@pytest.fixture(scope="session")
def double_well(spec):
    return sample_to_grid(builtin_descriptor("double_well"), spec, label="dw")


@pytest.fixture(scope="session")
def section10_g(spec):
    return sample_to_grid(builtin_descriptor("section10_g"), spec, label="g10")


@pytest.fixture(scope="session")
def q1(spec):
    return sample_to_grid(quad_descriptor(1.0), spec, label="q1")


@pytest.fixture(scope="session")
def q2(spec):
    return sample_to_grid(quad_descriptor(2.0), spec, label="q2")


@pytest.fixture(scope="session")
def qm1(spec):
    return sample_to_grid(builtin_descriptor("neg_half_sq"), spec, label="qm1")


@pytest.fixture(scope="session")
def indicator0(spec):
    return sample_to_grid(builtin_descriptor("indicator_point", point=0.0),
                          spec, label="ind0")
