"""Shared fixtures for the prec-sched test suite"""
import pytest

from application.generators import Family, GeneratorConfig, generate, two_job_example
from application.instance_model import Instance, prepare


@pytest.fixture
def two_job() -> Instance:
    """p=(1,10), r=(1,0), w=(10,0): optimum 20, LP order gives 110"""
    return prepare(two_job_example(10))


@pytest.fixture
def make_instance():
    """Factory for seeded random instances"""
    def make(n: int, seed: int, family: Family = Family.UNIFORM, **overrides) -> Instance:
        return generate(GeneratorConfig(n=n, seed=seed, family=family, **overrides))
    return make
