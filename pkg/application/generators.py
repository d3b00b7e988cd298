"""Seeded random instance families"""
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from application.instance_model import Instance, prepare, transitive_closure
from config.constants import HARNESS_CONFIG


class Family(str, Enum):
    UNIFORM = "uniform"
    P_LE_R = "p_le_r"
    TWO_JOB = "two_job"
    CHAINS = "chains"
    ANTICHAIN = "antichain"


class GeneratorConfig(BaseModel):
    """Parameters of one random instance; the same seed gives the same instance"""
    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=1)
    seed: int = Field(default=0, ge=0, lt=2 ** 64)
    p_max: int = Field(default=HARNESS_CONFIG['p_max'], ge=1)
    r_max: int = Field(default=HARNESS_CONFIG['r_max'], ge=1)
    w_max: int = Field(default=HARNESS_CONFIG['w_max'], ge=1)
    prec_density: float = Field(default=HARNESS_CONFIG['prec_density'], ge=0.0, le=1.0)
    family: Family = Family.UNIFORM
    M: int = Field(default=10, ge=1)

    @model_validator(mode='after')
    def _example_size(self):
        if self.family is Family.TWO_JOB and self.n != 2:
            raise ValueError("the two-job example family needs n=2")
        return self


def two_job_example(M: int) -> Instance:
    """p=(1, M), r=(1, 0), w=(M, 0): LP order runs the long job first"""
    return Instance.from_lists([1, M], [1, 0], [M, 0])


def _random_dag(config: GeneratorConfig, rng: np.random.Generator) -> list[tuple[int, int]]:
    n = config.n
    if config.family is Family.ANTICHAIN:
        return []
    if config.family is Family.CHAINS:
        chains = int(rng.integers(1, max(1, n // 2) + 1))
        label = rng.integers(0, chains, size=n)
        pairs = []
        for c in range(chains):
            members = np.flatnonzero(label == c).tolist()
            pairs.extend(zip(members, members[1:]))
        return pairs
    upper = np.triu(rng.random((n, n)) < config.prec_density, k=1)
    return [(int(j), int(k)) for j, k in zip(*np.nonzero(upper))]


def generate(config: GeneratorConfig) -> Instance:
    """Validated, release-normalized random instance for the configured family"""
    if config.family is Family.TWO_JOB:
        return prepare(two_job_example(config.M))
    rng = np.random.default_rng(config.seed)
    n = config.n
    p = rng.integers(1, config.p_max + 1, size=n)
    w = rng.integers(0, config.w_max + 1, size=n)
    if config.family is Family.P_LE_R:
        r = p + rng.integers(0, config.r_max + 1, size=n)
    else:
        r = rng.integers(0, config.r_max + 1, size=n)
    prec = transitive_closure(_random_dag(config, rng), n)
    instance = Instance.from_lists([int(x) for x in p], [int(x) for x in r], [int(x) for x in w], prec)
    return prepare(instance)
