"""JSON documents for instances and schedules"""
import hashlib
import json
from pathlib import Path
from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from application.errors import InstanceValidationError
from application.instance_model import Instance, Schedule, transitive_closure


class JobSpec(BaseModel):
    model_config = ConfigDict(extra='forbid')

    p: int = Field(ge=0)
    r: int = Field(ge=0)
    w: int = Field(ge=0)


class InstanceFile(BaseModel):
    """{"jobs": [{"p", "r", "w"}, ...], "prec": [[j, k], ...]}; job ids are positions"""
    model_config = ConfigDict(extra='forbid')

    jobs: list[JobSpec]
    prec: list[tuple[int, int]] = Field(default_factory=list)


def decimal_string(value: float, digits: int = 9) -> str:
    """Fixed-point decimal text without trailing zeros ("20", "0.5"); tiny magnitudes use exponent form"""
    if value and abs(value) < 10 ** -digits:
        return f"{value:.{digits}g}"
    text = f"{value:.{digits}f}".rstrip("0").rstrip(".")
    return "0" if text in ("", "-0") else text


def parse_instance(document: Union[str, dict]) -> Instance:
    """
    Build an Instance from JSON text or a decoded dict, closing precedence

    Raises:
        InstanceValidationError: schema errors, unknown job ids or a cycle
    """
    try:
        if isinstance(document, str):
            spec = InstanceFile.model_validate_json(document)
        else:
            spec = InstanceFile.model_validate(document)
    except ValidationError as e:
        raise InstanceValidationError(f"Invalid instance document: {e.errors()[0]['msg']}",
                                      [str(err) for err in e.errors()]) from e
    n = len(spec.jobs)
    for j, k in spec.prec:
        if not (0 <= j < n and 0 <= k < n):
            raise InstanceValidationError(f"precedence ({j},{k}) references an unknown job")
    prec = transitive_closure(spec.prec, n)
    return Instance.from_lists([job.p for job in spec.jobs], [job.r for job in spec.jobs],
                               [job.w for job in spec.jobs], prec)


def load_instance(path: Union[str, Path]) -> Instance:
    with open(path, 'r') as f:
        return parse_instance(f.read())


def instance_to_json(instance: Instance) -> dict:
    """Canonical document; integral values are written as ints"""
    def num(x: float):
        return int(x) if float(x).is_integer() else float(x)

    return {
        'jobs': [{'p': num(job.p), 'r': num(job.r), 'w': num(job.w)} for job in instance.jobs],
        'prec': [list(pair) for pair in sorted(instance.prec)],
    }


def dump_instance(instance: Instance, path: Optional[Union[str, Path]] = None) -> str:
    text = json.dumps(instance_to_json(instance), indent=2)
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def instance_digest(instance: Instance) -> str:
    """SHA-256 of the canonical compact JSON serialization"""
    canonical = json.dumps(instance_to_json(instance), sort_keys=True, separators=(',', ':'))
    return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


def schedule_to_json(schedule: Schedule, cost: float) -> dict:
    return {
        'start': [decimal_string(s) for s in schedule.start],
        'cost': decimal_string(cost),
    }
