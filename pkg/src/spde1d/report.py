"""Uniform pass/fail reporting for numerical inequality checks."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field


def config_hash(config) -> str:
    """Stable short hash of a config-like object (dict / dataclass repr)."""
    if config is None:
        return ""
    if hasattr(config, "to_dict"):
        payload = config.to_dict()
    elif isinstance(config, dict):
        payload = config
    else:
        payload = repr(config)
    text = json.dumps(payload, sort_keys=True, default=repr)
    return hashlib.sha256(text.encode()).hexdigest()[:12]


@dataclass(frozen=True)
class CheckReport:
    """Outcome of one inequality check: passed iff lhs <= rhs*(1+rel) + abs."""

    name: str
    passed: bool
    lhs: float
    rhs: float
    margin: float
    samples: int = 1
    tolerances: dict = field(default_factory=dict)
    config_hash: str = ""
    notes: str = ""

    def __str__(self) -> str:
        status = "pass" if self.passed else "FAIL"
        return (
            f"[{status}] {self.name}: lhs={self.lhs:.6g} rhs={self.rhs:.6g} "
            f"margin={self.margin:.3g} (samples={self.samples})"
        )


def make_report(
    name: str,
    lhs: float,
    rhs: float,
    rel_tol: float = 0.0,
    abs_tol: float = 0.0,
    samples: int = 1,
    config=None,
    notes: str = "",
) -> CheckReport:
    threshold = rhs + rel_tol * abs(rhs) + abs_tol
    return CheckReport(
        name=name,
        passed=bool(lhs <= threshold),
        lhs=float(lhs),
        rhs=float(rhs),
        margin=float(threshold - lhs),
        samples=samples,
        tolerances={"rel": rel_tol, "abs": abs_tol},
        config_hash=config_hash(config),
        notes=notes,
    )
