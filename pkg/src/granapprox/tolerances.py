"""Numerical tolerance knobs.

Every tolerance can be overridden process-wide through a ``GRANAPPROX_*``
environment variable (read once at import), or per run through the
``tolerances`` section of a JSON config.
"""

import os
from dataclasses import dataclass, fields


def _env_float(name, default):
    raw = os.environ.get(name)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise ValueError(f"environment variable {name} must be a float, got {raw!r}")


#: exact algebraic identities of the connectives
EPS_LAW = _env_float("GRANAPPROX_EPS_LAW", 1e-9)
#: isomorphism inverse round-trip (the inverse may be numerical)
EPS_ISO = _env_float("GRANAPPROX_EPS_ISO", 1e-7)
#: degree equality for relations and granules (closed-form arithmetic)
EPS_REL = _env_float("GRANAPPROX_EPS_REL", 1e-9)
#: solver feasibility slack
EPS_FEAS = _env_float("GRANAPPROX_EPS_FEAS", 1e-8)
#: KKT stationarity residual of the quadratic solver
EPS_KKT = _env_float("GRANAPPROX_EPS_KKT", 1e-6)


@dataclass(frozen=True)
class Tolerances:
    """Bundle of tolerances threaded through the pipeline and CLI."""

    law: float = EPS_LAW
    iso: float = EPS_ISO
    rel: float = EPS_REL
    feas: float = EPS_FEAS
    kkt: float = EPS_KKT

    @classmethod
    def from_dict(cls, overrides):
        """Build from a config mapping; unknown keys raise ``ValueError``."""
        known = {f.name for f in fields(cls)}
        bad = set(overrides) - known
        if bad:
            raise ValueError(f"unknown tolerance keys: {sorted(bad)}")
        vals = {k: float(v) for k, v in overrides.items()}
        for k, v in vals.items():
            if not v > 0:
                raise ValueError(f"tolerance {k!r} must be positive, got {v}")
        return cls(**vals)
