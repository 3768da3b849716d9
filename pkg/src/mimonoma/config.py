"""System configuration and its plain ``key = value`` text form."""

from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .allocation import RateTargets, feasibility_range, snr_coupled_target
from .analytics import db_to_linear
from .exceptions import ConfigurationError

SCHEMES = ("noma", "zf-noma", "sa-noma", "oma")
DETECTORS = ("zf", "qr")

# keys that may appear in a manifest but are not part of the configuration
METADATA_KEYS = ("artifact_version", "timestamp")
METADATA_PREFIXES = ("output.",)


def _floats(value):
    if isinstance(value, str):
        parts = [p for p in value.replace(" ", "").split(",") if p]
        return tuple(float(p) for p in parts)
    return tuple(float(v) for v in np.atleast_1d(value))


def db_grid(start, stop, step):
    if step <= 0:
        raise ConfigurationError(f"SNR step must be positive, got {step}")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(start + i * step) for i in range(count))


@dataclass(frozen=True)
class SystemConfig:
    m: int = 3
    n: int = 3
    rates_u1: tuple = (1.0,)
    rates_u2: tuple = (2.0,)
    policy: int = 1
    target_multiplier: float | None = 2.0
    target_fixed: tuple | None = None
    rho_db: tuple = field(default_factory=lambda: db_grid(0, 50, 5))
    trials: int = 1_000_000
    seed: int = 2016
    scheme: str = "noma"
    detector_u1: str = "zf"

    def __post_init__(self):
        for name in ("m", "n", "policy", "trials", "seed"):
            value = getattr(self, name)
            if isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, (int, np.integer)):
                raise ConfigurationError(f"{name} must be an integer, got {value!r}")
            object.__setattr__(self, name, int(value))
        if self.n < 1 or self.m < self.n:
            raise ConfigurationError(f"need M >= N >= 1, got M={self.m}, N={self.n}")
        if self.trials < 1:
            raise ConfigurationError("trials must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigurationError("seed must be a 64-bit unsigned integer")
        if self.policy not in (1, 2):
            raise ConfigurationError(f"policy must be 1 or 2, got {self.policy}")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.detector_u1 not in DETECTORS:
            raise ConfigurationError(f"detector_u1 must be one of {DETECTORS}, got {self.detector_u1!r}")
        if self.scheme in ("zf-noma", "sa-noma") and self.m != self.n:
            raise ConfigurationError(f"scheme {self.scheme} requires M == N, got M={self.m}, N={self.n}")

        rates = RateTargets.broadcast(_floats(self.rates_u1), _floats(self.rates_u2), self.n)
        object.__setattr__(self, "rates_u1", rates.r1)
        object.__setattr__(self, "rates_u2", rates.r2)

        grid = _floats(self.rho_db)
        if not grid:
            raise ConfigurationError("SNR grid is empty")
        if not all(np.isfinite(grid)) or np.any(np.diff(grid) <= 0):
            raise ConfigurationError("SNR grid must be finite and strictly increasing")
        object.__setattr__(self, "rho_db", grid)

        if self.target_fixed is not None:
            fixed = _floats(self.target_fixed)
            if len(fixed) == 1:
                fixed = fixed * self.n
            if len(fixed) != self.n:
                raise ConfigurationError(f"expected 1 or {self.n} fixed targets")
            object.__setattr__(self, "target_fixed", fixed)
        if self.target_multiplier is not None:
            object.__setattr__(self, "target_multiplier", float(self.target_multiplier))

        if self.policy == 1:
            self._check_targets()

    def _check_targets(self):
        if (self.target_fixed is None) == (self.target_multiplier is None):
            raise ConfigurationError("policy 1 needs exactly one of target_multiplier or target_fixed")
        if self.target_multiplier is not None and not self.target_multiplier > 1:
            raise ConfigurationError(f"target multiplier must exceed 1, got {self.target_multiplier}")
        for db, rho in zip(self.rho_db, self.rho_linear):
            target = self.user1_target(rho)
            lower, _ = feasibility_range(self.rates.eps1, rho)
            if np.any(target >= 1) or np.any(target <= lower):
                raise ConfigurationError(
                    f"policy-I target {np.round(target, 6).tolist()} outside the feasible range "
                    f"(1 - exp(-eps/rho), 1) = ({np.round(lower, 6).tolist()}, 1) at {db} dB"
                )

    @property
    def rates(self):
        return RateTargets(self.rates_u1, self.rates_u2)

    @property
    def rho_linear(self):
        return db_to_linear(self.rho_db)

    def user1_target(self, rho):
        """Per-layer policy-I user-1 outage target at linear SNR ``rho``."""
        if self.target_fixed is not None:
            return np.asarray(self.target_fixed)
        return snr_coupled_target(self.rates.eps1, rho, self.target_multiplier)

    def replace(self, **changes):
        return replace(self, **changes)

    # text form ------------------------------------------------------------

    def to_items(self):
        items = asdict(self)
        out = []
        for key, value in items.items():
            if value is None:
                continue
            if isinstance(value, tuple):
                value = ",".join(repr(float(v)) for v in value)
            elif isinstance(value, float):
                value = repr(value)
            out.append((key, str(value)))
        return out

    def to_text(self):
        return "".join(f"{k} = {v}\n" for k, v in self.to_items())

    @classmethod
    def from_mapping(cls, mapping):
        known = set(cls.__dataclass_fields__)
        kwargs = {}
        grid = {}
        for key, value in mapping.items():
            key = key.strip().replace("-", "_")
            if key in METADATA_KEYS or key.startswith(METADATA_PREFIXES):
                continue
            if key in ("rho_db_start", "rho_db_stop", "rho_db_step"):
                grid[key] = float(value)
                continue
            if key not in known:
                raise ConfigurationError(f"unknown configuration key {key!r}")
            kwargs[key] = value
        if grid:
            if "rho_db" in kwargs:
                raise ConfigurationError("give either rho_db or rho_db_start/stop/step, not both")
            default = cls.__dataclass_fields__["rho_db"].default_factory()
            kwargs["rho_db"] = db_grid(
                grid.get("rho_db_start", default[0]),
                grid.get("rho_db_stop", default[-1]),
                grid.get("rho_db_step", 5.0),
            )
        try:
            for key in ("m", "n", "policy", "trials", "seed"):
                if key in kwargs and isinstance(kwargs[key], str):
                    kwargs[key] = int(kwargs[key])
            if isinstance(kwargs.get("target_multiplier"), str):
                kwargs["target_multiplier"] = float(kwargs["target_multiplier"])
        except ValueError as exc:
            raise ConfigurationError(str(exc)) from None
        if "target_fixed" in kwargs and "target_multiplier" not in kwargs:
            kwargs["target_multiplier"] = None
        try:
            return cls(**kwargs)
        except ValueError as exc:
            if isinstance(exc, ConfigurationError):
                raise
            raise ConfigurationError(str(exc)) from None


def parse_key_values(text):
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = value.strip()
    return out


def load_config(path, **overrides):
    with open(path, encoding="utf-8") as fh:
        mapping = parse_key_values(fh.read())
    mapping.update({k: v for k, v in overrides.items() if v is not None})
    return SystemConfig.from_mapping(mapping)
