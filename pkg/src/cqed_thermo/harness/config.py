"""Run configuration: a flat JSON object with strict validation.

Physical inputs are ordinary frequencies in MHz (the omega/2pi values) and
are converted to rad/us on use. ``dt_ns = null`` selects the automatic step:
1 ns, refined by an integer factor r until dt*gamma_d <= rate_cap. In that
mode the effective record stride is ``record_stride * r`` so the recorded
time grid does not depend on the measurement strength.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

from ..homodyne import DEFAULT_RATE_CAP, measurement_rate
from ..protocol import mhz
from ..trajectory import Integrator, n_grid_steps

NOMINAL_DT_US = 1e-3


class ConfigError(ValueError):
    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


@dataclass(frozen=True)
class RunConfig:
    omega0_mhz: float = 4000.0
    delta_omega_mhz: float = 400.0
    omega_rabi_mhz: float = 1.0
    chi_mhz: float = -0.5
    kappa_mhz: float = 10.0
    nbar: float = 0.4
    beta_omega0: float = 1.0
    gamma1_over_kappa: float = 0.0
    dt_ns: float | None = None
    tau_us: float = 2.4
    quench_time_us: float | None = None
    trajectories: int = 1000
    record_stride: int = 1
    integrator: str = "povm"
    master_seed: int = 0
    output_dir: str = "out"
    rate_cap: float = DEFAULT_RATE_CAP

    def __post_init__(self):
        _validate(self)

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in dataclasses.fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        return cls(**data)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def with_overrides(self, **kw) -> "RunConfig":
        kw = {k: v for k, v in kw.items() if v is not None}
        return dataclasses.replace(self, **kw)

    # derived quantities -------------------------------------------------

    @property
    def omega0(self) -> float:
        return mhz(self.omega0_mhz)

    @property
    def kappa(self) -> float:
        return mhz(self.kappa_mhz)

    @property
    def gamma_d(self) -> float:
        return measurement_rate(mhz(self.chi_mhz), self.kappa, self.nbar)

    @property
    def gamma1(self) -> float:
        return self.gamma1_over_kappa * self.kappa

    @property
    def beta(self) -> float:
        return self.beta_omega0 / self.omega0

    @property
    def refinement(self) -> int:
        """Integer subdivision of the nominal 1 ns step (auto-dt mode only)."""
        if self.dt_ns is not None or self.gamma_d == 0:
            return 1
        return max(1, math.ceil(NOMINAL_DT_US * self.gamma_d / self.rate_cap - 1e-12))

    @property
    def dt(self) -> float:
        if self.dt_ns is not None:
            return self.dt_ns * 1e-3
        return NOMINAL_DT_US / self.refinement

    @property
    def n_steps(self) -> int:
        return n_grid_steps(self.tau_us, self.dt)

    @property
    def effective_stride(self) -> int:
        return self.record_stride * self.refinement

    def derived(self) -> dict:
        return {
            "gamma_d_rad_per_us": self.gamma_d,
            "gamma_d_mhz": self.gamma_d / (2 * math.pi),
            "measurement_time_us": 1 / (2 * self.gamma_d) if self.gamma_d > 0 else None,
            "dt_us": self.dt,
            "n_steps": self.n_steps,
            "effective_record_stride": self.effective_stride,
            "beta_us": self.beta,
            "gamma1_rad_per_us": self.gamma1,
        }


def _number(cfg, name, *, minimum=None, strict=False, allow_none=False):
    v = getattr(cfg, name)
    if v is None and allow_none:
        return
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        raise ConfigError(name, f"expected a finite number, got {v!r}")
    if minimum is not None and (v < minimum or (strict and v == minimum)):
        raise ConfigError(name, f"must be {'>' if strict else '>='} {minimum}, got {v}")


def _integer(cfg, name, minimum):
    v = getattr(cfg, name)
    if isinstance(v, bool) or not isinstance(v, int) or v < minimum:
        raise ConfigError(name, f"expected an integer >= {minimum}, got {v!r}")


def _validate(cfg: RunConfig):
    _number(cfg, "omega0_mhz", minimum=0, strict=True)
    for name in ("delta_omega_mhz", "omega_rabi_mhz", "chi_mhz"):
        _number(cfg, name)
    _number(cfg, "kappa_mhz", minimum=0, strict=True)
    _number(cfg, "nbar", minimum=0)
    _number(cfg, "beta_omega0", minimum=0, strict=True)
    _number(cfg, "gamma1_over_kappa", minimum=0)
    _number(cfg, "dt_ns", minimum=0, strict=True, allow_none=True)
    _number(cfg, "tau_us", minimum=0, strict=True)
    _number(cfg, "quench_time_us", minimum=0, strict=True, allow_none=True)
    _number(cfg, "rate_cap", minimum=0, strict=True)
    _integer(cfg, "trajectories", 1)
    _integer(cfg, "record_stride", 1)
    _integer(cfg, "master_seed", 0)
    if cfg.master_seed >= 2**64:
        raise ConfigError("master_seed", "must fit in 64 bits")
    if not isinstance(cfg.output_dir, str) or not cfg.output_dir:
        raise ConfigError("output_dir", "expected a non-empty string")
    try:
        Integrator(cfg.integrator)
    except ValueError:
        raise ConfigError("integrator", f"expected 'povm' or 'sme', got {cfg.integrator!r}")
    tq = cfg.quench_time_us if cfg.quench_time_us is not None else cfg.tau_us / 2
    if not 0 < tq < cfg.tau_us:
        raise ConfigError("quench_time_us", "must lie strictly inside (0, tau_us)")

    if cfg.dt_ns is not None and cfg.gamma_d * cfg.dt > cfg.rate_cap:
        raise ConfigError(
            "dt_ns",
            f"dt*gamma_d = {cfg.gamma_d * cfg.dt:.4g} exceeds rate_cap {cfg.rate_cap}; "
            f"need dt_ns <= {1e3 * cfg.rate_cap / cfg.gamma_d:.4g} (or null for auto)")
    try:
        n = cfg.n_steps
    except ValueError as exc:
        raise ConfigError("dt_ns" if cfg.dt_ns is not None else "tau_us", str(exc))
    if n < 2:
        raise ConfigError("tau_us", "protocol needs at least two steps")
    if n % cfg.effective_stride:
        raise ConfigError("record_stride", f"must divide the {n} integration steps")


def parse_config(path) -> RunConfig:
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError("<root>", f"invalid JSON: {exc}") from exc
    return RunConfig.from_dict(data)


def dump_config(cfg: RunConfig, path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n")
