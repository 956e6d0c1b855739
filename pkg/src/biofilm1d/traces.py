"""Time-dependent bulk-liquid concentration traces.

Bulk concentrations are closed-form descriptors rather than callbacks so a
scenario can be serialized and replayed bit for bit.  Three descriptor kinds
are supported: a constant, the sigmoidal arrival ramp used for a species fed
into the reactor at a delay, and a tabulated trace with linear interpolation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError

RAMP_VARIANTS = ("printed", "corrected")


def psi3_ramp(t, t1, psi30, variant="printed"):
    """Delayed sigmoidal arrival of a bulk species.

    Zero up to ``t1``, then ``psi30 * d**10 / (q + d**10)`` with ``d = t - t1``.
    The ``printed`` variant uses the denominator constant ``t1**(10/t1)``, the
    ``corrected`` variant uses ``t1**10``.  Both are continuous at ``t1``,
    strictly increasing past it, and approach ``psi30``.
    """
    if t1 <= 0:
        raise ConfigError(f"ramp arrival time must be > 0, got {t1}")
    if variant not in RAMP_VARIANTS:
        raise ConfigError(f"unknown ramp variant {variant!r}")
    d = t - t1
    if d <= 0.0:
        return 0.0
    if variant == "printed":
        # t1**(10/t1) can underflow for small t1; go through logs so the
        # ratio stays monotone as long as the exponent is representable.
        log_q = (10.0 / t1) * math.log(t1)
    else:
        log_q = 10.0 * math.log(t1)
    expo = log_q - 10.0 * math.log(d)
    if expo > 700.0:
        return 0.0
    return psi30 / (1.0 + math.exp(expo))


@dataclass(frozen=True)
class ConstantTrace:
    """Bulk concentration fixed in time."""

    value: float

    def __call__(self, t):
        return self.value

    def breakpoints(self):
        return ()

    def lower_bound(self, horizon):
        return self.value

    def descriptor(self):
        return f"constant,{self.value!r}"


@dataclass(frozen=True)
class RampTrace:
    """Delayed arrival ramp, see :func:`psi3_ramp`."""

    psi30: float
    t1: float
    variant: str = "printed"

    def __call__(self, t):
        return psi3_ramp(t, self.t1, self.psi30, self.variant)

    def breakpoints(self):
        return (self.t1,)

    def lower_bound(self, horizon):
        return 0.0 if self.psi30 >= 0.0 else self.psi30

    def descriptor(self):
        return f"ramp,{self.psi30!r},{self.t1!r},{self.variant}"


@dataclass(frozen=True)
class TableTrace:
    """Tabulated trace, linear interpolation, clamped outside the knots."""

    times: tuple
    values: tuple

    def __post_init__(self):
        if len(self.times) != len(self.values) or not self.times:
            raise ConfigError("table trace needs matching, nonempty times/values")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ConfigError("table trace times must be strictly increasing")

    def __call__(self, t):
        ts, vs = self.times, self.values
        if t <= ts[0]:
            return vs[0]
        if t >= ts[-1]:
            return vs[-1]
        for k in range(len(ts) - 1):
            if t <= ts[k + 1]:
                w = (t - ts[k]) / (ts[k + 1] - ts[k])
                return vs[k] * (1.0 - w) + vs[k + 1] * w
        return vs[-1]

    def breakpoints(self):
        return self.times

    def lower_bound(self, horizon):
        return min(self.values)

    def descriptor(self):
        pairs = ";".join(f"{t!r}:{v!r}" for t, v in zip(self.times, self.values))
        return f"table,{pairs}"


def parse_descriptor(text):
    """Build a trace from its ``kind,args...`` descriptor string."""
    parts = [p.strip() for p in text.split(",")]
    kind = parts[0]
    try:
        if kind == "constant":
            return ConstantTrace(float(parts[1]))
        if kind == "ramp":
            variant = parts[3] if len(parts) > 3 else "printed"
            return RampTrace(float(parts[1]), float(parts[2]), variant)
        if kind == "table":
            times, values = [], []
            body = text.split(",", 1)[1]
            for item in body.split(";"):
                a, b = item.split(":")
                times.append(float(a))
                values.append(float(b))
            return TableTrace(tuple(times), tuple(values))
    except (IndexError, ValueError) as exc:
        raise ConfigError(f"bad trace descriptor {text!r}: {exc}") from exc
    raise ConfigError(f"unknown trace kind {kind!r}")


@dataclass(frozen=True)
class BulkTraces:
    """Bulk planktonic and substrate concentrations over time.

    ``psi_star`` has one descriptor per species, ``s_star`` one per substrate.
    """

    psi_star: tuple
    s_star: tuple

    def psi(self, t):
        """Planktonic bulk concentrations at time ``t`` as an array-friendly list."""
        return [tr(t) for tr in self.psi_star]

    def s(self, t):
        return [tr(t) for tr in self.s_star]

    def breakpoints(self):
        """Times where a descriptor changes analytic form (forced step times)."""
        pts = set()
        for tr in self.psi_star + self.s_star:
            pts.update(tr.breakpoints())
        return tuple(sorted(pts))
