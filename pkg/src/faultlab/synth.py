"""Synthetic event-bearing sensor data.

Two channels are modeled. Box temperature follows a diurnal sinusoid (minimum
at 00:00 UTC, maximum at 12:00) with Gaussian sensor noise and a depression
during rainfall events: an occlusion factor ramps 0 -> 1 across the event and
decays back to 0 over a recovery span. Soil moisture sits at a noisy baseline
and responds to each event with a sudden rise (within one sample) to
spike_gain * rain_mm above baseline, holding through the event and decaying
exponentially afterwards; values are clamped to [0, 1].

All randomness is NumPy PCG64; a seed reproduces a series bit-identically,
and the noise-free component does not depend on the seed at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ConfigError, DataError
from .series import EventWindow, Modality, Series

__all__ = [
    "BoxTempProfile",
    "SoilMoistureProfile",
    "ScheduledEvent",
    "DeploymentSpec",
    "gen_box_temperature",
    "gen_soil_moisture",
    "gen_deployment",
    "make_event_schedule",
]

DAY_S = 86400.0


@dataclass(frozen=True)
class BoxTempProfile:
    """Diurnal temperature shape in degrees C."""

    mean_c: float = 25.0
    amplitude_c: float = 6.0
    noise_sigma_c: float = 0.3
    event_depression_c: float = 4.0
    recovery_s: float = 21600.0

    def __post_init__(self):
        if self.noise_sigma_c < 0 or self.recovery_s < 0:
            raise ConfigError("noise_sigma_c and recovery_s must be >= 0")


@dataclass(frozen=True)
class SoilMoistureProfile:
    """Soil-moisture response shape in volumetric water content (0..1)."""

    baseline_vwc: float = 0.20
    baseline_noise_vwc: float = 0.003
    spike_gain_vwc_per_mm: float = 0.015
    decay_tau_s: float = 172800.0

    def __post_init__(self):
        if not 0 <= self.baseline_vwc <= 1:
            raise ConfigError(f"baseline_vwc must lie in [0, 1], got {self.baseline_vwc}")
        if self.baseline_noise_vwc < 0:
            raise ConfigError("baseline_noise_vwc must be >= 0")
        if self.decay_tau_s <= 0:
            raise ConfigError("decay_tau_s must be > 0")


@dataclass(frozen=True)
class ScheduledEvent:
    """One rainfall event: its window plus the rain depth driving the response."""

    window: EventWindow
    rain_mm: float

    def __post_init__(self):
        if not (math.isfinite(self.rain_mm) and self.rain_mm > 0):
            raise ConfigError(f"rain_mm must be > 0, got {self.rain_mm}")


@dataclass(frozen=True)
class DeploymentSpec:
    """A multi-node site sharing one event schedule.

    response_scales multiply the soil spike gain per node; lags shift each
    node's soil response in time. Box temperature shares the site profile
    and differs across nodes only in sensor noise.
    """

    node_ids: tuple[str, ...]
    response_scales: tuple[float, ...]
    lags_s: tuple[float, ...]
    schedule: tuple[ScheduledEvent, ...]
    seed: int
    days: int = 90
    interval_s: float = 600.0

    def __post_init__(self):
        object.__setattr__(self, "node_ids", tuple(self.node_ids))
        object.__setattr__(self, "response_scales", tuple(self.response_scales))
        object.__setattr__(self, "lags_s", tuple(self.lags_s))
        object.__setattr__(self, "schedule", tuple(self.schedule))
        if not self.node_ids:
            raise ConfigError("deployment needs at least one node")
        if len(set(self.node_ids)) != len(self.node_ids):
            raise ConfigError("node ids must be distinct")
        if len(self.response_scales) != len(self.node_ids) or \
                len(self.lags_s) != len(self.node_ids):
            raise ConfigError("response_scales and lags_s must match node_ids in length")
        if any(sc < 0 or not math.isfinite(sc) for sc in self.response_scales):
            raise ConfigError("response scales must be finite and >= 0")


def _check_grid(days: int, interval_s: float) -> int:
    if not (isinstance(days, int) and days >= 1):
        raise ConfigError(f"days must be an integer >= 1, got {days!r}")
    if not (interval_s > 0 and math.isfinite(interval_s)):
        raise ConfigError(f"interval_s must be > 0, got {interval_s}")
    per_day = DAY_S / interval_s
    if abs(per_day - round(per_day)) > 1e-9:
        raise ConfigError(f"interval_s must divide 24 h, got {interval_s}")
    return days * int(round(per_day))


def _windows(events: Sequence[ScheduledEvent] | Sequence[EventWindow]) -> list[tuple[EventWindow, float]]:
    out = []
    for ev in events:
        if isinstance(ev, ScheduledEvent):
            out.append((ev.window, ev.rain_mm))
        elif isinstance(ev, EventWindow):
            out.append((ev, 0.0))
        else:
            raise ConfigError(f"expected ScheduledEvent or EventWindow, got {type(ev).__name__}")
    return out


def _occlusion(t: np.ndarray, window: EventWindow, recovery_s: float) -> np.ndarray:
    """Ramp 0 -> 1 across the event, linear decay to 0 over recovery_s after it."""
    occ = np.zeros_like(t)
    rising = (t >= window.start) & (t < window.end)
    occ[rising] = (t[rising] - window.start) / window.duration
    if recovery_s > 0:
        falling = (t >= window.end) & (t < window.end + recovery_s)
        occ[falling] = 1.0 - (t[falling] - window.end) / recovery_s
    return occ


def gen_box_temperature(days: int, profile: BoxTempProfile,
                        events: Sequence[ScheduledEvent] | Sequence[EventWindow],
                        interval_s: float = 600.0, seed=0,
                        node_id: str = "node1", start_time: float = 0.0) -> Series:
    """Generate a box-temperature series starting at `start_time` (UTC s)."""
    n = _check_grid(days, interval_s)
    t = start_time + np.arange(n) * float(interval_s)
    phase = 2.0 * np.pi * np.mod(t, DAY_S) / DAY_S - np.pi / 2.0
    base = profile.mean_c + profile.amplitude_c * np.sin(phase)
    occ = np.zeros_like(t)
    for window, _ in _windows(events):
        occ = np.maximum(occ, _occlusion(t, window, profile.recovery_s))
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, profile.noise_sigma_c, size=n)
    values = base + noise - profile.event_depression_c * np.clip(occ, 0.0, 1.0)
    return Series(node_id, Modality.BOX_TEMP, start_time, float(interval_s), values)


def gen_soil_moisture(days: int, profile: SoilMoistureProfile,
                      events: Sequence[ScheduledEvent],
                      interval_s: float = 600.0, seed=0,
                      node_id: str = "node1", start_time: float = 0.0) -> Series:
    """Generate a soil-moisture series starting at `start_time` (UTC s).

    Each event lifts the signal by spike_gain * rain_mm from its first sample
    on, holds the excess through the event, and decays it exponentially with
    the profile's time constant afterwards. Responses of overlapping decays
    add; the final value is clamped to [0, 1].
    """
    n = _check_grid(days, interval_s)
    t = start_time + np.arange(n) * float(interval_s)
    excess = np.zeros_like(t)
    for window, rain_mm in _windows(events):
        amp = profile.spike_gain_vwc_per_mm * rain_mm
        if amp == 0.0:
            continue
        after = t > window.end
        active = (t >= window.start) & ~after
        contrib = np.zeros_like(t)
        contrib[active] = amp
        contrib[after] = amp * np.exp(-(t[after] - window.end) / profile.decay_tau_s)
        excess += contrib
    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, profile.baseline_noise_vwc, size=n)
    values = np.clip(profile.baseline_vwc + excess + noise, 0.0, 1.0)
    return Series(node_id, Modality.SOIL_MOISTURE, start_time, float(interval_s), values)


def _shift_schedule(schedule: Sequence[ScheduledEvent], lag_s: float) -> list[ScheduledEvent]:
    if lag_s == 0:
        return list(schedule)
    return [ScheduledEvent(EventWindow(ev.window.start + lag_s, ev.window.end + lag_s),
                           ev.rain_mm) for ev in schedule]


def gen_deployment(spec: DeploymentSpec,
                   box_profile: BoxTempProfile = BoxTempProfile(),
                   soil_profile: SoilMoistureProfile = SoilMoistureProfile(),
                   start_time: float = 0.0) -> tuple[list[Series], list[EventWindow]]:
    """Generate soil-moisture and box-temperature series for every node.

    Node i draws its noise from streams derived as (spec.seed XOR i, channel),
    so nodes and channels are independent while the whole deployment stays
    reproducible from one seed. Returns the series (soil, then box, per node)
    and the shared (unshifted) event windows.
    """
    series: list[Series] = []
    for i, node_id in enumerate(spec.node_ids):
        node_seed = spec.seed ^ i
        soil = replace(soil_profile, spike_gain_vwc_per_mm=
                       soil_profile.spike_gain_vwc_per_mm * spec.response_scales[i])
        shifted = _shift_schedule(spec.schedule, spec.lags_s[i])
        series.append(gen_soil_moisture(spec.days, soil, shifted, spec.interval_s,
                                        seed=[node_seed, 0], node_id=node_id,
                                        start_time=start_time))
        series.append(gen_box_temperature(spec.days, box_profile, spec.schedule,
                                          spec.interval_s, seed=[node_seed, 1],
                                          node_id=node_id, start_time=start_time))
    return series, [ev.window for ev in spec.schedule]


def make_event_schedule(days: int, n_events: int, seed,
                        span_start_s: float = 0.0,
                        min_duration_s: float = 7200.0,
                        max_duration_s: float = 28800.0,
                        min_rain_mm: float = 2.0,
                        max_rain_mm: float = 30.0) -> tuple[ScheduledEvent, ...]:
    """Place `n_events` disjoint events across `days`, seeded and sorted.

    The span is cut into equal slots, one event per slot at a random offset,
    which keeps events disjoint and roughly evenly spread. Durations and
    rain depths are drawn uniformly from the given ranges.
    """
    if n_events < 0:
        raise ConfigError(f"n_events must be >= 0, got {n_events}")
    if not (0 < min_duration_s <= max_duration_s):
        raise ConfigError("need 0 < min_duration_s <= max_duration_s")
    if not (0 < min_rain_mm <= max_rain_mm):
        raise ConfigError("need 0 < min_rain_mm <= max_rain_mm")
    if n_events == 0:
        return ()
    span = days * DAY_S
    slot = span / n_events
    if slot <= max_duration_s:
        raise DataError(f"{n_events} events of up to {max_duration_s} s "
                        f"do not fit in {days} days")
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n_events):
        duration = float(rng.uniform(min_duration_s, max_duration_s))
        offset = float(rng.uniform(0.0, slot - duration))
        start = span_start_s + i * slot + offset
        rain = float(rng.uniform(min_rain_mm, max_rain_mm))
        out.append(ScheduledEvent(EventWindow(start, start + duration), rain))
    return tuple(out)
