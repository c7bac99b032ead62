"""Monte Carlo probability-of-detection curves for slotted PMU transmission.

One frame of T time units is split into N slots. Before any PMU has sent,
the control center holds a pre-change record for every measurement channel:
the same angle trajectory observed under the nominal susceptances, with its
own noise draw. In slot n the n-th PMU of the transmission order delivers its
channels as actually measured, and the detector runs on whatever mix of fresh
and stale data the center now holds. Under H0 the two records have the same
distribution, so any mix is a valid H0 sample.

Every trial draws its random streams from ``SeedSequence(seed, spawn_key=
(trial, label))`` so results do not depend on trial order or worker count.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .detector import (ConvergenceError, GlrtResult, MeasurementSet, NoiseParams,
                       chi2_threshold, glrt_statistic)
from .network import PowerNetwork, build_incidence, nominal_susceptance
from .scheduler import Schedule, slot_boundaries, truncate_schedule

__all__ = [
    "SimConfig",
    "ChannelSet",
    "FrameBuffer",
    "PdCurve",
    "SimulationError",
    "default_alpha_grid",
    "generate_truth",
    "add_noise",
    "pmu_channels",
    "run_frame",
    "monte_carlo_pd",
    "write_pd_csv",
]

# spawn-key labels for the per-trial random streams
_TRUTH, _BASELINE_NOISE, _CURRENT_NOISE, _RANDOM_ORDER = range(4)

POLICIES = ("scheduled", "random", "both")


class SimulationError(RuntimeError):
    pass


def default_alpha_grid(n=20, upper=0.2):
    """``n`` evenly spaced false-alarm rates in ``(0, upper]``."""
    return tuple(float(a) for a in np.linspace(upper / n, upper, n))


@dataclass(frozen=True)
class SimConfig:
    T: int = 20
    trials: int = 1000
    shift: float | None = -0.02
    alpha_grid: tuple[float, ...] = field(default_factory=default_alpha_grid)
    seed: int = 0
    noise: NoiseParams = field(default_factory=NoiseParams)
    policy: str = "both"
    pmu_limit: int | None = None

    def __post_init__(self):
        if self.T < 1 or self.trials < 1:
            raise ValueError("T and trials must be positive")
        if not self.alpha_grid or not all(0.0 < a <= 0.2 for a in self.alpha_grid):
            raise ValueError("alpha_grid values must lie in (0, 0.2]")
        if self.shift is not None and not self.shift > -1.0:
            raise ValueError("shift must exceed -1")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {POLICIES}")


def _rng(seed, *key):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=tuple(key)))


def generate_truth(s, D, T, shift=None, seed=0):
    """Noiseless angles (B x T) and branch flows (K x T).

    Angles are i.i.d. standard normal. With ``shift`` set, the first column
    uses ``s`` and later columns use ``(1 + shift) s``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    s = np.asarray(s, dtype=float)
    theta = rng.standard_normal((D.shape[1], T))
    Z = s[:, None] * (D @ theta)
    if shift is not None and T > 1:
        Z[:, 1:] *= 1.0 + shift
    return theta, Z


def add_noise(truth, noise: NoiseParams, seed=0) -> MeasurementSet:
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    theta, Z = truth
    wz = rng.standard_normal(Z.shape) * np.sqrt(noise.sigma2_z)
    wt = rng.standard_normal(theta.shape) * np.sqrt(noise.sigma2_theta)
    return MeasurementSet(Z + wz, theta + wt)


@dataclass(frozen=True)
class ChannelSet:
    angle_buses: tuple[int, ...]  # 1-based bus ids
    flow_branches: tuple[int, ...]  # 1-based branch indices

    def union(self, other: ChannelSet) -> ChannelSet:
        return ChannelSet(tuple(sorted(set(self.angle_buses) | set(other.angle_buses))),
                          tuple(sorted(set(self.flow_branches) | set(other.flow_branches))))


def pmu_channels(net: PowerNetwork, bus) -> ChannelSet:
    """Channels a PMU at ``bus`` reports: its own and its neighbours' angles,
    and the flows of its incident branches."""
    if not 1 <= bus <= net.bus_count:
        raise IndexError(f"bus {bus} outside 1..{net.bus_count}")
    angles = sorted({bus, *net.neighbors(bus)})
    flows = [k + 1 for k in net.incident_branches(bus)]
    return ChannelSet(tuple(angles), tuple(flows))


class FrameBuffer:
    """Latest samples held at the control center, one row per channel.

    ``flow_stamp`` and ``angle_stamp`` record the slot that last refreshed
    each channel (0 = still carrying the pre-change record).
    """

    def __init__(self, baseline: MeasurementSet):
        self.z = baseline.z_tilde.copy()
        self.theta = baseline.theta_tilde.copy()
        self.flow_stamp = np.zeros(self.z.shape[0], dtype=int)
        self.angle_stamp = np.zeros(self.theta.shape[0], dtype=int)

    def refresh(self, channels: ChannelSet, current: MeasurementSet, slot):
        fl = [k - 1 for k in channels.flow_branches]
        an = [b - 1 for b in channels.angle_buses]
        self.z[fl] = current.z_tilde[fl]
        self.theta[an] = current.theta_tilde[an]
        self.flow_stamp[fl] = slot
        self.angle_stamp[an] = slot

    def snapshot(self) -> MeasurementSet:
        return MeasurementSet(self.z.copy(), self.theta.copy())


def run_frame(net: PowerNetwork, order, current: MeasurementSet, baseline: MeasurementSet,
              noise: NoiseParams, s0=None, D=None, cache=None):
    """Run the detector after each transmission in ``order``.

    Returns one entry per slot: a GlrtResult, or the ConvergenceError raised
    for that slot. ``cache`` (a dict) shares results between calls on the
    same data; the buffer after a slot depends only on which PMUs have sent.
    """
    D = build_incidence(net) if D is None else D
    s0 = nominal_susceptance(net) if s0 is None else s0
    buf = FrameBuffer(baseline)
    sent = []
    out = []
    for slot, bus in enumerate(order, start=1):
        buf.refresh(pmu_channels(net, bus), current, slot)
        sent.append(bus)
        key = frozenset(sent)
        if cache is not None and key in cache:
            out.append(cache[key])
            continue
        try:
            res = glrt_statistic(buf.snapshot(), D, noise, s0)
        except ConvergenceError as exc:
            res = exc
        if cache is not None:
            cache[key] = res
        out.append(res)
    return out


@dataclass(frozen=True)
class PdCurve:
    times: tuple[int, ...]
    pd_scheduled: np.ndarray | None
    pd_random: np.ndarray | None
    trials: int
    alpha_grid: tuple[float, ...]
    failed_trials: int = 0
    order: tuple[int, ...] = ()

    @property
    def slots(self) -> int:
        return len(self.times)


def _trial(net, D, s0, order, cfg: SimConfig, thresholds, trial):
    """Detection counts for one trial: arrays (slots x alphas) per policy."""
    seed = cfg.seed
    # both records share one angle trajectory
    baseline = add_noise(generate_truth(s0, D, cfg.T, None, _rng(seed, trial, _TRUTH)),
                         cfg.noise, _rng(seed, trial, _BASELINE_NOISE))
    current = add_noise(generate_truth(s0, D, cfg.T, cfg.shift, _rng(seed, trial, _TRUTH)),
                        cfg.noise, _rng(seed, trial, _CURRENT_NOISE))
    cache = {}
    hits = {}
    if cfg.policy in ("scheduled", "both"):
        hits["scheduled"] = run_frame(net, order, current, baseline, cfg.noise, s0, D, cache)
    if cfg.policy in ("random", "both"):
        perm = _rng(seed, trial, _RANDOM_ORDER).permutation(len(order))
        rand_order = [order[i] for i in perm]
        hits["random"] = run_frame(net, rand_order, current, baseline, cfg.noise, s0, D, cache)
    counts = {}
    for pol, results in hits.items():
        if any(isinstance(r, Exception) for r in results):
            return None
        stats = np.array([r.statistic for r in results])
        counts[pol] = (stats[:, None] > thresholds[None, :]).astype(np.int64)
    return counts


def _trial_block(args):
    net, order, cfg, trial_ids = args
    D = build_incidence(net)
    s0 = nominal_susceptance(net)
    thresholds = np.array([chi2_threshold(net.branch_count, a) for a in cfg.alpha_grid])
    n = len(order)
    A = len(cfg.alpha_grid)
    totals = {"scheduled": np.zeros((n, A), np.int64), "random": np.zeros((n, A), np.int64)}
    failed = 0
    for t in trial_ids:
        c = _trial(net, D, s0, order, cfg, thresholds, t)
        if c is None:
            failed += 1
            continue
        for pol, arr in c.items():
            totals[pol] += arr
    return totals, failed


def monte_carlo_pd(cfg: SimConfig, net: PowerNetwork, schedule: Schedule, workers=1) -> PdCurve:
    """Average detection probability after each slot, over trials and alphas.

    The random policy transmits the same PMU set as ``schedule`` in a fresh
    uniformly random order each trial, on the same data as the scheduled run.
    """
    if cfg.pmu_limit is not None:
        schedule = truncate_schedule(schedule, cfg.pmu_limit)
    order = tuple(schedule.order)
    times = slot_boundaries(len(order), cfg.T)

    ids = np.arange(cfg.trials)
    if workers > 1:
        blocks = [(net, order, cfg, chunk.tolist()) for chunk in np.array_split(ids, workers * 4)
                  if len(chunk)]
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_trial_block, blocks))
    else:
        parts = [_trial_block((net, order, cfg, ids.tolist()))]

    n, A = len(order), len(cfg.alpha_grid)
    totals = {"scheduled": np.zeros((n, A), np.int64), "random": np.zeros((n, A), np.int64)}
    failed = 0
    for part, f in parts:
        failed += f
        for pol in totals:
            totals[pol] += part[pol]
    if failed > 0.01 * cfg.trials:
        raise SimulationError(f"{failed} of {cfg.trials} trials failed in the detector")
    good = cfg.trials - failed

    def pd(pol):
        if cfg.policy not in (pol, "both"):
            return None
        return totals[pol].mean(axis=1) / good

    return PdCurve(times, pd("scheduled"), pd("random"), cfg.trials, tuple(cfg.alpha_grid),
                   failed, order)


def write_pd_csv(curve: PdCurve, path):
    def fmt(arr, i):
        return "" if arr is None else repr(float(arr[i]))

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["slot", "time", "pd_scheduled", "pd_random"])
        for i, t in enumerate(curve.times):
            w.writerow([i + 1, t, fmt(curve.pd_scheduled, i), fmt(curve.pd_random, i)])
