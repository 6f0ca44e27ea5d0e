"""Time integration of the coupled population system.

The metastatic density is represented exactly as a list of weighted
cohorts: every tumor is born at the same state (V0, K0), so the density
stays a finite sum of point masses, each following the growth ODE. No
(V, K)-grid exists and there is no numerical diffusion.

The full coupled vector field (primary tumor, every cohort, inhibitor)
is advanced with the classical 4th-order Runge-Kutta scheme; the
inhibitor seen by each stage is the stage's own value, so the coupling
is integrated consistently rather than frozen per step.

Births add one cohort per step with the trapezoid of the population
emission rate over the step as its weight. The cohort enters advanced
half a step past the birth state, which makes the discrete birth stream
a midpoint rule in disguise: placing newborns at the step's end with age
zero would tag every cohort with a systematic age lag of dt/2 and drag
the global order of the burden down to one.

Cohort bookkeeping (born, exited) uses compensated accumulation so the
conservation identity born = exited + live holds to a few ulp even after
millions of steps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigurationError, IntegrationBlowupError, InvalidStateError
from .model import ModelParams, TumorState

__all__ = [
    "Cohort",
    "SystemState",
    "SolverSettings",
    "total_burden",
    "inhibitor_rate",
    "birth_rate",
    "step",
    "simulate",
]

_MAX_STEPS = 20_000_000


@dataclass(frozen=True)
class Cohort:
    """One characteristic curve carrying a point mass of the density.

    ``weight`` is the expected number of metastases riding the curve;
    ``birth_time`` is the instant the mass entered the domain.
    """

    birth_time: float
    weight: float
    state: TumorState

    def __post_init__(self):
        if not (math.isfinite(self.weight) and self.weight >= 0):
            raise InvalidStateError(f"cohort weight must be >= 0, got {self.weight!r}")
        if not math.isfinite(self.birth_time):
            raise InvalidStateError(f"cohort birth_time must be finite, got {self.birth_time!r}")


@dataclass(frozen=True)
class SystemState:
    """Full state of the coupled system at one instant.

    ``V0`` is the lower edge of the live domain, copied from the model
    parameters at construction; it travels with the state so that
    domain checks and histogram binning need no external context.

    ``born_count`` and ``exited_count`` are cumulative weights; the
    identity born = exited + sum of live weights holds at all times
    (up to float accumulation).
    """

    t: float
    primary: TumorState
    I: float
    cohorts: tuple[Cohort, ...]
    born_count: float
    exited_count: float
    V0: float

    def __post_init__(self):
        if not (math.isfinite(self.I) and self.I >= 0):
            raise InvalidStateError(f"inhibitor amount must be >= 0, got {self.I!r}")
        if not math.isfinite(self.t):
            raise InvalidStateError(f"time must be finite, got {self.t!r}")
        if not (math.isfinite(self.V0) and self.V0 > 0):
            raise InvalidStateError(f"V0 must be finite and > 0, got {self.V0!r}")
        for c in self.cohorts:
            if c.state.V < self.V0:
                raise InvalidStateError(
                    f"cohort at V={c.state.V} lies below the domain edge V0={self.V0}"
                )


@dataclass(frozen=True)
class SolverSettings:
    """Fixed-step integrator configuration.

    ``sample_every`` is rounded to a whole number of steps. A
    ``weight_floor`` > 0 prunes negligible cohorts, booking their weight
    as exited so conservation still holds; the default leaves pruning
    off.
    """

    dt: float = 1e-2
    t_end: float = 200.0
    sample_every: float = 0.1
    weight_floor: float = 0.0

    def __post_init__(self):
        for name in ("dt", "t_end", "sample_every", "weight_floor"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigurationError(f"{name} must be finite")
        if self.dt <= 0:
            raise ConfigurationError(f"dt must be > 0, got {self.dt}")
        if self.t_end <= 0:
            raise ConfigurationError(f"t_end must be > 0, got {self.t_end}")
        if self.sample_every < self.dt:
            raise ConfigurationError(
                f"sample_every must be >= dt, got {self.sample_every} < {self.dt}"
            )
        if self.weight_floor < 0:
            raise ConfigurationError(f"weight_floor must be >= 0, got {self.weight_floor}")
        if self.t_end / self.dt > _MAX_STEPS:
            raise ConfigurationError(
                f"t_end/dt = {self.t_end / self.dt:.3g} exceeds the step-count cap {_MAX_STEPS}"
            )


class _Accumulator:
    """Neumaier-compensated running sum for cumulative weight counters."""

    __slots__ = ("total", "_comp")

    def __init__(self, value: float = 0.0):
        self.total = value
        self._comp = 0.0

    def add(self, x: float):
        t = self.total + x
        if abs(self.total) >= abs(x):
            self._comp += (self.total - t) + x
        else:
            self._comp += (x - t) + self.total
        self.total = t

    @property
    def value(self) -> float:
        return self.total + self._comp


class _Engine:
    """Mutable struct-of-arrays working state of one simulation.

    Arrays carry ``n`` live cohorts in birth order within a capacity
    that doubles on demand; scratch buffers for the four stages are kept
    at the same capacity so the hot loop allocates nothing.
    """

    def __init__(self, p: ModelParams, state: SystemState, weight_floor: float = 0.0):
        self.p = p
        self.weight_floor = weight_floor
        self.t = state.t
        self.Vp = state.primary.V
        self.Kp = state.primary.K
        self.I = state.I
        self.born = _Accumulator(state.born_count)
        self.exited = _Accumulator(state.exited_count)
        n = len(state.cohorts)
        cap = max(4096, 1 << (n + 1).bit_length())
        self.n = n
        self.V = np.empty(cap)
        self.K = np.empty(cap)
        self.w = np.empty(cap)
        self.birth_t = np.empty(cap)
        for i, c in enumerate(state.cohorts):
            self.V[i] = c.state.V
            self.K[i] = c.state.K
            self.w[i] = c.weight
            self.birth_t[i] = c.birth_time
        self._scratch = [np.empty(cap) for _ in range(11)]

    # -- storage -----------------------------------------------------

    def _grow(self):
        cap = 2 * self.V.size
        for name in ("V", "K", "w", "birth_t"):
            arr = np.empty(cap)
            arr[: self.n] = getattr(self, name)[: self.n]
            setattr(self, name, arr)
        self._scratch = [np.empty(cap) for _ in range(11)]

    # -- model terms on the array representation ---------------------

    def _emission_sum(self, Vp: float, V: np.ndarray) -> float:
        """Population emission rate: primary plus weighted cohorts."""
        p = self.p
        total = p.m * Vp**p.alpha if Vp >= p.Vm else 0.0
        if self.n:
            beta = np.power(V, p.alpha)
            if p.Vm > 0.0:
                beta[V < p.Vm] = 0.0
            total += p.m * float(np.dot(self.w[: self.n], beta))
        return total

    def _burden(self, V: np.ndarray) -> float:
        if not self.n:
            return 0.0
        return float(np.dot(self.w[: self.n], V))

    # -- one step ----------------------------------------------------

    def step(self, dt: float):
        p = self.p
        n = self.n
        b, e, k = p.b, p.e, p.k
        V = self.V[:n]
        K = self.K[:n]
        (kV1, kK1, kV2, kK2, kV3, kK3, kV4, kK4, Vs, Ks, tmp) = (
            a[:n] for a in self._scratch
        )
        Vp, Kp, I = self.Vp, self.Kp, self.I

        B0 = self._emission_sum(Vp, V)

        def stage(Vc, Kc, Vpc, Kpc, Ic, outV, outK):
            """Field at one stage state; returns (dVp, dKp, dI)."""
            if n:
                np.divide(Kc, Vc, out=outV)
                np.log(outV, out=outV)
                outV *= Vc
                np.power(Vc, 2.0 / 3.0, out=outK)
                outK *= Kc
                np.subtract(Vc, outK, out=outK)
                outK *= b
                if e != 0.0 and Ic != 0.0:
                    np.multiply(Kc, e * Ic, out=tmp)
                    outK -= tmp
            dVp = Vpc * math.log(Kpc / Vpc)
            dKp = b * (Vpc - Vpc ** (2.0 / 3.0) * Kpc) - e * Ic * Kpc
            dI = Vpc + (float(np.dot(self.w[:n], Vc)) if n else 0.0) - k * Ic
            return dVp, dKp, dI

        h2 = 0.5 * dt
        # scalar ops raise on a diverging stage state (log of a
        # nonpositive ratio, fractional power of a negative); fold
        # those into the blowup signal instead of leaking them
        try:
            with np.errstate(all="ignore"):
                dVp1, dKp1, dI1 = stage(V, K, Vp, Kp, I, kV1, kK1)
                if n:
                    np.multiply(kV1, h2, out=Vs)
                    Vs += V
                    np.multiply(kK1, h2, out=Ks)
                    Ks += K
                dVp2, dKp2, dI2 = stage(
                    Vs, Ks, Vp + h2 * dVp1, Kp + h2 * dKp1, I + h2 * dI1, kV2, kK2
                )
                if n:
                    np.multiply(kV2, h2, out=Vs)
                    Vs += V
                    np.multiply(kK2, h2, out=Ks)
                    Ks += K
                dVp3, dKp3, dI3 = stage(
                    Vs, Ks, Vp + h2 * dVp2, Kp + h2 * dKp2, I + h2 * dI2, kV3, kK3
                )
                if n:
                    np.multiply(kV3, dt, out=Vs)
                    Vs += V
                    np.multiply(kK3, dt, out=Ks)
                    Ks += K
                dVp4, dKp4, dI4 = stage(
                    Vs, Ks, Vp + dt * dVp3, Kp + dt * dKp3, I + dt * dI3, kV4, kK4
                )
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise IntegrationBlowupError(self.t + dt) from exc

        s6 = dt / 6.0
        if n:
            kV2 += kV3
            kV2 *= 2.0
            kV2 += kV1
            kV2 += kV4
            kV2 *= s6
            V += kV2
            kK2 += kK3
            kK2 *= 2.0
            kK2 += kK1
            kK2 += kK4
            kK2 *= s6
            K += kK2
        self.Vp = Vp + s6 * (dVp1 + 2.0 * (dVp2 + dVp3) + dVp4)
        self.Kp = Kp + s6 * (dKp1 + 2.0 * (dKp2 + dKp3) + dKp4)
        I_new = I + s6 * (dI1 + 2.0 * (dI2 + dI3) + dI4)
        self.I = I_new
        t_new = self.t + dt

        ok = (
            math.isfinite(self.Vp)
            and self.Vp > 0
            and math.isfinite(self.Kp)
            and self.Kp > 0
            and math.isfinite(I_new)
        )
        if ok and n:
            ok = bool(np.isfinite(V).all() and np.isfinite(K).all())
        if not ok:
            raise IntegrationBlowupError(t_new)

        # birth: trapezoid of the emission rate over the step. Three
        # first-order leaks are closed to keep the global order at two:
        # the newborn enters advanced to mid-step age (no dt/2 age lag);
        # the trapezoid's right endpoint includes the newborn's own
        # emission (implicit in w, solved in closed form); and the
        # inhibitor records the newborn's in-step production, which the
        # stages cannot see.
        try:
            with np.errstate(all="ignore"):
                B1 = self._emission_sum(self.Vp, V)
                Vn, Kn = _half_step_from_birth(p, 0.5 * (I + I_new), h2)
                beta_n = p.m * Vn**p.alpha if Vn >= p.Vm else 0.0
        except (ValueError, OverflowError, ZeroDivisionError) as exc:
            raise IntegrationBlowupError(t_new) from exc
        denom = 1.0 - h2 * beta_n
        if denom <= 0.5:
            raise IntegrationBlowupError(t_new, f"dt too large for the birth term at t={t_new:g}")
        w_new = h2 * (B0 + B1) / denom
        if w_new > 0.0:
            self.born.add(w_new)
            I_new += h2 * w_new * p.V0
            self.I = I_new
            if w_new < self.weight_floor:
                self.exited.add(w_new)
            else:
                if self.n == self.V.size:
                    self._grow()
                i = self.n
                self.V[i] = Vn
                self.K[i] = Kn
                self.w[i] = w_new
                self.birth_t[i] = self.t + h2
                self.n += 1
                n = self.n
                V = self.V[:n]
                K = self.K[:n]

        # removal through the V = V0 edge, then pruning
        drop = V < p.V0
        if self.weight_floor > 0.0:
            drop |= self.w[:n] < self.weight_floor
        if drop.any():
            for x in self.w[:n][drop]:
                self.exited.add(float(x))
            keep = ~drop
            m_keep = int(keep.sum())
            for name in ("V", "K", "w", "birth_t"):
                arr = getattr(self, name)
                arr[:m_keep] = arr[:n][keep]
            self.n = m_keep

        self.t = t_new

    # -- observation -------------------------------------------------

    def burden(self) -> float:
        return self._burden(self.V[: self.n])

    def live_weight(self) -> float:
        """Exactly rounded sum of live weights (conservation checks)."""
        return math.fsum(self.w[: self.n]) if self.n else 0.0

    def largest_volume(self) -> float:
        return float(self.V[: self.n].max()) if self.n else math.nan

    def to_state(self) -> SystemState:
        cohorts = tuple(
            Cohort(
                birth_time=float(self.birth_t[i]),
                weight=float(self.w[i]),
                state=TumorState(V=float(self.V[i]), K=float(self.K[i])),
            )
            for i in range(self.n)
        )
        return SystemState(
            t=self.t,
            primary=TumorState(V=self.Vp, K=self.Kp),
            I=self.I,
            cohorts=cohorts,
            born_count=self.born.value,
            exited_count=self.exited.value,
            V0=self.p.V0,
        )


def _half_step_from_birth(p: ModelParams, I_mid: float, h2: float) -> tuple[float, float]:
    """Advance the birth state by h2 with one scalar stage step.

    The inhibitor is frozen at its step midpoint; the O(h^2) error this
    leaves in the newborn state is weighted by an O(h) cohort mass, so
    the overall order is unaffected.
    """
    b, e = p.b, p.e
    eI = e * I_mid

    def f(V, K):
        return V * math.log(K / V), b * (V - V ** (2.0 / 3.0) * K) - eI * K

    V, K = p.V0, p.K0
    q = 0.5 * h2
    dV1, dK1 = f(V, K)
    dV2, dK2 = f(V + q * dV1, K + q * dK1)
    dV3, dK3 = f(V + q * dV2, K + q * dK2)
    dV4, dK4 = f(V + h2 * dV3, K + h2 * dK3)
    s = h2 / 6.0
    return (
        V + s * (dV1 + 2.0 * (dV2 + dV3) + dV4),
        K + s * (dK1 + 2.0 * (dK2 + dK3) + dK4),
    )


def initial_state(p: ModelParams, initial_cohorts: tuple[Cohort, ...] = ()) -> SystemState:
    """System at t = 0: primary at the birth state, no inhibitor.

    ``born_count`` starts at the total initial weight so the
    conservation identity holds from the first sample.
    """
    born0 = math.fsum(c.weight for c in initial_cohorts) if initial_cohorts else 0.0
    return SystemState(
        t=0.0,
        primary=TumorState(V=p.V0, K=p.K0),
        I=0.0,
        cohorts=tuple(initial_cohorts),
        born_count=born0,
        exited_count=0.0,
        V0=p.V0,
    )


def total_burden(s: SystemState) -> float:
    """Total metastatic volume M: sum of weight * V over live cohorts.

    The primary tumor is excluded; it is tracked separately.
    """
    return math.fsum(c.weight * c.state.V for c in s.cohorts)


def inhibitor_rate(s: SystemState, p: ModelParams) -> float:
    """Rate of change of the inhibitor amount: production by the whole
    tumor bulk (primary plus metastases) minus first-order clearance."""
    return s.primary.V + total_burden(s) - p.k * s.I


def birth_rate(s: SystemState, p: ModelParams) -> float:
    """Population emission rate: new metastases shed per unit time by
    the primary and every live cohort together."""
    from .model import emission_rate

    total = emission_rate(s.primary.V, p)
    for c in s.cohorts:
        total += c.weight * emission_rate(c.state.V, p)
    return total


def step(s: SystemState, p: ModelParams, dt: float, weight_floor: float = 0.0) -> SystemState:
    """One fixed step of the full coupled system; returns a new state.

    Advances primary, cohorts, and inhibitor together with the classical
    4th-order scheme (stage-consistent inhibitor), spawns at most one
    cohort carrying the trapezoid birth weight, removes cohorts that
    left the domain through V = V0, and prunes weights below
    ``weight_floor``, booking all removed weight as exited.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise ConfigurationError(f"dt must be > 0, got {dt!r}")
    if s.V0 != p.V0:
        raise InvalidStateError(
            f"state was built for V0={s.V0}, parameters have V0={p.V0}"
        )
    eng = _Engine(p, s, weight_floor=weight_floor)
    eng.step(dt)
    return eng.to_state()


def simulate(
    p: ModelParams,
    settings: SolverSettings,
    initial_cohorts: tuple[Cohort, ...] = (),
    n_bins: int = 40,
):
    """Run from t = 0 to t_end, sampling observables along the way.

    Returns (trajectory, final_state). The trajectory rows are sampled
    every ``settings.sample_every`` (rounded to whole steps), starting
    with t = 0; its final histogram is taken from the end state with
    ``n_bins`` log-spaced bins.

    Raises IntegrationBlowupError if the state leaves the finite domain,
    carrying the time of the failed step.
    """
    from .observables import Trajectory, histogram

    n_steps = round(settings.t_end / settings.dt)
    if not math.isclose(n_steps * settings.dt, settings.t_end, rel_tol=1e-9):
        n_steps = math.ceil(settings.t_end / settings.dt)
    every = max(1, round(settings.sample_every / settings.dt))

    eng = _Engine(p, initial_state(p, initial_cohorts), weight_floor=settings.weight_floor)

    n_rows = n_steps // every + 1
    times = np.empty(n_rows)
    M = np.empty(n_rows)
    N = np.empty(n_rows)
    I = np.empty(n_rows)
    Vp = np.empty(n_rows)
    born = np.empty(n_rows)
    exited = np.empty(n_rows)
    largest = np.empty(n_rows)

    def record(row: int):
        times[row] = eng.t
        M[row] = eng.burden()
        N[row] = eng.live_weight()
        I[row] = eng.I
        Vp[row] = eng.Vp
        born[row] = eng.born.value
        exited[row] = eng.exited.value
        largest[row] = eng.largest_volume()

    record(0)
    row = 1
    dt = settings.dt
    for i in range(n_steps):
        eng.step(dt)
        eng.t = (i + 1) * dt  # pin to the exact grid against drift
        if (i + 1) % every == 0:
            record(row)
            row += 1

    final = eng.to_state()
    traj = Trajectory(
        times=times[:row],
        M=M[:row],
        N=N[:row],
        I=I[:row],
        Vp=Vp[:row],
        born=born[:row],
        exited=exited[:row],
        largest_V=largest[:row],
        final_histogram=histogram(final, n_bins),
    )
    return traj, final
