"""Growth exponent of the uncoupled (linear) population.

With the inhibitor coupling off (e = 0), every tumor follows the same
autonomous flow from the birth state and the population grows
exponentially at the rate lambda0 solving

    integral_0^inf beta(X_tau(V0, K0)) * exp(-lambda0 * tau) d tau = 1,

where X_tau is the growth flow with I = 0 and beta the emission law.
The left side is strictly decreasing in lambda, so the root is unique
and bisection is safe.

The flow is integrated once per parameter set on a fine fixed grid with
the same stage scheme as the simulation engine and cached; queries
interpolate with cubic Hermite segments using exact field slopes at the
nodes. The spectral integral uses a product rule: beta is linearized on
each cell while the exponential factor is integrated exactly, which
keeps the constant-beta case exact to rounding and the smooth case at
grid-squared accuracy. Beyond the cached horizon the flow sits at the
fixed point (1, 1) to high accuracy and the tail integral
(m / lambda) * exp(-lambda * tau_max) is added in closed form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, NoRootError, NotLinearError
from .model import ModelParams, TumorState

__all__ = [
    "SpectralResult",
    "characteristic_flow",
    "malthus_exponent",
    "fit_growth_rate",
]

_DTAU = 1e-3
_TAU_MAX_INITIAL = 50.0
_TAU_MAX_CAP = 900.0
_SETTLE_TOL = 1e-8
_ROOT_TOL = 1e-10


@dataclass(frozen=True)
class SpectralResult:
    """Root of the spectral equation plus the quadrature's footprint."""

    lambda0: float
    tau_max: float
    quadrature_nodes: int
    residual: float


class _Flow:
    """Cached autonomous growth flow from (V0, K0) on a uniform grid.

    Extends itself by doubling the horizon until the state settles at
    the fixed point (1, 1), so slow parameter regimes get the horizon
    they need without penalizing fast ones.
    """

    def __init__(self, b: float, V0: float, K0: float):
        self.b = b
        self.dtau = _DTAU
        self.V = [V0]
        self.K = [K0]
        self._extend_to(_TAU_MAX_INITIAL)
        while not self.settled and self.tau_max < _TAU_MAX_CAP:
            self._extend_to(min(2.0 * self.tau_max, _TAU_MAX_CAP))
        self.Va = np.array(self.V)
        self.Ka = np.array(self.K)
        self.dVa = self.Va * np.log(self.Ka / self.Va)
        self.dKa = b * (self.Va - self.Va ** (2.0 / 3.0) * self.Ka)

    @property
    def tau_max(self) -> float:
        return (len(self.V) - 1) * self.dtau

    @property
    def settled(self) -> bool:
        return abs(self.V[-1] - 1.0) + abs(self.K[-1] - 1.0) < _SETTLE_TOL

    def _extend_to(self, tau_target: float):
        b = self.b
        h = self.dtau
        q = 0.5 * h

        def f(V, K):
            return V * math.log(K / V), b * (V - V ** (2.0 / 3.0) * K)

        V, K = self.V[-1], self.K[-1]
        for _ in range(len(self.V) - 1, round(tau_target / h)):
            dV1, dK1 = f(V, K)
            dV2, dK2 = f(V + q * dV1, K + q * dK1)
            dV3, dK3 = f(V + q * dV2, K + q * dK2)
            dV4, dK4 = f(V + h * dV3, K + h * dK3)
            V += (h / 6.0) * (dV1 + 2.0 * (dV2 + dV3) + dV4)
            K += (h / 6.0) * (dK1 + 2.0 * (dK2 + dK3) + dK4)
            self.V.append(V)
            self.K.append(K)

    def at(self, tau: float) -> tuple[float, float]:
        """Cubic Hermite interpolation between grid nodes."""
        if tau >= self.tau_max:
            return float(self.Va[-1]), float(self.Ka[-1])
        pos = tau / self.dtau
        i = min(int(pos), self.Va.size - 2)
        s = pos - i
        h = self.dtau
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        V = (
            h00 * self.Va[i]
            + h10 * h * self.dVa[i]
            + h01 * self.Va[i + 1]
            + h11 * h * self.dVa[i + 1]
        )
        K = (
            h00 * self.Ka[i]
            + h10 * h * self.dKa[i]
            + h01 * self.Ka[i + 1]
            + h11 * h * self.dKa[i + 1]
        )
        return float(V), float(K)


_flow_cache: dict[tuple[float, float, float], _Flow] = {}


def _flow_for(p: ModelParams) -> _Flow:
    key = (p.b, p.V0, p.K0)
    flow = _flow_cache.get(key)
    if flow is None:
        flow = _flow_cache[key] = _Flow(p.b, p.V0, p.K0)
    return flow


def characteristic_flow(tau: float, p: ModelParams) -> TumorState:
    """State reached at time tau by a tumor growing from (V0, K0) with
    no inhibitor; the flow the spectral equation integrates along."""
    if not (math.isfinite(tau) and tau >= 0):
        raise ConfigurationError(f"tau must be >= 0, got {tau!r}")
    V, K = _flow_for(p).at(tau)
    return TumorState(V=V, K=K)


def _emission_threshold_time(flow: _Flow, Vm: float) -> float | None:
    """First time the flow volume reaches Vm, or None if it never does.

    V is strictly increasing along the flow for V0 < K0, so the
    crossing is unique; it is bracketed on the grid and polished on the
    Hermite interpolant.
    """
    if flow.Va[0] >= Vm:
        return 0.0
    hits = flow.Va >= Vm
    if not hits.any():
        return None
    i = int(np.argmax(hits))
    lo = (i - 1) * flow.dtau
    hi = i * flow.dtau
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if flow.at(mid)[0] < Vm:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def malthus_exponent(p: ModelParams) -> SpectralResult:
    """Solve the spectral equation for the linear growth exponent.

    Requires the uncoupled model (e = 0) and a positive emission
    constant; raises NotLinearError and NoRootError otherwise.
    """
    if p.e != 0.0:
        raise NotLinearError(
            "the growth exponent is defined for the uncoupled model; set e = 0"
        )
    if p.m <= 0.0:
        raise NoRootError("no positive growth exponent exists for m = 0")

    flow = _flow_for(p)
    tau_star = _emission_threshold_time(flow, p.Vm)
    if tau_star is None:
        raise NoRootError(
            f"the flow never reaches the emission threshold Vm={p.Vm:g}; no births occur"
        )

    # quadrature nodes: the crossing time, then every grid node past it
    first = int(math.ceil(tau_star / flow.dtau - 1e-12))
    if first * flow.dtau <= tau_star:
        first += 1
    taus = np.concatenate(([tau_star], np.arange(first, flow.Va.size) * flow.dtau))
    Vs = np.concatenate(([p.Vm if tau_star > 0 else p.V0], flow.Va[first:]))
    betas = p.m * Vs**p.alpha
    dt_cells = np.diff(taus)
    beta_lo = betas[:-1]
    dbeta = np.diff(betas)
    tau_lo = taus[:-1]
    tau_max = flow.tau_max

    def F(lam: float) -> float:
        x = lam * dt_cells
        em = -np.expm1(-x)  # 1 - exp(-x), stable for small x
        i0 = em / lam
        i1 = (em - x * np.exp(-x)) / (lam * lam)
        cells = np.exp(-lam * tau_lo) * (beta_lo * i0 + (dbeta / dt_cells) * i1)
        tail = (p.m / lam) * math.exp(-lam * tau_max)
        return float(cells.sum()) + tail - 1.0

    # bracket: F -> +inf as lam -> 0+ and F < 0 once lam exceeds the
    # emission-rate ceiling along the flow
    lo = 1e-9
    hi = 1.5 * p.m * float(np.max(Vs)) ** p.alpha + 1e-6
    for _ in range(200):
        if F(hi) < 0.0:
            break
        hi *= 2.0
    else:
        raise NoRootError("failed to bracket the growth exponent from above")
    for _ in range(200):
        if F(lo) > 0.0:
            break
        lo *= 0.5

    root = 0.5 * (lo + hi)
    residual = math.inf
    for _ in range(300):
        root = 0.5 * (lo + hi)
        val = F(root)
        residual = abs(val)
        if residual < _ROOT_TOL:
            break
        if val > 0.0:
            lo = root
        else:
            hi = root

    return SpectralResult(
        lambda0=root,
        tau_max=tau_max,
        quadrature_nodes=int(taus.size),
        residual=residual,
    )


def fit_growth_rate(times, M, window: tuple[float, float]) -> float:
    """Least-squares slope of ln M(t) over a time window.

    The intercept is discarded; only the exponential rate is returned.
    """
    times = np.asarray(times, dtype=float)
    M = np.asarray(M, dtype=float)
    if times.shape != M.shape:
        raise ConfigurationError("times and M must have matching shapes")
    t_lo, t_hi = window
    mask = (times >= t_lo) & (times <= t_hi)
    if int(mask.sum()) < 10:
        raise ConfigurationError(
            f"window [{t_lo:g}, {t_hi:g}] holds fewer than 10 samples"
        )
    Mw = M[mask]
    if np.any(Mw <= 0):
        raise ConfigurationError("M must be positive throughout the fit window")
    slope, _ = np.polyfit(times[mask], np.log(Mw), 1)
    return float(slope)
