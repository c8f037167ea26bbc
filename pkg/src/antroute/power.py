"""Link power profiles and network power evaluation.

A profile maps a link's normalized load rho = lambda/mu to the power the
link draws.  The family covers a log10(1 + rho) term plus an arbitrary
polynomial, which is enough to express the three canonical shapes used
throughout: sub-linear (``log``), proportional (``linear``) and
super-linear (``cubic``).  Profiles must be monotone non-decreasing on
[0, 1]; this is checked numerically at construction on a dense grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernel


class ProfileError(ValueError):
    """Raised for profiles that violate the monotone/finite contract."""


class LoadDomainError(ValueError):
    """Raised when a cost is requested for a negative load."""


_VALIDATION_GRID = np.linspace(0.0, 1.0, 1001)


@dataclass(frozen=True)
class CostProfile:
    """Immutable power profile: a0*log10(1+rho) + sum(poly[i] * rho**i).

    ``poly[i]`` multiplies rho**i, so ``poly[0]`` is a constant floor.
    Instances are safe to share between links and simulations.
    """

    a0: float = 0.0
    poly: tuple = ()
    name: str = ""
    _coef: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        coef = np.asarray(self.poly if self.poly else (0.0,), dtype=np.float64)
        object.__setattr__(self, "poly", tuple(float(p) for p in self.poly))
        object.__setattr__(self, "_coef", coef)
        values = [self.value(r) for r in _VALIDATION_GRID]
        if not all(math.isfinite(v) for v in values):
            raise ProfileError(f"profile {self.describe()} is not finite on [0, 1]")
        if min(values) < 0.0:
            raise ProfileError(f"profile {self.describe()} is negative on [0, 1]")
        eps = 1e-12
        for lo, hi in zip(values, values[1:]):
            if hi < lo - eps:
                raise ProfileError(
                    f"profile {self.describe()} is not monotone non-decreasing on [0, 1]"
                )

    def value(self, rho: float) -> float:
        """Raw profile value at normalized load rho >= 0 (no capacity clamp)."""
        return _kernel.profile_value(self.a0, self._coef, float(rho))

    def describe(self) -> str:
        if self.name:
            return self.name
        return f"CostProfile(a0={self.a0}, poly={self.poly})"

    def coefficients(self) -> list:
        """Coefficients in file order: a0 first, then the polynomial terms."""
        return [self.a0, *self.poly]


#: Named presets.  ``log`` draws a0*log10(1+rho); ``linear`` is rho itself;
#: ``cubic`` is rho**3.
PROFILES = {
    "log": CostProfile(a0=1.0, name="log"),
    "linear": CostProfile(poly=(0.0, 1.0), name="linear"),
    "cubic": CostProfile(poly=(0.0, 0.0, 0.0, 1.0), name="cubic"),
}


def resolve_profile(spec) -> CostProfile:
    """Accept a preset name, a CostProfile, or a coefficient list [a0, a1...]."""
    if isinstance(spec, CostProfile):
        return spec
    if isinstance(spec, str):
        try:
            return PROFILES[spec]
        except KeyError:
            raise ProfileError(f"unknown profile preset {spec!r}") from None
    coefs = [float(c) for c in spec]
    if not coefs:
        raise ProfileError("empty coefficient list")
    return CostProfile(a0=coefs[0], poly=tuple(coefs[1:]))


def eval_cost(profile: CostProfile, rho: float, finite_capacity: bool = False) -> float:
    """Power at normalized load ``rho``; infinite past rho=1 on a capacitated link."""
    if rho < 0.0:
        raise LoadDomainError(f"negative normalized load {rho}")
    if finite_capacity and rho > 1.0 + 1e-12:
        return math.inf
    return profile.value(rho)


def link_cost(link, load: float) -> float:
    """Power drawn by ``link`` when carrying ``load`` traffic units."""
    return eval_cost(link.profile, load / link.mu, math.isfinite(link.capacity))


def marginal_cost(link, loads, flow, link_in_current_path: bool) -> float:
    """Marginal power of routing ``flow`` across ``link`` at the given loads.

    When the link is already on the flow's path the flow's traffic is part
    of the observed load, so the marginal is its current share
    c(rho) - c(rho - r/mu); otherwise it is the increase c(rho + r/mu) -
    c(rho).  A hop whose resulting load exceeds a finite capacity is
    infeasible and costs infinity.
    """
    lam = float(loads[link.index])
    mu = link.mu
    rate = flow.rate
    finite = math.isfinite(link.capacity)
    if link_in_current_path:
        if finite and lam > link.capacity * (1.0 + 1e-12) + 1e-9:
            return math.inf
        return profile_delta(link.profile, lam / mu, (lam - rate) / mu)
    if finite and lam + rate > link.capacity * (1.0 + 1e-12) + 1e-9:
        return math.inf
    return profile_delta(link.profile, (lam + rate) / mu, lam / mu)


def profile_delta(profile: CostProfile, rho_hi: float, rho_lo: float) -> float:
    return profile.value(rho_hi) - profile.value(rho_lo)


def leave_penalty(link, loads, flow) -> float:
    """Extra power the remaining flows would draw if ``flow`` left ``link``.

    Computed as (c(lam - r) + c(r) - c(lam))+ over normalized loads: the
    clip at zero keeps super-additive (convex) profiles from rewarding
    premature departures.
    """
    lam = float(loads[link.index])
    mu = link.mu
    r = flow.rate
    v = (
        link.profile.value(max(lam - r, 0.0) / mu)
        + link.profile.value(r / mu)
        - link.profile.value(lam / mu)
    )
    return v if v > 0.0 else 0.0


def network_power(net, loads) -> float:
    """Total power of the network at the given per-link loads."""
    total = 0.0
    for link in net.links:
        c = link_cost(link, float(loads[link.index]))
        if math.isinf(c):
            return math.inf
        total += c
    return total
