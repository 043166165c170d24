"""Forward model: generator, semigroup, sources, and the mild solution.

The generator A is multiplication by a real symbol a(x) on the grid, so the
semigroup acts nodewise as T(t)f = e^{a(x)t} f(x) and A is self-adjoint.
The mild solution of  u' = Au + F,  u(0) = u0  with

    F(t) = sum_j h_j e^{-rho_j (t - t_j)} 1[t >= t_j] + eta(t)

is  u(t) = T(t)u0 + sum_{t_j < t} int_{t_j}^t T(t-s) h_j e^{-rho_j(s-t_j)} ds
         + int_0^t T(t-s) eta(s) ds.

Catalyst terms have a nodewise closed form; the background convolution is
computed by composite Gauss quadrature.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputError, ModelError
from .hilbert import GridFunction, _check_same_nodes, gauss_panels, norm

SINGULAR_TOL = 1e-9
DEFAULT_BETA_Q = 1e-3


@dataclass(frozen=True)
class MultiplicationGenerator:
    """A = multiplication by the real symbol a(x); A* = A."""

    symbol: GridFunction

    def semigroup(self, t, f):
        """T(t)f, nodewise e^{a(x)t} f(x).  T(0) is the exact identity."""
        _check_same_nodes(self.symbol, f)
        if t == 0.0:
            return f
        return GridFunction(np.exp(self.symbol.values * t) * f.values)

    def apply(self, f):
        """A f = a(x) f(x); also the adjoint action A* f."""
        _check_same_nodes(self.symbol, f)
        return GridFunction(self.symbol.values * f.values)


@dataclass(frozen=True)
class Catalyst:
    """One source term h e^{-rho (t - t_intake)} active from t_intake on."""

    h: GridFunction
    rho: float
    t_intake: float

    def __post_init__(self):
        if self.rho <= 0:
            raise InputError("catalyst decay rate must be positive")
        if self.t_intake < 0:
            raise InputError("intake time must be nonnegative")


_BACKGROUND_KINDS = ("exp_decay", "sinusoid", "zero")


@dataclass(frozen=True)
class BackgroundSource:
    """Background forcing eta(t)(x) = profile(x) * weight(t).

    kinds: exp_decay -> weight e^{-Lt}; sinusoid -> weight sin(Lt);
    zero -> no background.  With ||profile|| <= 1 both kinds are Lipschitz
    in t with constant L.
    """

    kind: str
    L: float
    profile: GridFunction

    def __post_init__(self):
        if self.kind not in _BACKGROUND_KINDS:
            raise InputError("unknown background kind %r" % self.kind)
        if self.L < 0:
            raise InputError("Lipschitz constant must be nonnegative")

    def weight(self, t):
        t = np.asarray(t, dtype=float)
        if self.kind == "exp_decay":
            return np.exp(-self.L * t)
        if self.kind == "sinusoid":
            return np.sin(self.L * t)
        return np.zeros_like(t)

    def at(self, t):
        return GridFunction(self.profile.values * float(self.weight(t)))

    @property
    def is_zero(self):
        return self.kind == "zero" or (
            self.kind == "sinusoid" and self.L == 0.0)


def zero_background(nodes):
    return BackgroundSource("zero", 0.0, GridFunction(np.zeros(nodes)))


@dataclass(frozen=True)
class SourceModel:
    """Catalysts plus background, with the a-priori constants of the theory.

    H bounds the catalyst masses sup_j ||h_j||; D is the guaranteed extra
    separation between intake times; [rho_lo, rho_hi] brackets the decay
    rates.
    """

    u0: GridFunction
    catalysts: tuple
    background: BackgroundSource
    D: float
    H: float
    rho_lo: float
    rho_hi: float

    def __post_init__(self):
        object.__setattr__(self, "catalysts", tuple(self.catalysts))
        if not (0 < self.rho_lo <= self.rho_hi):
            raise ModelError("need 0 < rho_lo <= rho_hi")
        if self.D <= 0:
            raise ModelError("separation D must be positive")
        times = [c.t_intake for c in self.catalysts]
        if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
            raise ModelError("catalysts must be ordered by intake time")
        for c in self.catalysts:
            if not (self.rho_lo - 1e-12 <= c.rho <= self.rho_hi + 1e-12):
                raise ModelError(
                    "catalyst rate %g outside [rho_lo, rho_hi] = [%g, %g]"
                    % (c.rho, self.rho_lo, self.rho_hi))
            if norm(c.h) > self.H + 1e-9:
                raise ModelError(
                    "catalyst mass %g exceeds bound H = %g"
                    % (norm(c.h), self.H))

    @property
    def nodes(self):
        return self.u0.nodes


def catalyst_response(a, c, t):
    """int_{t_j}^t T(t-s) h e^{-rho(s-t_j)} ds, nodewise closed form."""
    if t < c.t_intake:
        raise InputError(
            "catalyst_response asked at t = %g before intake %g"
            % (t, c.t_intake))
    return GridFunction(_catalyst_values(a.symbol.values, c, np.asarray([t]))[0])


def _catalyst_values(avals, c, ts):
    """Catalyst response values, shape (len(ts), nodes); 0 before intake."""
    dt = ts - c.t_intake
    dt = np.where(dt > 0, dt, 0.0)
    denom = avals + c.rho
    singular = np.abs(denom) < SINGULAR_TOL
    safe = np.where(singular, 1.0, denom)
    grow = np.exp(np.outer(dt, avals))
    decay = np.exp(-c.rho * dt)[:, None]
    regular = (grow - decay) / safe
    limit = dt[:, None] * decay
    out = np.where(singular[None, :], limit, regular) * c.h.values[None, :]
    return np.where((dt > 0)[:, None], out, 0.0)


def forcing_values(model, ts):
    """F(t) = catalyst sum + background, shape (len(ts), nodes)."""
    ts = np.asarray(ts, dtype=float)
    out = np.zeros((ts.size, model.nodes))
    for c in model.catalysts:
        dt = ts - c.t_intake
        active = dt >= 0
        out[active] += np.outer(np.exp(-c.rho * dt[active]), c.h.values)
    if not model.background.is_zero:
        out += np.outer(model.background.weight(ts),
                        model.background.profile.values)
    return out


def background_exp_oracle(a, bg, t):
    """Closed-form background convolution for kind = exp_decay.

    int_0^t e^{a(x)(t-s)} e^{-Ls} ds * profile(x)
        = profile(x) (e^{a(x)t} - e^{-Lt}) / (a(x) + L),
    with the removable-singularity limit t e^{-Lt} when a(x) + L ~ 0.
    """
    if bg.kind != "exp_decay":
        raise InputError("closed form available for exp_decay only")
    avals = a.symbol.values
    denom = avals + bg.L
    singular = np.abs(denom) < SINGULAR_TOL
    safe = np.where(singular, 1.0, denom)
    regular = (np.exp(avals * t) - np.exp(-bg.L * t)) / safe
    limit = t * np.exp(-bg.L * t)
    return GridFunction(bg.profile.values * np.where(singular, limit, regular))


class Trajectory:
    """Evaluates the mild solution u(t) for t in [0, horizon].

    The background convolution int_0^t e^{a(t-s)} w(s) ds profile is written
    as profile * e^{at} * C(t) with C(t) = int_0^t e^{-as} w(s) ds; C is
    accumulated once on a fine panel grid and completed per query by a
    partial-panel Gauss rule, so batched evaluation stays cheap.
    """

    def __init__(self, model, a, horizon, beta_q=DEFAULT_BETA_Q, gl_order=8):
        if horizon <= 0:
            raise InputError("horizon must be positive")
        _check_same_nodes(model.u0, a.symbol)
        self.model = model
        self.generator = a
        self.horizon = float(horizon)
        self.beta_q = float(beta_q)
        self.gl_order = int(gl_order)
        self._xr, self._wr = np.polynomial.legendre.leggauss(self.gl_order)
        bg = model.background
        if bg.is_zero:
            self._ccum = None
        else:
            n_panels = int(np.ceil(self.horizon / self.beta_q))
            edges = np.linspace(0.0, n_panels * self.beta_q, n_panels + 1)
            avals = a.symbol.values
            # per-panel Gauss contributions to C, then prefix sums
            half = self.beta_q / 2.0
            mids = (edges[:-1] + edges[1:]) / 2.0
            s = mids[:, None] + half * self._xr[None, :]
            w = bg.weight(s) * (half * self._wr[None, :])
            contrib = np.einsum("pm,pmx->px", w,
                                np.exp(-np.multiply.outer(s, avals)))
            ccum = np.zeros((n_panels + 1, avals.size))
            np.cumsum(contrib, axis=0, out=ccum[1:])
            self._edges = edges
            self._ccum = ccum

    def state(self, t):
        return GridFunction(self.state_values(np.asarray([t]))[0])

    def state_values(self, ts, chunk=1024):
        """u(t) for each t in ts, shape (len(ts), nodes)."""
        ts = np.asarray(ts, dtype=float)
        if np.any(ts < 0) or np.any(ts > self.horizon + 1e-12):
            raise InputError("trajectory evaluated outside [0, horizon]")
        out = np.empty((ts.size, self.model.nodes))
        for lo in range(0, ts.size, chunk):
            sl = slice(lo, min(lo + chunk, ts.size))
            out[sl] = self._state_chunk(ts[sl])
        return out

    def _state_chunk(self, ts):
        avals = self.generator.symbol.values
        grow = np.exp(np.outer(ts, avals))
        u = grow * self.model.u0.values[None, :]
        for c in self.model.catalysts:
            u += _catalyst_values(avals, c, ts)
        if self._ccum is not None:
            u += grow * self.model.background.profile.values[None, :] \
                * self._background_c(ts)
        return u

    def _background_c(self, ts):
        """C(t) = int_0^t e^{-as} w(s) ds for each t, shape (nt, nodes)."""
        bg = self.model.background
        idx = np.minimum((ts / self.beta_q).astype(int),
                         self._ccum.shape[0] - 1)
        base = self._ccum[idx]
        lo = self._edges[idx]
        half = (ts - lo) / 2.0
        mids = (ts + lo) / 2.0
        s = mids[:, None] + half[:, None] * self._xr[None, :]
        w = bg.weight(s) * (half[:, None] * self._wr[None, :])
        avals = self.generator.symbol.values
        part = np.einsum("pm,pmx->px", w,
                         np.exp(-np.multiply.outer(s, avals)))
        return base + part


def evolve_state(model, a, t, q=None, beta_q=DEFAULT_BETA_Q):
    """Mild solution u(t) evaluated directly (no trajectory cache).

    The background convolution uses composite Gauss quadrature with at
    least ceil(t / beta_q) panels.  `q` may override the panel count.
    """
    if t < 0:
        raise InputError("evolve_state asked at negative time")
    avals = a.symbol.values
    u = np.exp(avals * t) * model.u0.values
    for c in model.catalysts:
        if c.t_intake < t:
            u += _catalyst_values(avals, c, np.asarray([t]))[0]
    bg = model.background
    if not bg.is_zero and t > 0:
        panels = max(int(np.ceil(t / beta_q)), 1)
        if q is not None:
            panels = max(panels, q.panels)
        s, w = gauss_panels(0.0, t, panels, 8)
        kernel = np.exp(np.multiply.outer(t - s, avals))
        u += bg.profile.values * np.einsum(
            "m,mx->x", w * bg.weight(s), kernel)
    return GridFunction(u)
