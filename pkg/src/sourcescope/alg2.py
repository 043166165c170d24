"""Algorithm 2: Prony-Laplace detection and recovery from Delta_{s,l}.

The detector works on Delta_{s,l}(g) = m_{s,l} - m_{0,l} with
s = 2 pi i k / beta.  Detection fires when some sensor has
|Delta_l - Delta_{l-1}| > Q_*(g) = Q_1(g) + rho_hi H ||g||; the per-sensor
coefficient gate is |Delta_{l+1} - Delta_{l-2}| > Q_3(g).  Thresholds use
a locally updated Lipschitz constant L_l that absorbs the tails of
previous catalysts.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .hilbert import norm


@dataclass(frozen=True)
class Alg2Params:
    beta: float
    sigma: float
    D: float
    H: float
    L: float
    rho_lo: float
    rho_hi: float
    sensors: tuple
    k: int = 1
    ell0: int = 3

    def __post_init__(self):
        object.__setattr__(self, "sensors", tuple(self.sensors))
        if self.k == 0:
            raise InputError("frequency index k must be nonzero")
        if self.beta >= 2 * np.pi * abs(self.k) / self.rho_hi:
            raise InputError(
                "need beta < 2 pi k / rho_hi (beta = %g, bound = %g)"
                % (self.beta, 2 * np.pi * abs(self.k) / self.rho_hi))
        if self.ell0 < 2:
            raise InputError("ell0 must be >= 2 so Delta_{l-2} exists")
        if not self.sensors:
            raise InputError("need at least one sensor")
        if not (0 < self.rho_lo <= self.rho_hi):
            raise InputError("need 0 < rho_lo <= rho_hi")


@dataclass
class Alg2Event:
    j: int
    t_hat: float
    det_index: int
    L_ell: float
    coeffs: dict
    im_residuals: dict
    M_values: dict
    rates: dict
    case_tags: dict
    rho_tilde: float = None
    chosen_sensor: str = None


def lipschitz_local(ell, p, ell0=None):
    """Local Lipschitz constant L_l for the forcing on [l beta, inf).

    L_l = L + H rho_hi e^{(l0 - l) beta} / (1 - e^{-rho_lo (4 beta + D)});
    the exponential tail covers catalysts taken in before l0.
    """
    l0 = p.ell0 if ell0 is None else ell0
    tail = p.H * p.rho_hi * np.exp((l0 - ell) * p.beta) \
        / -np.expm1(-p.rho_lo * (4 * p.beta + p.D))
    return p.L + tail


def thresholds_alg2(g, L_ell, p):
    """(Q1, Q2, Q3, Q*) with Qn = (4n/pi) L_l ||g|| + 4 sigma."""
    gn = norm(g)
    q = [(4.0 * n / np.pi) * L_ell * gn + 4.0 * p.sigma for n in (1, 2, 3)]
    q_star = q[0] + p.rho_hi * p.H * gn
    return q[0], q[1], q[2], q_star


def _coeff_factor(rho, s, beta):
    """rho (rho + s) beta^2 / (s (e^{-2 rho beta} - e^{-rho beta}))."""
    return rho * (rho + s) * beta ** 2 \
        / (s * (np.exp(-2 * rho * beta) - np.exp(-rho * beta)))


def run_alg2(streams, p):
    """Scan the Delta streams and return one Alg2Event per intake found.

    The rate estimate of each gated sensor is
    Re[(Delta_{l+1} - Delta_{l+2}) / (beta (Delta_{l+1} - Delta_{l-2}))]
    clamped to [rho_lo, rho_hi]; its limit for a lone catalyst is
    (1 - e^{-rho beta}) / beta.  The event rate rho~ is taken from the
    sensor with the largest M(g) (best-conditioned denominator).  The
    coefficient converts the same difference back through the closed-form
    factor evaluated at the sensor's clamped rate; its imaginary part is
    logged as a numerics diagnostic.
    """
    s = 2j * np.pi * p.k / p.beta
    skip = 5 + int(np.floor(p.D / p.beta))
    ell_max = streams.n_max
    events = []
    ell = p.ell0
    while ell <= ell_max - 2:
        l_ell = lipschitz_local(ell - 2, p)
        fired = False
        for sid, g in p.sensors:
            _, _, _, q_star = thresholds_alg2(g, l_ell, p)
            if abs(streams.delta(ell, sid)
                   - streams.delta(ell - 1, sid)) > q_star:
                fired = True
                break
        if not fired:
            ell += 1
            continue
        coeffs, im_res, m_vals, rates, tags = {}, {}, {}, {}, {}
        for sid, g in p.sensors:
            _, _, q3, _ = thresholds_alg2(g, l_ell, p)
            diff = streams.delta(ell + 1, sid) - streams.delta(ell - 2, sid)
            m_vals[sid] = p.beta * abs(diff)
            if abs(diff) > q3:
                ratio = (streams.delta(ell + 1, sid)
                         - streams.delta(ell + 2, sid)) / (p.beta * diff)
                rate = min(max(ratio.real, p.rho_lo), p.rho_hi)
                rates[sid] = rate
                raw = _coeff_factor(rate, s, p.beta) * diff
                coeffs[sid] = raw.real
                im_res[sid] = abs(raw.imag)
                tags[sid] = "full"
            else:
                rates[sid] = None
                coeffs[sid] = 0.0
                im_res[sid] = 0.0
                tags[sid] = "coeff_zero"
        event = Alg2Event(
            j=len(events) + 1, t_hat=ell * p.beta, det_index=ell,
            L_ell=l_ell, coeffs=coeffs, im_residuals=im_res,
            M_values=m_vals, rates=rates, case_tags=tags)
        gated = [sid for sid, _ in p.sensors if tags[sid] == "full"]
        if gated:
            best = max(gated, key=lambda sid: m_vals[sid])
            event.chosen_sensor = best
            event.rho_tilde = rates[best]
        events.append(event)
        ell += skip
    return events


def monotone_gap(x, a, beta):
    """g_a(x) = |1 - f(x)/f(x+a)| with f(x) = (e^{beta x} - 1)/x.

    This is the quantity controlled by the monotonicity lemma behind the
    local Lipschitz update: g_a is nondecreasing on [0, inf) and bounded
    by e^{|a| beta} - 1.  Evaluated in log space so that large beta*x does
    not overflow.
    """
    def logf(z):
        z = np.asarray(z, dtype=float)
        out = np.empty_like(z)
        big = beta * z > 50.0
        zero = z == 0.0
        rest = ~(big | zero)
        out[big] = beta * z[big] - np.log(z[big])
        out[zero] = np.log(beta)
        out[rest] = np.log(np.expm1(beta * z[rest]) / z[rest])
        return out

    x = np.asarray(x, dtype=float)
    return np.abs(1.0 - np.exp(logf(x) - logf(x + a)))


def prony_rate_limit_check(rho, t_j, ell, beta, k=1):
    """Rate-estimator value on noiseless closed-form Deltas (unit <h,g>).

    For an intake at t_j in [l beta, (l+1) beta], evaluates
    (Delta_{l+1} - Delta_{l+2}) / (beta Delta_{l+1}) from the closed forms;
    in exact arithmetic this equals (1 - e^{-rho beta}) / beta, which
    converges to rho as beta -> 0 with error <= rho^2 beta / 2.
    """
    s = 2j * np.pi * k / beta

    def delta_after(m):
        # eq for t_j < m beta: s (e^{rho(t_j-(m+1)b)} - e^{rho(t_j-mb)})
        #                      / (rho (rho + s) b^2)
        return s * (np.exp(rho * (t_j - (m + 1) * beta))
                    - np.exp(rho * (t_j - m * beta))) \
            / (rho * (rho + s) * beta ** 2)

    d1 = delta_after(ell + 1)
    d2 = delta_after(ell + 2)
    return ((d1 - d2) / (beta * d1)).real
