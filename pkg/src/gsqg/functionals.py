"""Dissipation and velocity-modulus functionals of a modulus of continuity.

``upsilon_beta`` is the (negative) nonlocal dissipation bound

    c_beta * [ int_0^{xi/2} (omega(xi+2e) + omega(xi-2e) - 2 omega(xi)) / e**(1+beta) de
             + int_{xi/2}^inf (omega(2e+xi) - omega(2e-xi) - 2 omega(xi)) / e**(1+beta) de ]

and ``omega1`` is the velocity modulus

    c_alpha * [ int_0^xi omega(e) / e**(1+alpha) de + xi int_xi^inf omega(e) / e**(2+alpha) de ].

Both are evaluated for a whole array of ``xi`` at once with the batched
adaptive rule in logarithmic variables, with every breakpoint-induced kink of
the integrand placed on a segment end.  Ranges too small or too large for the
quadrature are closed with analytic end pieces.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError
from .moc import Moc
from .quadrature import integrate_segments, partition

_N_UNIFORM = 24          # initial segments per integral (in log variable)
_SMOOTH_CUTOFF = 1e-6    # relative size of the Taylor-closed sliver near e = 0
_LOW_TAU = 1e-14         # relative lower cutoff of the outer integral
_FAR = 1e8               # relative upper cutoff when the modulus is not eventually constant


@dataclass
class QuadResult:
    value: np.ndarray
    error: np.ndarray

    def __iter__(self):
        return iter((self.value, self.error))


def _as_xi(xi):
    arr = np.atleast_1d(np.asarray(xi, dtype=float))
    if np.any(~(arr > 0)) or np.any(~np.isfinite(arr)):
        raise ParameterError("xi must be positive and finite")
    return arr


def _log_quad(fun, lo, hi, cuts, rtol, atol):
    """``int_lo^hi fun(t, pid) dt`` per problem, integrated in ``s = log t``."""
    n = lo.size
    slo, shi = np.log(lo), np.log(hi)
    frac = np.arange(1, _N_UNIFORM) / _N_UNIFORM
    uniform = slo[:, None] + (shi - slo)[:, None] * frac[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        kc = np.where(cuts > 0, np.log(np.where(cuts > 0, cuts, 1.0)), np.nan)
    allcuts = np.concatenate([kc, uniform], axis=1)
    seg_lo, seg_hi, pid = partition(slo, shi, allcuts)

    def g(s, p):
        t = np.exp(s)
        return fun(t, p) * t

    return integrate_segments(g, seg_lo, seg_hi, pid, n, rtol=rtol, atol=atol)


def _check_concave(moc, require_concave):
    if require_concave and not moc.concave:
        raise ParameterError(
            f"modulus ({moc.family}) is not concave and non-decreasing; "
            "pass require_concave=False to evaluate anyway")


def upsilon_beta(moc: Moc, xi, beta, c_beta=1.0, *, rtol=1e-10,
                 require_concave=True) -> QuadResult:
    """Dissipation functional at each ``xi`` (value and error estimate).

    Returns ``-inf`` where ``xi`` is exactly a breakpoint and ``beta >= 1``
    (the inner integral diverges at a kink).
    """
    if not 0 < beta < 2:
        raise ParameterError("dissipation functional needs 0 < beta < 2")
    _check_concave(moc, require_concave)
    xi = _as_xi(xi)
    n = xi.size
    bp = moc.breakpoints
    om_xi = moc.eval(xi)

    at_kink = np.isin(xi, bp)
    value = np.zeros(n)
    error = np.zeros(n)

    # absolute floor: a small fraction of the size of the outer integral's tail term
    scale = 2 * np.abs(om_xi) * (xi / 2) ** (-beta) / beta
    atol = 1e-13 * scale

    # inner integral, e in ]0, xi/2]
    if bp.size:
        d = np.min(np.abs(xi[:, None] - bp[None, :]), axis=1)
        d = np.where(d > 0, d, np.inf)
    else:
        d = np.full(n, np.inf)
    eta_c = _SMOOTH_CUTOFF * np.minimum(xi / 2, d / 2)
    jump = np.zeros(n)
    if at_kink.any():
        xk = xi[at_kink]
        jump[at_kink] = moc.deriv(xk, "right") - moc.deriv(xk, "left")
        eta_c[at_kink] = _SMOOTH_CUTOFF * xk / 2
    # sliver below eta_c from the local expansion
    sliver = np.zeros(n)
    smooth = ~at_kink
    if smooth.any():
        w2 = moc.deriv2(xi[smooth])
        sliver[smooth] = 4 * w2 * eta_c[smooth] ** (2 - beta) / (2 - beta)
    if at_kink.any():
        if beta >= 1:
            sliver[at_kink] = -np.inf
        else:
            sliver[at_kink] = 2 * jump[at_kink] * eta_c[at_kink] ** (1 - beta) / (1 - beta)

    # e in ]0, xi/4]: step h = 2e measured from xi
    cuts_a = np.abs(xi[:, None] - bp[None, :]) / 2 if bp.size else np.empty((n, 0))

    def inner_a(e, p):
        return moc.second_difference(xi[p], 2 * e) / e ** (1 + beta)

    # e in [xi/4, xi/2[: parametrized by the lower point r = xi - 2e, so that
    # omega(r) is evaluated at an exactly known argument
    cuts_b = (np.concatenate([np.broadcast_to(bp[None, :], (n, bp.size)),
                              2 * xi[:, None] - bp[None, :]], axis=1)
              if bp.size else np.empty((n, 0)))

    def inner_b(r, p):
        x = xi[p]
        L = x - r
        sd = moc.forward(x, L) - moc.forward(r, L)
        return 0.5 * sd / (L / 2) ** (1 + beta)

    live = np.isfinite(sliver)
    if live.any():
        xl = xi[live]
        ra = _log_quad(inner_a, eta_c[live], xl / 4, cuts_a[live], rtol, atol[live])
        r_lo = _LOW_TAU * xl
        rb = _log_quad(lambda r, p: inner_b(r, np.flatnonzero(live)[p]),
                       r_lo, xl / 2, cuts_b[live], rtol, atol[live])
        low_b = inner_b(r_lo, np.flatnonzero(live)) * r_lo
        value[live] += ra.value + rb.value + low_b + sliver[live]
        error[live] += ra.error + rb.error + np.abs(low_b)
    value[~live] = -np.inf

    # outer integral, e = xi/2 + tau, tau in ]0, inf[
    tau_lo = _LOW_TAU * xi
    if moc.eventually_constant and bp.size:
        tau_hi = np.full(n, bp[-1] / 2)
    elif bp.size:
        tau_hi = _FAR * np.maximum(xi, bp[-1])
    else:
        tau_hi = _FAR * xi
    tau_hi = np.maximum(tau_hi, 4 * tau_lo)
    outer_cuts = (np.concatenate([bp[None, :] / 2 - xi[:, None],
                                  np.broadcast_to(bp[None, :] / 2, (n, bp.size))], axis=1)
                  if bp.size else np.empty((n, 0)))

    def outer(t, p):
        x = xi[p]
        num = moc.forward(2 * t, 2 * x) - 2 * om_xi[p]
        return num / (t + x / 2) ** (1 + beta)

    r2 = _log_quad(outer, tau_lo, tau_hi, outer_cuts, rtol, atol)
    # ]0, tau_lo[ : integrand is bounded there
    low = outer(tau_lo, np.arange(n)) * tau_lo
    eta_hi = tau_hi + xi / 2
    tail = -2 * om_xi * eta_hi ** (-beta) / beta
    if moc.eventually_constant and bp.size:
        tail_err = np.zeros(n)
    else:
        # increment part of the tail, about 2 xi omega'(2 eta) per unit eta
        tail_inc = 2 * xi * moc.deriv(2 * eta_hi) * eta_hi ** (-beta) / beta
        tail = tail + tail_inc
        tail_err = np.abs(tail_inc)
    fin = np.isfinite(value)
    value[fin] += r2.value[fin] + low[fin] + tail[fin]
    error += r2.error + np.abs(low) + tail_err
    return QuadResult(c_beta * value, c_beta * error)


def omega1(moc: Moc, xi, alpha, c_alpha=1.0, *, rtol=1e-10,
           require_concave=True) -> QuadResult:
    """Velocity modulus at each ``xi`` (value and error estimate)."""
    if not 0 <= alpha < 1:
        raise ParameterError("velocity modulus needs 0 <= alpha < 1")
    _check_concave(moc, require_concave)
    xi = _as_xi(xi)
    n = xi.size
    bp = moc.breakpoints
    cuts = np.broadcast_to(bp[None, :], (n, bp.size))
    atol = 1e-15 * np.abs(moc.eval(xi)) * xi ** (-alpha)

    # int_0^xi omega / e**(1+alpha): exact on the first piece, quadrature beyond
    first_end = np.minimum(xi, bp[0]) if bp.size else xi.copy()
    head = moc.origin_moment(-1.0 - alpha, first_end)

    def near(e, p):
        return moc.eval(e) / e ** (1 + alpha)

    value = np.asarray(head, dtype=float).copy()
    error = np.zeros(n)
    need = xi > first_end
    if need.any():
        r = _log_quad(near, first_end[need], xi[need], cuts[need], rtol, atol[need])
        value[need] += r.value
        error[need] += r.error

    # xi * int_xi^inf omega / e**(2+alpha)
    def far(e, p):
        return moc.eval(e) / e ** (2 + alpha)

    if moc.eventually_constant:
        H = moc.sup
        end = np.maximum(xi, bp[-1]) if bp.size else xi.copy()
        tail = H * end ** (-1 - alpha) / (1 + alpha)
        tail_err = np.zeros(n)
    else:
        end = _FAR * np.maximum(xi, bp[-1] if bp.size else 0.0)
        om_end = moc.eval(end)
        g = end * moc.deriv(end) / om_end
        tail = om_end * end ** (-1 - alpha) / (1 + alpha - g)
        # exact for a pure power; otherwise bounded by the drift of the local exponent
        g_half = 0.5 * end * moc.deriv(0.5 * end) / moc.eval(0.5 * end)
        tail_err = np.abs(tail * (g - g_half) / (1 + alpha - g))
    outer = tail.copy()
    need = end > xi
    if need.any():
        r = _log_quad(far, xi[need], end[need], cuts[need], rtol, atol[need] / xi[need])
        outer[need] += r.value
        error[need] += xi[need] * r.error
    value += xi * outer
    error += xi * tail_err
    return QuadResult(c_alpha * value, c_alpha * error)
