"""Moduli of continuity: piecewise closed-form descriptors and the families.

A :class:`Moc` is a continuous, non-decreasing, concave function on
``]0, inf[`` assembled from closed-form pieces.  Values are evaluated in a
"raw" coordinate ``x = lam * xi`` and multiplied by ``amp``, which is how the
scaling ``lam**(beta-alpha-1) * omega(lam*xi)`` is represented exactly.

Differences of values (``increment``, ``second_difference``) are computed
piece by piece in cancellation-free form, because the dissipation functional
integrates second differences over many orders of magnitude of the step.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .errors import ParameterError

_TAYLOR_T = 1e-3
_SERIES_T = 0.5


def _power_second_diff_ratio(p, t):
    """``(1+t)**p + (1-t)**p - 2`` for ``0 <= t <= 1`` without cancellation."""
    t = np.asarray(t, dtype=float)
    out = np.empty_like(t)
    small = t < _SERIES_T
    if small.any():
        ts = t[small]
        acc = np.zeros_like(ts)
        coef = 1.0
        tn = np.ones_like(ts)
        for n in range(1, 64):
            coef *= (p - n + 1) / n
            tn = tn * ts
            if n % 2 == 0:
                acc += coef * tn
        out[small] = 2.0 * acc
    big = ~small
    if big.any():
        tb = t[big]
        out[big] = (1 + tb) ** p + (1 - tb) ** p - 2.0
    return out


def _pow_forward(p, a, L):
    """``(a + L)**p - a**p`` for ``a >= 0``, ``L >= 0`` without cancellation."""
    a, L = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(L, dtype=float))
    out = np.empty(a.shape)
    zero = a <= 0
    out[zero] = L[zero] ** p
    nz = ~zero
    an = a[nz]
    out[nz] = an ** p * np.expm1(p * np.log1p(L[nz] / an))
    return out


def _pow_backward(p, b, L):
    """``b**p - (b - L)**p`` for ``0 <= L <= b`` without cancellation."""
    b = np.asarray(b, dtype=float)
    with np.errstate(divide="ignore"):
        return -(b ** p) * np.expm1(p * np.log1p(-np.asarray(L, dtype=float) / b))


class Piece:
    """One closed-form piece; all methods act on raw coordinates."""

    kind = "piece"
    origin_exponent = 0.0   # omega ~ x**g near 0 (first piece only)
    growth_exponent = 0.0   # omega ~ x**g at infinity (last piece only)

    def value(self, x):
        raise NotImplementedError

    def d1(self, x):
        raise NotImplementedError

    def d2(self, x):
        raise NotImplementedError

    def forward(self, a, L):
        """``value(a + L) - value(a)``."""
        return self.value(a + L) - self.value(a)

    def backward(self, b, L):
        """``value(b) - value(b - L)``."""
        return self.value(b) - self.value(b - L)

    def second_diff(self, x, h):
        return self.forward(x, h) - self.backward(x, h)

    def origin_moment(self, p, x):
        """``int_0^x value(eta) * eta**p d eta``; raises if divergent."""
        raise ParameterError(f"{self.kind} piece has no origin moment")

    def inverse(self, y, lo, hi):
        f = lambda s: float(self.value(np.array([s]))[0]) - y
        return brentq(f, lo, hi, xtol=1e-15 * max(hi, 1e-300), rtol=1e-15, maxiter=500)

    @property
    def sup(self):
        return math.inf

    def describe(self):
        return {"kind": self.kind}


class PowerPiece(Piece):
    kind = "power"

    def __init__(self, coef, p):
        self.coef = float(coef)
        self.p = float(p)
        self.origin_exponent = self.p
        self.growth_exponent = self.p

    def value(self, x):
        return self.coef * np.asarray(x, dtype=float) ** self.p

    def d1(self, x):
        with np.errstate(divide="ignore"):
            return self.coef * self.p * np.asarray(x, dtype=float) ** (self.p - 1)

    def d2(self, x):
        with np.errstate(divide="ignore"):
            return self.coef * self.p * (self.p - 1) * np.asarray(x, dtype=float) ** (self.p - 2)

    def forward(self, a, L):
        return self.coef * _pow_forward(self.p, a, L)

    def backward(self, b, L):
        return self.coef * _pow_backward(self.p, b, L)

    def second_diff(self, x, h):
        x = np.asarray(x, dtype=float)
        return self.coef * x ** self.p * _power_second_diff_ratio(self.p, h / x)

    def origin_moment(self, p, x):
        e = self.p + p + 1
        if e <= 0:
            raise ParameterError(
                f"near-origin integral of eta**{self.p:g} * eta**{p:g} diverges")
        return self.coef * np.asarray(x, dtype=float) ** e / e

    def inverse(self, y, lo, hi):
        return (y / self.coef) ** (1.0 / self.p)

    def describe(self):
        return {"kind": self.kind, "coef": self.coef, "exponent": self.p}


class AffinePiece(Piece):
    kind = "affine"

    def __init__(self, slope, intercept):
        self.a = float(slope)
        self.b = float(intercept)
        self.origin_exponent = 1.0 if self.b == 0 else 0.0
        self.growth_exponent = 1.0 if self.a > 0 else 0.0

    def value(self, x):
        return self.a * np.asarray(x, dtype=float) + self.b

    def d1(self, x):
        return np.full(np.shape(x), self.a)

    def d2(self, x):
        return np.zeros(np.shape(x))

    def forward(self, a, L):
        return self.a * np.broadcast_to(np.asarray(L, dtype=float), np.broadcast(a, L).shape)

    backward = forward

    def second_diff(self, x, h):
        return np.zeros(np.broadcast(x, h).shape)

    def origin_moment(self, p, x):
        x = np.asarray(x, dtype=float)
        if self.b != 0 and p + 1 <= 0:
            raise ParameterError(
                "near-origin integral diverges: omega(0+) > 0 (condition (a) modulus)")
        if p + 2 <= 0:
            raise ParameterError("near-origin integral of a linear piece diverges")
        out = self.a * x ** (p + 2) / (p + 2)
        if self.b != 0:
            out = out + self.b * x ** (p + 1) / (p + 1)
        return out

    def inverse(self, y, lo, hi):
        return (y - self.b) / self.a

    @property
    def sup(self):
        return math.inf if self.a > 0 else self.b

    def describe(self):
        return {"kind": self.kind, "slope": self.a, "intercept": self.b}


class CubicRootPiece(Piece):
    """``x - x**1.5``, the head piece of the subcritical modulus."""

    kind = "x_minus_x32"
    origin_exponent = 1.0

    def value(self, x):
        x = np.asarray(x, dtype=float)
        return x - x ** 1.5

    def d1(self, x):
        return 1.0 - 1.5 * np.sqrt(np.asarray(x, dtype=float))

    def d2(self, x):
        with np.errstate(divide="ignore"):
            return -0.75 / np.sqrt(np.asarray(x, dtype=float))

    def forward(self, a, L):
        return np.asarray(L, dtype=float) - _pow_forward(1.5, a, L)

    def backward(self, b, L):
        return np.asarray(L, dtype=float) - _pow_backward(1.5, b, L)

    def second_diff(self, x, h):
        x = np.asarray(x, dtype=float)
        return -(x ** 1.5) * _power_second_diff_ratio(1.5, h / x)

    def origin_moment(self, p, x):
        if p + 2 <= 0:
            raise ParameterError("near-origin integral diverges")
        x = np.asarray(x, dtype=float)
        return x ** (p + 2) / (p + 2) - x ** (p + 2.5) / (p + 2.5)


class LogTailPiece(Piece):
    """Tail with ``omega' = gamma / (4 (x + x**beta))`` started at ``(x0, y0)``.

    The antiderivative is ``log1p(x**(1-beta)) / (1-beta)`` (``log x / 2``
    when ``beta == 1``), so values and the limit at infinity are closed form.
    """

    kind = "log_tail"

    def __init__(self, x0, y0, gamma, beta):
        self.x0 = float(x0)
        self.y0 = float(y0)
        self.gamma = float(gamma)
        self.beta = float(beta)
        if self.beta != 1.0:
            self._A = self.gamma / (4.0 * (self.beta - 1.0))
            self._G0 = math.log1p(self.x0 ** (1.0 - self.beta))

    def _G(self, x):
        return np.log1p(np.asarray(x, dtype=float) ** (1.0 - self.beta))

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self.beta == 1.0:
            return self.y0 + self.gamma / 8.0 * np.log(x / self.x0)
        return self.y0 + self._A * (self._G0 - self._G(x))

    def _q(self, x, order):
        b = self.beta
        if order == 0:
            return x + x ** b
        if order == 1:
            return 1.0 + b * x ** (b - 1)
        if order == 2:
            return b * (b - 1) * x ** (b - 2)
        return b * (b - 1) * (b - 2) * x ** (b - 3)

    def d1(self, x):
        x = np.asarray(x, dtype=float)
        return self.gamma / (4.0 * self._q(x, 0))

    def d2(self, x):
        x = np.asarray(x, dtype=float)
        q, q1 = self._q(x, 0), self._q(x, 1)
        return -self.gamma / 4.0 * q1 / q ** 2

    def d4(self, x):
        x = np.asarray(x, dtype=float)
        q, q1, q2, q3 = (self._q(x, k) for k in range(4))
        return self.gamma / 4.0 * (-6 * q1 ** 3 / q ** 4 + 6 * q1 * q2 / q ** 3 - q3 / q ** 2)

    def forward(self, a, L):
        a = np.asarray(a, dtype=float)
        r = np.log1p(np.asarray(L, dtype=float) / a)
        if self.beta == 1.0:
            return self.gamma / 8.0 * r
        e = 1.0 - self.beta
        ua = a ** e
        # G(a) - G(a+L) = -log1p((u(a+L) - u(a)) / (1 + u(a))),  u = x**(1-beta)
        return -self._A * np.log1p(ua * np.expm1(e * r) / (1.0 + ua))

    def backward(self, b, L):
        b = np.asarray(b, dtype=float)
        with np.errstate(divide="ignore"):
            r = np.log1p(-np.asarray(L, dtype=float) / b)
        if self.beta == 1.0:
            return -self.gamma / 8.0 * r
        e = 1.0 - self.beta
        ub = b ** e
        return self._A * np.log1p(ub * np.expm1(e * r) / (1.0 + ub))

    def second_diff(self, x, h):
        x = np.asarray(x, dtype=float)
        h = np.asarray(h, dtype=float)
        x, h = np.broadcast_arrays(x, h)
        t = h / x
        out = np.empty(x.shape)
        small = t < _TAYLOR_T
        if small.any():
            xs, hs = x[small], h[small]
            out[small] = hs ** 2 * self.d2(xs) + hs ** 4 * self.d4(xs) / 12.0
        big = ~small
        if big.any():
            xb, hb = x[big], h[big]
            out[big] = self.forward(xb, hb) - self.backward(xb, hb)
        return out

    def inverse(self, y, lo, hi):
        if self.beta == 1.0:
            return self.x0 * math.exp(8.0 * (y - self.y0) / self.gamma)
        g = self._G0 - (y - self.y0) / self._A
        return math.expm1(g) ** (1.0 / (1.0 - self.beta))

    @property
    def sup(self):
        if self.beta > 1.0:
            return self.y0 + self._A * self._G0
        return math.inf

    def describe(self):
        return {"kind": self.kind, "x0": self.x0, "y0": self.y0,
                "gamma": self.gamma, "beta": self.beta}


class ConstantPiece(Piece):
    kind = "constant"

    def __init__(self, level):
        self.level = float(level)

    def value(self, x):
        return np.full(np.shape(x), self.level)

    def d1(self, x):
        return np.zeros(np.shape(x))

    def d2(self, x):
        return np.zeros(np.shape(x))

    def forward(self, a, L):
        return np.zeros(np.broadcast(a, L).shape)

    backward = forward

    def second_diff(self, x, h):
        return np.zeros(np.broadcast(x, h).shape)

    def origin_moment(self, p, x):
        if p + 1 <= 0:
            raise ParameterError(
                "near-origin integral diverges: omega(0+) > 0 (condition (a) modulus)")
        return self.level * np.asarray(x, dtype=float) ** (p + 1) / (p + 1)

    @property
    def sup(self):
        return self.level

    def describe(self):
        return {"kind": self.kind, "level": self.level}


def _as_array(xi):
    arr = np.asarray(xi, dtype=float)
    return arr, arr.ndim == 0


@dataclass(frozen=True, eq=False)
class Moc:
    """Piecewise closed-form modulus of continuity.

    ``breaks`` are the interior breakpoints in raw coordinates; piece ``i``
    covers ``]breaks[i-1], breaks[i]]``.  The represented function is
    ``amp * raw(lam * xi)``.
    """

    breaks: tuple
    pieces: tuple
    amp: float = 1.0
    lam: float = 1.0
    family: str = "generic"
    params: dict = field(default_factory=dict)
    approximate: bool = False

    def __post_init__(self):
        if len(self.pieces) != len(self.breaks) + 1:
            raise ParameterError("need exactly one more piece than breakpoints")
        if any(b2 <= b1 for b1, b2 in zip(self.breaks, self.breaks[1:])):
            raise ParameterError("breakpoints must be strictly increasing")
        if self.breaks and self.breaks[0] <= 0:
            raise ParameterError("breakpoints must be positive")
        if self.amp <= 0 or self.lam <= 0:
            raise ParameterError("scaling factors must be positive")

    # ---- raw-coordinate kernels -------------------------------------------
    @cached_property
    def _barr(self):
        return np.asarray(self.breaks, dtype=float)

    @cached_property
    def _edges(self):
        return np.concatenate([[0.0], self._barr, [np.inf]])

    def _index(self, x, side="left"):
        return np.searchsorted(self._barr, x, side=side)

    def _apply(self, method, x, side="left"):
        x = np.asarray(x, dtype=float)
        idx = self._index(x, side)
        out = np.empty(x.shape)
        for i, piece in enumerate(self.pieces):
            m = idx == i
            if m.any():
                out[m] = getattr(piece, method)(x[m])
        return out

    # Increments are split at breakpoints using lengths measured from the
    # given end point, never from rounded far end points; near a breakpoint
    # the subtraction ``edge - a`` is exact.
    def _raw_forward(self, a, L):
        a, L = np.broadcast_arrays(np.asarray(a, dtype=float), np.asarray(L, dtype=float))
        out = np.zeros(a.shape)
        e = self._edges
        for i, piece in enumerate(self.pieces):
            off = e[i] - a
            inside = off <= 0
            start = np.where(inside, a, e[i])
            rem = np.where(inside, L, L - off)
            ln = np.minimum(rem, e[i + 1] - start)
            m = ln > 0
            if m.any():
                out[m] += piece.forward(start[m], ln[m])
        return out

    def _raw_backward(self, b, L):
        b, L = np.broadcast_arrays(np.asarray(b, dtype=float), np.asarray(L, dtype=float))
        out = np.zeros(b.shape)
        e = self._edges
        for i, piece in enumerate(self.pieces):
            off = b - e[i + 1]
            inside = off <= 0
            end = np.where(inside, b, e[i + 1])
            rem = np.where(inside, L, L - off)
            ln = np.minimum(rem, end - e[i])
            m = ln > 0
            if m.any():
                out[m] += piece.backward(end[m], ln[m])
        return out

    # ---- public evaluation -------------------------------------------------
    @property
    def breakpoints(self) -> np.ndarray:
        """Breakpoints in ``xi`` coordinates."""
        return self._barr / self.lam

    def _check_positive(self, xi):
        if np.any(~(xi > 0)):
            raise ParameterError("modulus of continuity is defined for xi > 0 only")

    def eval(self, xi):
        xi, scalar = _as_array(xi)
        self._check_positive(xi)
        out = self.amp * self._apply("value", self.lam * xi)
        return float(out) if scalar else out

    __call__ = eval

    def value_at(self, xi):
        """Like :meth:`eval` but returns ``omega(0+)`` at ``xi == 0``."""
        xi = np.asarray(xi, dtype=float)
        return self.amp * self._apply("value", self.lam * xi)

    def deriv(self, xi, side="right"):
        """One-sided derivative; ``side='max'`` takes the larger one."""
        xi, scalar = _as_array(xi)
        self._check_positive(xi)
        x = self.lam * xi
        if side == "max":
            out = np.maximum(self._apply("d1", x, "left"), self._apply("d1", x, "right"))
        elif side in ("left", "right"):
            out = self._apply("d1", x, side)
        else:
            raise ParameterError(f"unknown side {side!r}")
        out = self.amp * self.lam * out
        return float(out) if scalar else out

    def deriv2(self, xi, side="right"):
        xi, scalar = _as_array(xi)
        self._check_positive(xi)
        out = self.amp * self.lam ** 2 * self._apply("d2", self.lam * xi, side)
        return float(out) if scalar else out

    def increment(self, a, b):
        """``omega(b) - omega(a)`` for ``0 <= a <= b``."""
        a = np.asarray(a, dtype=float)
        return self.forward(a, np.asarray(b, dtype=float) - a)

    def forward(self, a, L):
        """``omega(a + L) - omega(a)`` for ``a >= 0``, ``L >= 0``, computed stably."""
        return self.amp * self._raw_forward(self.lam * np.asarray(a, dtype=float),
                                            self.lam * np.asarray(L, dtype=float))

    def backward(self, b, L):
        """``omega(b) - omega(b - L)`` for ``0 <= L <= b``, computed stably."""
        return self.amp * self._raw_backward(self.lam * np.asarray(b, dtype=float),
                                             self.lam * np.asarray(L, dtype=float))

    def second_difference(self, xi, h):
        """``omega(xi+h) + omega(xi-h) - 2 omega(xi)`` for ``0 < h <= xi``."""
        xi, h = np.broadcast_arrays(np.asarray(xi, dtype=float), np.asarray(h, dtype=float))
        x = self.lam * xi
        hx = self.lam * h
        ic = self._index(x, "left")
        same = (ic == self._index(x + hx, "left")) & (ic == self._index(x - hx, "right"))
        # x sitting exactly on a breakpoint is a kink, never "same piece"
        same &= ~np.isin(x, self._barr)
        out = np.empty(x.shape)
        for i, piece in enumerate(self.pieces):
            m = same & (ic == i)
            if m.any():
                out[m] = piece.second_diff(x[m], hx[m])
        cross = ~same
        if cross.any():
            xc, hc = x[cross], hx[cross]
            out[cross] = self._raw_forward(xc, hc) - self._raw_backward(xc, hc)
        return self.amp * out

    def origin_moment(self, p, xi):
        """``int_0^xi omega(eta) eta**p d eta`` using the first piece only.

        ``xi`` must not exceed the first breakpoint.
        """
        xi = np.asarray(xi, dtype=float)
        if self.breaks and np.any(self.lam * xi > self.breaks[0] * (1 + 1e-12)):
            raise ParameterError("origin moment only covers the first piece")
        raw = self.pieces[0].origin_moment(p, self.lam * xi)
        return self.amp * self.lam ** (-p - 1) * raw

    # ---- metadata ----------------------------------------------------------
    @property
    def omega0(self) -> float:
        """``omega(0+)``."""
        return float(self.amp * self.pieces[0].value(np.array([0.0]))[0])

    @property
    def sup(self) -> float:
        return self.amp * self.pieces[-1].sup

    @property
    def origin_exponent(self) -> float:
        return self.pieces[0].origin_exponent

    @property
    def growth_exponent(self) -> float:
        return self.pieces[-1].growth_exponent

    @cached_property
    def eventually_constant(self) -> bool:
        return isinstance(self.pieces[-1], ConstantPiece)

    @cached_property
    def condition(self) -> str:
        """Which of the (a)/(b)/(c) origin conditions holds, or ``'none'``."""
        first = self.pieces[0]
        if self.omega0 > 0:
            return "a"
        tiny = np.array([1e-300])
        d1 = first.d1(tiny)[0]
        if not np.isfinite(d1) or isinstance(first, PowerPiece) and first.p < 1:
            return "b"
        if isinstance(first, CubicRootPiece):
            return "c"
        return "none"

    def _sample_points(self, n=200):
        if self.breaks:
            lo, hi = min(self.breaks) * 1e-3, max(self.breaks) * 1e3
        else:
            lo, hi = 1e-3, 1e3
        return np.geomspace(lo, hi, n) / self.lam

    @cached_property
    def concavity_report(self) -> dict:
        """Numerical check of monotonicity and concavity on 200 log points."""
        xs = self._sample_points()
        d_right = self.deriv(xs, "right")
        jumps = []
        for b in self.breakpoints:
            left = self.deriv(b, "left")
            right = self.deriv(b, "right")
            jumps.append({"xi": float(b), "left": left, "right": right})
        tol = 1e-12
        increasing = bool(np.all(d_right >= -tol)) and all(j["right"] >= -tol for j in jumps)
        nonincr = bool(np.all(np.diff(d_right) <= tol * np.maximum(1.0, np.abs(d_right[:-1]))))
        d2 = self.deriv2(xs)
        d2_ok = bool(np.all(d2 <= tol * np.maximum(1.0, np.abs(d2))))
        jumps_ok = all(j["left"] >= j["right"] - tol * max(1.0, abs(j["left"])) for j in jumps)
        return {"increasing": increasing, "derivative_nonincreasing": nonincr,
                "second_derivative_nonpositive": d2_ok, "breakpoint_jumps_ok": jumps_ok,
                "jumps": jumps}

    @property
    def concave(self) -> bool:
        r = self.concavity_report
        return (r["increasing"] and r["derivative_nonincreasing"]
                and r["second_derivative_nonpositive"] and r["breakpoint_jumps_ok"])

    def describe(self) -> dict:
        return {"family": self.family, "params": dict(self.params),
                "amp": self.amp, "lam": self.lam,
                "breakpoints": [float(b) for b in self.breakpoints],
                "pieces": [p.describe() for p in self.pieces],
                "condition": self.condition, "approximate": self.approximate}

    # ---- inverse and scaling -----------------------------------------------
    def inverse(self, y):
        """Smallest ``xi`` with ``omega(xi) >= y``; ``inf`` above ``sup``."""
        if y < 0:
            raise ParameterError("inverse is defined for y >= 0")
        yr = y / self.amp
        if yr <= self.pieces[0].value(np.array([0.0]))[0]:
            return 0.0
        edges = self._edges
        for i, piece in enumerate(self.pieces):
            lo, hi = edges[i], edges[i + 1]
            top = piece.sup if math.isinf(hi) else float(piece.value(np.array([hi]))[0])
            if yr <= top:
                if isinstance(piece, ConstantPiece):
                    return lo / self.lam
                if math.isinf(hi):
                    hi_b = max(lo, 1.0) * 2
                    while float(piece.value(np.array([hi_b]))[0]) < yr:
                        hi_b *= 2
                    hi = hi_b
                x = piece.inverse(yr, lo, hi)
                return min(max(x, lo), hi) / self.lam
        return math.inf

    def scaled(self, lam, alpha, beta) -> "Moc":
        """``lam**(beta-alpha-1) * omega(lam * xi)``."""
        if lam <= 0:
            raise ParameterError("scaling factor must be positive")
        params = dict(self.params)
        params.setdefault("base_family", self.family)
        params["scale_history"] = list(params.get("scale_history", [])) + [
            {"lambda": lam, "alpha": alpha, "beta": beta}]
        return Moc(self.breaks, self.pieces, self.amp * lam ** (beta - alpha - 1),
                   self.lam * lam, "scaled", params, self.approximate)


# ---- families ----------------------------------------------------------------

def kisel_nv(delta, gamma, beta) -> Moc:
    """``xi - xi**1.5`` up to ``delta``, then ``omega' = gamma/(4(xi+xi**beta))``.

    Hard domain errors: ``0 < delta < 1``, ``gamma > 0``, ``0 < beta <= 2``.
    The conditions ``gamma < delta`` and ``delta <= 1/9`` are not enforced;
    they are recorded in ``params['domain']`` and concavity is checked
    numerically.
    """
    if not 0 < delta < 1:
        raise ParameterError("kisel-nv requires 0 < delta < 1")
    if gamma <= 0:
        raise ParameterError("kisel-nv requires gamma > 0")
    if not 0 < beta <= 2:
        raise ParameterError("kisel-nv requires 0 < beta <= 2")
    head = CubicRootPiece()
    tail = LogTailPiece(delta, delta - delta ** 1.5, gamma, beta)
    domain = {"gamma_lt_delta": gamma < delta, "delta_le_1_9": delta <= 1 / 9}
    return Moc((float(delta),), (head, tail), family="kisel-nv",
               params={"delta": delta, "gamma": gamma, "beta": beta, "domain": domain})


def stationary_holder(H, delta, gamma) -> Moc:
    """``(H/delta**gamma) xi**gamma`` up to ``delta``, then ``H``."""
    if H <= 0 or delta <= 0:
        raise ParameterError("stationary-holder requires H > 0 and delta > 0")
    if not 0 < gamma < 1:
        raise ParameterError("stationary-holder requires 0 < gamma < 1")
    return Moc((float(delta),), (PowerPiece(H / delta ** gamma, gamma), ConstantPiece(H)),
               family="stationary-holder", params={"H": H, "delta": delta, "gamma": gamma})


def eventual(H, delta, gamma, xi0) -> Moc:
    """Stationary Hölder modulus with its head replaced by the tangent at ``xi0``."""
    if H <= 0 or delta <= 0:
        raise ParameterError("eventual requires H > 0 and delta > 0")
    if not 0 < gamma < 1:
        raise ParameterError("eventual requires 0 < gamma < 1")
    if not 0 < xi0 <= delta:
        raise ParameterError("eventual requires 0 < xi0 <= delta")
    c = H / delta ** gamma
    head = AffinePiece(gamma * c * xi0 ** (gamma - 1), (1 - gamma) * c * xi0 ** gamma)
    params = {"H": H, "delta": delta, "gamma": gamma, "xi0": xi0}
    if xi0 == delta:
        return Moc((float(delta),), (head, ConstantPiece(H)), family="eventual", params=params)
    return Moc((float(xi0), float(delta)), (head, PowerPiece(c, gamma), ConstantPiece(H)),
               family="eventual", params=params)


def scaled(base: Moc, lam, alpha, beta) -> Moc:
    return base.scaled(lam, alpha, beta)


def power_law(gamma, coef=1.0) -> Moc:
    if not 0 < gamma <= 1 or coef <= 0:
        raise ParameterError("power modulus requires 0 < gamma <= 1 and coef > 0")
    return Moc((), (PowerPiece(coef, gamma),), family="power",
               params={"gamma": gamma, "coef": coef})


def linear(slope=1.0) -> Moc:
    return Moc((), (AffinePiece(slope, 0.0),), family="linear", params={"slope": slope})


def constant(H) -> Moc:
    if H <= 0:
        raise ParameterError("constant modulus requires H > 0")
    return Moc((), (ConstantPiece(H),), family="constant", params={"H": H})


def tabulated(xi: Sequence[float], omega: Sequence[float]) -> Moc:
    """Linear interpolation of tabulated data, constant after the last node.

    The head is the chord through the origin-side pair extended to 0.  The
    result is flagged ``approximate``; monotonicity and concavity of the data
    are required.
    """
    x = np.asarray(xi, dtype=float)
    y = np.asarray(omega, dtype=float)
    if x.ndim != 1 or x.size < 2 or x.size != y.size:
        raise ParameterError("tabulated modulus needs two equal-length columns, >= 2 rows")
    if np.any(x <= 0) or np.any(np.diff(x) <= 0):
        raise ParameterError("tabulated xi must be positive and strictly increasing")
    slopes = np.diff(y) / np.diff(x)
    if np.any(slopes < 0):
        raise ParameterError("tabulated omega must be non-decreasing")
    if np.any(np.diff(slopes) > 1e-12 * np.maximum(1.0, np.abs(slopes[:-1]))):
        raise ParameterError("tabulated omega must be concave")
    intercept = y[0] - slopes[0] * x[0]
    if intercept < 0:
        raise ParameterError("tabulated omega extrapolates below zero at the origin")
    pieces = [AffinePiece(slopes[0], intercept)]
    for i in range(1, slopes.size):
        pieces.append(AffinePiece(slopes[i], y[i] - slopes[i] * x[i]))
    pieces.append(ConstantPiece(y[-1]))
    breaks = tuple(float(v) for v in x[1:])
    return Moc(breaks, tuple(pieces), family="tabulated",
               params={"n_nodes": int(x.size)}, approximate=True)


def read_tabulated_csv(path) -> Moc:
    """Load a two-column ``xi,omega`` CSV (header row optional)."""
    xs, ys = [], []
    with open(path, newline="") as fh:
        for row in csv.reader(fh):
            if not row or row[0].lstrip().startswith("#"):
                continue
            try:
                xs.append(float(row[0]))
                ys.append(float(row[1]))
            except ValueError:
                if xs:
                    raise ParameterError(f"non-numeric row in {path}: {row}")
    return tabulated(xs, ys)


FAMILIES = {
    "kisel-nv": kisel_nv,
    "stationary-holder": stationary_holder,
    "eventual": eventual,
    "power": power_law,
    "linear": linear,
    "constant": constant,
}


def from_description(desc: dict) -> Moc:
    """Build a modulus from a config block ``{'family': name, **params}``."""
    desc = dict(desc)
    name = desc.pop("family", None)
    if name == "tabulated":
        return read_tabulated_csv(desc["path"])
    if name == "scaled":
        base = from_description(desc.pop("base"))
        return base.scaled(desc["lambda"], desc["alpha"], desc["beta"])
    if name not in FAMILIES:
        raise ParameterError(f"unknown modulus family {name!r}")
    try:
        return FAMILIES[name](**desc)
    except TypeError as exc:
        raise ParameterError(f"bad parameters for family {name!r}: {exc}") from None


# ---- time dependence of the eventual family ------------------------------------

def vanish_time(delta, beta, C2) -> float:
    """Time at which ``xi0(t) = (delta**beta - C2 beta t)**(1/beta)`` reaches 0."""
    if delta <= 0 or beta <= 0 or C2 <= 0:
        raise ParameterError("vanish_time requires delta, beta, C2 > 0")
    return delta ** beta / (C2 * beta)


def xi0_of_t(delta, beta, C2, t):
    """Solution of ``d xi0/dt = -C2 xi0**(1-beta)``, ``xi0(0) = delta``."""
    T0 = vanish_time(delta, beta, C2)
    t_arr, scalar = _as_array(t)
    if np.any(t_arr < 0) or np.any(t_arr > T0 * (1 + 1e-14)):
        raise ParameterError(
            f"t must lie in [0, T0] with T0 = {T0:g}; afterwards the family "
            "degenerates to the stationary Hölder modulus")
    out = np.maximum(delta ** beta - C2 * beta * t_arr, 0.0) ** (1.0 / beta)
    return float(out) if scalar else out


def eventual_at(H, delta, gamma, beta, C2, t) -> Moc:
    """Eventual-family modulus at time ``t`` (stationary one once ``xi0`` hits 0)."""
    x0 = xi0_of_t(delta, beta, C2, t)
    if x0 <= 0:
        return stationary_holder(H, delta, gamma)
    return eventual(H, delta, gamma, x0)


# ---- obedience -----------------------------------------------------------------

@dataclass
class ObedienceReport:
    ratio: float
    witness: tuple | None
    obeys: bool
    n_pairs: int
    exhaustive: bool
    undersampled: bool
    plan: dict


def obeys(f, moc: Moc, *, points=None, mode="auto", seed=0, min_pairs=1000) -> ObedienceReport:
    """Sup over sampled pairs of ``|f(x) - f(y)| / omega(|x - y|)``.

    ``f`` is either a field with a periodic grid (flat-torus distance is
    used) or a callable evaluated at ``points`` (shape ``(m, d)``), in which
    case all ``m(m-1)/2`` pairs are used with Euclidean distance.
    """
    from . import pairs

    if callable(f) and not hasattr(f, "grid"):
        if points is None:
            raise ParameterError("callable f requires sample points")
        pts = np.asarray(points, dtype=float)
        vals = np.asarray(f(pts), dtype=float)
        res = pairs.point_cloud_sup(vals, pts, lambda d: moc.value_at(d))
    else:
        res = pairs.torus_sup(np.asarray(f.physical), f.grid.L,
                              lambda d: moc.value_at(d), mode=mode, seed=seed)
    return ObedienceReport(res.value, res.witness, res.value < 1.0, res.n_pairs,
                           res.exhaustive, res.n_pairs < min_pairs, res.plan)
