"""Grid certification of the modulus-of-continuity criterion and related arithmetic.

Every verdict here is conditional on the absolute constants in
:class:`CriterionConstants` (all default to 1) and is a statement about a
finite grid ("grid-certified"), not a proof.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import moc as mocmod
from .errors import ParameterError
from .functionals import omega1, upsilon_beta

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class CriterionConstants:
    alpha: float
    beta: float
    nu: float = 1.0
    c_alpha: float = 1.0
    c_beta: float = 1.0
    c_beta_prime: float = 1.0
    A: float = 1.0
    epsilon: float = 0.0

    def __post_init__(self):
        for name in ("nu", "c_alpha", "c_beta", "c_beta_prime", "A"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"constant {name} must be strictly positive")
        if not 0 < self.alpha < 1:
            raise ParameterError("alpha must lie in ]0, 1[")
        if not 0 < self.beta <= 2:
            raise ParameterError("beta must lie in ]0, 2]")
        if self.epsilon < 0:
            raise ParameterError("epsilon must be >= 0")


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else ("inf" if f > 0 else "-inf" if f < 0 else "nan")
    return obj


@dataclass
class Certificate:
    kind: str
    verdict: str
    worst_margin: float
    witness: dict
    thresholds: dict
    grid: dict
    quadrature_error_max: float = 0.0
    checks: dict = field(default_factory=dict)
    hypotheses: dict = field(default_factory=dict)
    constants: dict = field(default_factory=dict)
    modulus: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    table: dict = field(default_factory=dict, repr=False)

    @property
    def passed(self) -> bool:
        return self.verdict == "PASS"

    def to_dict(self) -> dict:
        d = {k: v for k, v in asdict(self).items() if k != "table"}
        d["schema_version"] = SCHEMA_VERSION
        d["status"] = "grid-certified" if self.passed else "not certified"
        return _clean(d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


# ---- subcritical criterion -----------------------------------------------------

def subcritical_thresholds(consts: CriterionConstants, delta: Optional[float] = None) -> dict:
    """Closed-form sufficient bounds on ``delta`` and (given ``delta``) ``gamma``."""
    a, b, nu = consts.alpha, consts.beta, consts.nu
    if b <= a + 1:
        raise ParameterError("subcritical thresholds need beta > alpha + 1")
    rhs = 3 * nu * a * (1 - a) * consts.c_beta / (16 * consts.c_alpha)
    delta_max = rhs ** (1.0 / (b - a - 0.5))
    out = {"delta_max": delta_max, "delta_rhs": rhs, "delta_exponent": b - a - 0.5,
           "delta_concavity_max": 1.0 / 9.0}
    if delta is not None:
        out["gamma_max"] = min(delta, nu * a * (1 - a) * consts.c_beta * delta ** a / (2 * consts.c_alpha))
    return out


@dataclass(frozen=True)
class LogGrid:
    """Log grid relative to a reference scale, denser around breakpoints."""

    lo: float = 1e-8
    hi: float = 1e8
    per_decade: int = 250
    seam_per_decade: int = 400
    seam_window: float = 10.0

    def build(self, scale: float, breakpoints) -> np.ndarray:
        if not (0 < self.lo < self.hi):
            raise ParameterError("grid needs 0 < lo < hi")
        decades = math.log10(self.hi / self.lo)
        pts = [np.geomspace(self.lo * scale, self.hi * scale, int(round(decades * self.per_decade)) + 1)]
        for b in breakpoints:
            wd = 2 * math.log10(self.seam_window)
            pts.append(np.geomspace(b / self.seam_window, b * self.seam_window,
                                    int(round(wd * self.seam_per_decade)) + 1))
            pts.append(np.array([b * (1 - 2.0 ** -50), b * (1 + 2.0 ** -50),
                                 np.nextafter(b, 0.0), np.nextafter(b, np.inf)]))
        xi = np.unique(np.concatenate(pts))
        return xi[(xi >= self.lo * scale * (1 - 1e-15)) & (xi <= self.hi * scale * (1 + 1e-15))]

    def describe(self) -> dict:
        return asdict(self)


def _check_grid_density(xi, scale, breakpoints, min_lo=1e-8, min_hi=1e8, seam_density=400):
    if xi.min() > min_lo * scale * (1 + 1e-12) or xi.max() < min_hi * scale * (1 - 1e-12):
        raise ParameterError(
            f"grid must span at least [{min_lo:g}, {min_hi:g}] times the breakpoint scale")
    for b in breakpoints:
        near = xi[(xi >= b / 10) & (xi <= b * 10)]
        if near.size < 2 * seam_density:
            raise ParameterError(
                f"grid too coarse near breakpoint {b:g}: {near.size} points in "
                f"[b/10, 10b], need >= {2 * seam_density}")


def certify_subcritical(moc: mocmod.Moc, consts: CriterionConstants, grid=None) -> Certificate:
    """Check ``Omega1 * omega' + nu * Upsilon_beta (+ 2 eps omega'') < 0`` on a grid.

    ``grid`` is a :class:`LogGrid` (default) or an explicit array of ``xi``.
    PASS requires the margin plus its quadrature error bound to be negative
    at every grid point and the modulus to be concave.
    """
    a, b = consts.alpha, consts.beta
    if b <= a + 1:
        raise ParameterError(
            f"subcritical certification needs beta > alpha + 1 (got alpha={a}, beta={b})")
    base_family = moc.params.get("base_family", moc.family)
    if base_family != "kisel-nv":
        raise ParameterError("subcritical certification expects a kisel-nv modulus")
    bps = [float(x) for x in moc.breakpoints]
    scale = bps[0]
    if grid is None:
        grid = LogGrid()
    if isinstance(grid, LogGrid):
        if grid.seam_per_decade < 400:
            raise ParameterError("grid too coarse: need >= 400 points per decade near breakpoints")
        xi = grid.build(scale, bps)
        grid_desc = {"type": "log", **grid.describe(), "scale": scale}
    else:
        xi = np.unique(np.asarray(grid, dtype=float))
        grid_desc = {"type": "explicit"}
    _check_grid_density(xi, scale, bps)
    grid_desc["n_points"] = int(xi.size)

    concave = moc.concave
    ups = upsilon_beta(moc, xi, b, consts.c_beta, require_concave=False)
    om1 = omega1(moc, xi, a, consts.c_alpha, require_concave=False)
    dmax = moc.deriv(xi, "max")
    drift = om1.value * dmax
    diss = consts.nu * ups.value
    margin = drift + diss
    err = om1.error * dmax + consts.nu * ups.error
    visc = np.zeros_like(xi)
    if consts.epsilon > 0:
        visc = 2 * consts.epsilon * moc.deriv2(xi, "right")
        margin = margin + visc
    upper = margin + err
    k = int(np.argmax(upper))            # first maximum: deterministic witness
    ok_grid = bool(np.all(upper < 0))
    verdict = "PASS" if ok_grid and concave else "FAIL"

    params = moc.params
    thr = subcritical_thresholds(consts, params.get("delta"))
    delta, gamma = params.get("delta"), params.get("gamma")
    if delta is not None:
        thr["delta_ok"] = delta < thr["delta_max"]
        thr["delta_concavity_ok"] = delta <= 1.0 / 9.0
    if gamma is not None and "gamma_max" in thr:
        thr["gamma_ok"] = gamma < thr["gamma_max"]

    notes = []
    if not concave:
        notes.append("modulus is not concave: the criterion's hypothesis fails, "
                     "margins were evaluated without the concavity guard")
    return Certificate(
        kind="subcritical", verdict=verdict,
        worst_margin=float(margin[k]),
        witness={"xi": float(xi[k]), "xi_over_scale": float(xi[k] / scale),
                 "margin_plus_error": float(upper[k]), "drift_term": float(drift[k]),
                 "dissipation_term": float(diss[k])},
        thresholds=thr, grid=grid_desc,
        quadrature_error_max=float(np.max(err)),
        checks={"grid_margin_negative": ok_grid,
                "tail_margin": float(margin[-1]), "tail_xi": float(xi[-1]),
                "tail_negative": bool(upper[-1] < 0)},
        hypotheses={"concave": concave, "condition": moc.condition,
                    "beta_gt_alpha_plus_1": True},
        constants=asdict(consts), modulus=moc.describe(), notes=notes,
        table={"xi": xi, "drift": drift, "dissipation": diss, "viscous": visc,
               "margin": margin, "error": err})


def lambda_for_data(theta0_linf, grad_theta0_linf, moc: mocmod.Moc, alpha, beta,
                    c0=None, field=None) -> dict:
    """Scaling ``lam`` and ``delta0`` making the data obey the scaled modulus.

    ``c0`` defaults to ``omega(delta)`` for moduli with a ``delta`` parameter.
    When ``field`` is given the obedience of the data is checked on pairs.
    """
    if beta <= alpha + 1:
        raise ParameterError("lambda selection needs beta > alpha + 1")
    if not theta0_linf > 0:
        raise ParameterError("need a non-zero initial sup norm")
    if c0 is None:
        if "delta" not in moc.params:
            raise ParameterError("c0 must be given for this modulus family")
        c0 = float(moc.eval(moc.params["delta"]))
    if not 0 < c0 < moc.sup:
        raise ParameterError(f"c0 must lie in ]0, sup omega[ = ]0, {moc.sup:g}[")
    e = beta - alpha - 1
    first = (4 * theta0_linf / c0) ** (1.0 / e)
    second = moc.inverse(c0) * grad_theta0_linf / theta0_linf
    lam = max(first, second)
    delta0 = moc.inverse(2 * theta0_linf / lam ** e)
    out = {"lambda": lam, "delta0": delta0, "c0": c0,
           "amplitude_branch": first, "gradient_branch": second}
    if field is not None:
        rep = mocmod.obeys(field, moc.scaled(lam, alpha, beta))
        out["obedience"] = {"ratio": rep.ratio, "obeys": rep.obeys,
                            "n_pairs": rep.n_pairs, "witness": rep.witness}
    return out


# ---- eventual regularity -------------------------------------------------------------

def eventual_bounds(consts: CriterionConstants, gamma) -> dict:
    nu, cp, A = consts.nu, consts.c_beta_prime, consts.A
    return {
        "C2_max": cp * nu / (2 * gamma),
        "C1_max": min(nu * cp * (1 - gamma) / (2 * A * gamma), nu / (A * gamma)),
        "C1_stationary_max": min(nu * cp * (1 - gamma) / A, nu / (A * gamma)),
    }


def _eventual_domain(consts, gamma):
    a, b = consts.alpha, consts.beta
    if not (a < b <= a + 1):
        raise ParameterError(f"constraint violated: beta in ]alpha, alpha+1] (alpha={a}, beta={b})")
    lo = max(a + 1 - b, a / 2)
    if not (lo < gamma < 1):
        raise ParameterError(
            f"constraint violated: max(alpha+1-beta, alpha/2) < gamma < 1 (need gamma > {lo:g})")


def _stationary_terms(xi, H, delta, gamma, consts):
    a, b, nu, cp, A = consts.alpha, consts.beta, consts.nu, consts.c_beta_prime, consts.A
    amp = H / delta ** (a + 1 - b)
    r = (xi / delta) ** (gamma + b - 1 - a)
    drift = A * gamma * (H / delta ** gamma) * xi ** (gamma - b) * (amp * r - nu * cp * (1 - gamma) / A)
    coef = nu - A * gamma * amp * r
    return drift, coef


@dataclass(frozen=True)
class EventualGrid:
    n_xi: int = 200
    n_xi0: int = 50
    xi_lo: float = 1e-8      # relative to delta
    xi_hi: float = 1e2
    xi0_lo: float = 1e-6     # relative to delta

    def describe(self):
        return asdict(self)


def _worst(values, mask, xi, x0, sign=1.0):
    """Location of the largest ``sign * values`` among ``mask``."""
    v = np.where(mask, sign * values, -np.inf)
    k = int(np.argmax(v))
    return {"value": float(values.flat[k]), "xi": float(xi.flat[k]), "xi0": float(x0.flat[k])}


def certify_eventual(consts: CriterionConstants, gamma, C1, C2, *, delta=1.0, H=None,
                     grid: EventualGrid = None) -> Certificate:
    """Sign checks of the eventual-regularity bounding expressions on a ``(xi, xi0)`` grid.

    Three families of checks, named by what they control:

    * ``time_derivative``: the time derivative of the shrinking head against
      half the dissipation (negative required, ``xi <= xi0``);
    * ``drift``: drift against half the dissipation (negative required), in
      the head and, with the stationary bound, on ``]xi0, delta]``;
    * ``perpendicular_coefficient``: the coefficient multiplying the
      non-positive perpendicular dissipation (non-negative required).

    ``xi > delta`` passes structurally because the modulus is constant there.
    """
    _eventual_domain(consts, gamma)
    if not (C1 > 0 and C2 > 0 and delta > 0):
        raise ParameterError("C1, C2 and delta must be positive")
    grid = grid or EventualGrid()
    a, b, nu, cp, A = consts.alpha, consts.beta, consts.nu, consts.c_beta_prime, consts.A
    if H is None:
        H = C1 * delta ** (a + 1 - b)
    amp_ok = H <= C1 * delta ** (a + 1 - b) * (1 + 1e-12)

    xi0 = np.geomspace(grid.xi0_lo * delta, delta, grid.n_xi0)
    base = np.geomspace(grid.xi_lo * delta, grid.xi_hi * delta, grid.n_xi)
    X0 = np.repeat(xi0[:, None], grid.n_xi + 1, axis=1)
    X = np.concatenate([np.broadcast_to(base, (grid.n_xi0, grid.n_xi)), xi0[:, None]], axis=1)

    head = X <= X0
    mid = (X > X0) & (X <= delta)
    amp = H / delta ** (a + 1 - b)
    hd = H / delta ** gamma
    growth = amp * (X0 / delta) ** (gamma + b - a - 1) * (X / X0) ** (b - a)

    e_time = (1 - gamma) * hd * X0 ** (gamma - b) * (gamma * C2 - 0.5 * nu * cp * (X0 / X) ** b)
    e_drift_head = hd * X0 ** gamma / X ** b * (A * gamma * growth - 0.5 * nu * cp * (1 - gamma))
    c_head = nu - A * gamma * growth
    e_drift_mid, c_mid = _stationary_terms(X, H, delta, gamma, consts)

    drift = np.where(head, e_drift_head, np.where(mid, e_drift_mid, -np.inf))
    coef = np.where(head, c_head, np.where(mid, c_mid, np.inf))
    time = np.where(head, e_time, -np.inf)
    tol = 1e-12 * nu

    t_ok = bool(np.all(time[head] < 0))
    d_ok = bool(np.all(drift[head | mid] < 0))
    c_ok = bool(np.all(coef[head | mid] >= -tol))
    checks = {
        "time_derivative": {"passed": t_ok, "worst": _worst(time, head, X, X0)},
        "drift": {"passed": d_ok, "worst": _worst(drift, head | mid, X, X0)},
        "perpendicular_coefficient": {"passed": c_ok,
                                      "worst": _worst(coef, head | mid, X, X0, sign=-1.0)},
        "amplitude_condition": {"passed": bool(amp_ok), "H": H,
                                "C1_delta_power": C1 * delta ** (a + 1 - b)},
        "beyond_delta": {"passed": True, "reason": "modulus constant, structural"},
    }
    verdict = "PASS" if (t_ok and d_ok and c_ok and amp_ok) else "FAIL"
    failing = [k for k, v in checks.items() if not v["passed"]]
    # witness: first failing check in a fixed order, else the tightest negative one
    order = ["time_derivative", "drift", "perpendicular_coefficient"]
    wname = next((k for k in order if k in failing), "drift")
    witness = dict(checks[wname]["worst"], check=wname)
    worst_margin = max(checks["time_derivative"]["worst"]["value"],
                       checks["drift"]["worst"]["value"],
                       -(checks["perpendicular_coefficient"]["worst"]["value"] + tol))
    bounds = eventual_bounds(consts, gamma)
    bounds.update({"C1": C1, "C2": C2, "C1_ok": C1 < bounds["C1_max"], "C2_ok": C2 < bounds["C2_max"],
                   "vanish_time": mocmod.vanish_time(delta, b, C2)})
    return Certificate(
        kind="eventual", verdict=verdict, worst_margin=float(worst_margin), witness=witness,
        thresholds=bounds, grid={"type": "xi-xi0", **grid.describe(), "delta": delta,
                                 "n_points": int(X.size)},
        checks=checks,
        hypotheses={"beta_in_(alpha,alpha+1]": True, "gamma_lower": max(a + 1 - b, a / 2)},
        constants=asdict(consts),
        modulus={"family": "eventual", "H": H, "delta": delta, "gamma": gamma},
        notes=[f"failing: {', '.join(failing)}"] if failing else [],
        table={"xi": X.ravel(), "xi0": X0.ravel(), "time_derivative": time.ravel(),
               "drift": drift.ravel(), "coefficient": coef.ravel()})


def certify_stationary(consts: CriterionConstants, gamma, C1, *, delta=1.0, H=None,
                       n_xi=400) -> Certificate:
    """Stationary Hölder modulus: drift and perpendicular-coefficient checks on ``]0, delta]``."""
    a, b = consts.alpha, consts.beta
    if not (a < b <= a + 1):
        raise ParameterError(f"constraint violated: beta in ]alpha, alpha+1] (alpha={a}, beta={b})")
    if not (a + 1 - b < gamma < 1):
        raise ParameterError("constraint violated: alpha+1-beta < gamma < 1")
    if H is None:
        H = C1 * delta ** (a + 1 - b)
    xi = np.geomspace(1e-8 * delta, delta, n_xi)
    drift, coef = _stationary_terms(xi, H, delta, gamma, consts)
    tol = 1e-12 * consts.nu
    d_ok, c_ok = bool(np.all(drift < 0)), bool(np.all(coef >= -tol))
    k = int(np.argmax(drift))
    j = int(np.argmin(coef))
    bounds = eventual_bounds(consts, gamma)
    return Certificate(
        kind="stationary", verdict="PASS" if d_ok and c_ok else "FAIL",
        worst_margin=float(max(drift[k], -(coef[j] + tol))),
        witness={"xi": float(xi[k] if not d_ok or c_ok else xi[j]),
                 "check": "drift" if not d_ok or c_ok else "perpendicular_coefficient"},
        thresholds={"C1": C1, "C1_max": bounds["C1_stationary_max"]},
        grid={"type": "log", "lo": 1e-8 * delta, "hi": delta, "n_points": n_xi},
        checks={"drift": {"passed": d_ok, "worst": float(drift[k]), "xi": float(xi[k])},
                "perpendicular_coefficient": {"passed": c_ok, "worst": float(coef[j]),
                                              "xi": float(xi[j])}},
        constants=asdict(consts),
        modulus={"family": "stationary-holder", "H": H, "delta": delta, "gamma": gamma},
        table={"xi": xi, "drift": drift, "coefficient": coef})


# ---- regularity ladder ------------------------------------------------------------------

@dataclass
class LadderResult:
    alpha: float
    beta: float
    sigma1: float
    p: float
    sigma0: float
    p1: float
    p2: float
    increment: float
    stalled: bool
    min_p: float
    sigma: list            # sigma_1, sigma_2, ... from the closed form
    sigma_recurrence: list
    N0: Optional[int]
    flags: dict

    def to_dict(self):
        return _clean(dict(asdict(self), schema_version=SCHEMA_VERSION))


_STALL_TOL = 1e-12


def regularity_ladder(alpha, beta, sigma1, p, max_steps=64) -> LadderResult:
    """Exponent ladder ``sigma_{N+1} = 2 sigma_N + beta - 1 - alpha - 2/p``.

    Returns the sequence up to the first ``sigma_{N0+1} > 1``.  A
    non-positive increment stalls the ladder; ``min_p`` is then the bound
    that ``p`` must strictly exceed.
    """
    if not 0 < alpha < 1 or not 0 < beta <= 2:
        raise ParameterError("need alpha in ]0,1[ and beta in ]0,2]")
    if not p >= 1:
        raise ParameterError("need p >= 1")
    sigma0 = max(alpha + 1 - beta, alpha / 2)
    if not sigma1 > sigma0:
        raise ParameterError(f"need sigma1 > sigma0 = {sigma0:g}")
    p1 = 2 / (1 - sigma0) if sigma0 < 1 else math.inf
    gap = sigma1 - (1 + alpha - beta)
    p2 = 2 / gap if gap > 0 else math.inf
    inc = sigma1 + beta - 1 - alpha - 2 / p
    min_p = max(p1, p2)
    stalled = inc <= _STALL_TOL
    shift = 1 + alpha + 2 / p - beta
    closed, rec = [sigma1], [sigma1]
    N0 = None
    if not stalled:
        for N in range(1, max_steps + 1):
            closed.append(2.0 ** N * inc + shift)
            rec.append(2 * rec[-1] + beta - 1 - alpha - 2 / p)
            if closed[-1] > 1:
                N0 = N
                break
    flags = {"p_gt_p1": p > p1, "p_gt_p2": p > p2, "increment_positive": not stalled,
             "max_discrepancy": float(max(abs(x - y) for x, y in zip(closed, rec)))}
    return LadderResult(alpha, beta, sigma1, p, sigma0, p1, p2, inc, stalled, min_p,
                        closed, rec, N0, flags)


# ---- L^inf decay envelope ------------------------------------------------------------------

def decay_bound(theta0_linf, theta0_l2, beta, C, t):
    """``|theta0|_inf / (1 + C (|theta0|_inf / |theta0|_2)**beta t)**(1/beta)``."""
    if theta0_linf < 0 or theta0_l2 <= 0 or beta <= 0 or C < 0:
        raise ParameterError("decay bound needs non-negative norms, beta > 0, C >= 0")
    t = np.asarray(t, dtype=float)
    out = theta0_linf / (1 + C * (theta0_linf / theta0_l2) ** beta * t) ** (1 / beta)
    return float(out) if out.ndim == 0 else out


def fit_decay_constant(t, linf, theta0_linf, theta0_l2, beta) -> float:
    """Least-squares ``C`` from ``(|theta0|_inf/|theta(t)|_inf)**beta - 1 = C a t``."""
    t = np.asarray(t, dtype=float)
    linf = np.asarray(linf, dtype=float)
    keep = (t > 0) & (linf > 0)
    if not keep.any():
        raise ParameterError("need samples with t > 0 to fit the decay constant")
    a = (theta0_linf / theta0_l2) ** beta
    y = (theta0_linf / linf[keep]) ** beta - 1
    x = a * t[keep]
    return float(np.dot(x, y) / np.dot(x, x))
