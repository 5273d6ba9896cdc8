"""Run monitors: norms, Hölder and Besov seminorms, energy budget, blow-up integral."""
from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass, field, fields
from typing import Optional, Sequence

import numpy as np

from . import moc as mocmod
from . import pairs
from .certify import decay_bound, fit_decay_constant
from .errors import BlowUpError, ParameterError
from .spectral import ScalarField2D, grad_linf, shell_energies, shell_index_range

SCHEMA_VERSION = 1


class BesovBandWarning(UserWarning):
    """The highest resolved shell dominates the shell sum."""


# ---- seminorms ---------------------------------------------------------------

def holder_detail(f: ScalarField2D, gamma: float, *, mode="auto", seed=0) -> pairs.PairResult:
    """Pair search behind :func:`holder_seminorm`, with witness and sampling plan."""
    if not 0 < gamma < 1:
        raise ParameterError("Hölder exponent must lie in ]0, 1[")
    return pairs.torus_sup(f.physical, f.grid.L, lambda d: d ** gamma, mode=mode, seed=seed)


def holder_seminorm(f: ScalarField2D, gamma: float, *, mode="auto", seed=0) -> float:
    """``max |f(x) - f(y)| / dist(x, y)**gamma`` over grid pairs (torus distance).

    Exhaustive for ``n <= 48``, otherwise a seeded sample of displacements
    (coarse sublattice, all short ones, random long ones).
    """
    return max(0.0, holder_detail(f, gamma, mode=mode, seed=seed).value)


@dataclass(frozen=True)
class BesovResult:
    shell_sum: float
    direct: float
    shells: dict


def besov_seminorm(f: ScalarField2D, s: float) -> BesovResult:
    """``B^s_{2,2}`` seminorm from sharp dyadic shells and from ``|k|**(2s)`` weights.

    Both exclude the mean.  For ``s >= 0`` they satisfy
    ``2**-s * direct <= shell_sum <= direct``.
    """
    g = f.grid
    en = shell_energies(f)
    en.pop("mean")
    terms = {j: 2.0 ** (2 * j * s) * e for j, e in en.items()}
    total = sum(terms.values())
    lo, hi = shell_index_range(g)
    if total > 0 and terms[hi] > 0.5 * total:
        warnings.warn(f"shell j={hi} carries most of the B^{s} sum; the field is under-resolved "
                      "for this smoothness index", BesovBandWarning, stacklevel=2)
    k = np.where(g.kmag > 0, g.kmag, 1.0)
    wk = np.where(g.kmag > 0, k ** (2 * s), 0.0)
    direct = float(np.sum(g.weights * wk * np.abs(f.spectral) ** 2)) * g.L ** 2 / g.n ** 4
    return BesovResult(math.sqrt(total), math.sqrt(direct), en)


def dissipation_rate(f: ScalarField2D, nu, beta, epsilon=0.0) -> float:
    """``nu |Lambda^{beta/2} f|^2 + eps |grad f|^2``."""
    g = f.grid
    lam = nu * g.kmag ** beta + epsilon * g.kmag ** 2
    return float(np.sum(g.weights * lam * np.abs(f.spectral) ** 2)) * g.L ** 2 / g.n ** 4


def fit_stationary_holder(f: ScalarField2D, gamma, *, slack=1.1, mode="auto", seed=0) -> mocmod.Moc:
    """Stationary Hölder modulus with height ``slack * osc f`` and slope ``slack * [f]_gamma``."""
    if slack <= 1:
        raise ParameterError("slack must exceed 1")
    osc = float(np.ptp(f.physical))
    semi = holder_seminorm(f, gamma, mode=mode, seed=seed)
    if osc <= 0 or semi <= 0:
        raise ParameterError("cannot fit a modulus to a constant field")
    H = slack * osc
    K = slack * semi
    return mocmod.stationary_holder(H, (H / K) ** (1.0 / gamma), gamma)


# ---- time series ---------------------------------------------------------------

@dataclass
class TimeSeriesRecord:
    t: float
    step: int
    L2: float
    Linf: float
    grad_Linf: float
    mean: float
    holder_seminorm: float = math.nan
    moc_obedience_ratio: float = math.nan
    blowup_integral: float = 0.0
    energy_residual: float = 0.0
    decay_envelope_ratio: float = math.nan
    shells: Optional[dict] = None


COLUMNS = [f.name for f in fields(TimeSeriesRecord) if f.name != "shells"]


def _exp_weights(x):
    """Weights of ``q0`` and ``q1`` in the exact integral of ``q0 e^{-s x}``-type data."""
    x = np.minimum(x, 700.0)
    small = x < 1e-3
    xs = np.where(small, 1.0, x)
    em = np.exp(-xs)
    w0 = np.where(small, 0.5 - x / 6 + x * x / 24 - x ** 3 / 120, (xs - 1 + em) / xs ** 2)
    w1 = np.where(small, 0.5 + x / 6 + x * x / 24 + x ** 3 / 120, (np.expm1(xs) - xs) / xs ** 2)
    return w0, w1


class Tracker:
    """Accumulates the monitors of one run, step by step.

    The dissipated energy over a step is integrated per Fourier mode with a
    rule that is exact for pure exponential decay, so the energy residual
    measures the scheme's transport error only.
    """

    def __init__(self, params, *, moc: Optional[mocmod.Moc] = None, holder_gamma=None,
                 shells=False, seed=0, pair_mode="auto"):
        self.params = params
        self.moc = moc
        self.holder_gamma = holder_gamma
        self.shells = shells
        self.seed = seed
        self.pair_mode = pair_mode
        self.exponent = 2 + 2 * params.alpha - params.beta

    def start(self, state):
        g = state.theta.grid
        p = self.params
        self._lam = p.nu * g.kmag ** p.beta + p.epsilon * g.kmag ** 2
        self._scale = g.weights * g.L ** 2 / g.n ** 4
        self.energy0 = g.spectral_norm2(state.theta.spectral)
        self.dissipated = 0.0
        self.blowup_integral = 0.0
        self._grad = grad_linf(state.theta)
        self._q = self._mode_rates(state.theta)
        self._check_ceiling(state)

    def _mode_rates(self, theta):
        return 2 * self._lam * self._scale * np.abs(theta.spectral) ** 2

    def _check_ceiling(self, state):
        if self._grad > self.params.grad_ceiling:
            raise BlowUpError(f"|grad theta|_inf = {self._grad:.3e} exceeds the ceiling "
                              f"at step {state.step_count}", step=state.step_count,
                              diagnostic={"t": state.t, "grad_Linf": self._grad,
                                          "blowup_integral": self.blowup_integral})

    def advance(self, prev, new, dt):
        q1 = self._mode_rates(new.theta)
        w0, w1 = _exp_weights(2 * self._lam * dt)
        self.dissipated += dt * float(np.sum(w0 * self._q + w1 * q1))
        self._q = q1
        g1 = grad_linf(new.theta)
        self.blowup_integral += 0.5 * dt * (self._grad ** self.exponent + g1 ** self.exponent)
        self._grad = g1
        self._check_ceiling(new)

    def record(self, state) -> TimeSeriesRecord:
        th = state.theta
        g = th.grid
        e = g.spectral_norm2(th.spectral)
        rec = TimeSeriesRecord(
            t=state.t, step=state.step_count, L2=math.sqrt(e), Linf=th.linf(),
            grad_Linf=self._grad, mean=th.mean(), blowup_integral=self.blowup_integral,
            energy_residual=e + self.dissipated - self.energy0)
        if self.holder_gamma is not None:
            rec.holder_seminorm = holder_seminorm(th, self.holder_gamma, mode=self.pair_mode,
                                                  seed=self.seed)
        if self.moc is not None:
            rec.moc_obedience_ratio = mocmod.obeys(th, self.moc, mode=self.pair_mode,
                                                   seed=self.seed).ratio
        if self.shells:
            rec.shells = {str(k): v for k, v in shell_energies(th).items()}
        return rec


def track(states: Sequence, params, moc=None, *, holder_gamma=None, shells=False, seed=0):
    """Records for an already computed sequence of states (increasing ``t``)."""
    states = list(states)
    if not states:
        return []
    tr = Tracker(params, moc=moc, holder_gamma=holder_gamma, shells=shells, seed=seed)
    tr.start(states[0])
    out = [tr.record(states[0])]
    for a, b in zip(states, states[1:]):
        if b.t < a.t:
            raise ParameterError("states must be ordered in time")
        tr.advance(a, b, b.t - a.t)
        out.append(tr.record(b))
    return out


def apply_decay_envelope(records: Sequence[TimeSeriesRecord], t_fit, beta) -> float:
    """Fit the decay constant on records with ``t <= t_fit`` and fill the envelope ratio."""
    r0 = records[0]
    ts = np.array([r.t for r in records])
    li = np.array([r.Linf for r in records])
    early = ts <= t_fit
    C = max(fit_decay_constant(ts[early], li[early], r0.Linf, r0.L2, beta), 0.0)
    env = decay_bound(r0.Linf, r0.L2, beta, C, ts)
    for r, e in zip(records, np.atleast_1d(env)):
        r.decay_envelope_ratio = float(r.Linf / e)
    return C


# ---- output ----------------------------------------------------------------------

def write_csv(path, records: Sequence[TimeSeriesRecord], *, config_hash="", truncated=False):
    shell_keys = []
    for r in records:
        for k in (r.shells or {}):
            if k not in shell_keys:
                shell_keys.append(k)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n# config_hash={config_hash}\n")
        if truncated:
            fh.write("# truncated=true\n")
        w = csv.writer(fh)
        w.writerow(COLUMNS + [f"shell_{k}" for k in shell_keys])
        for r in records:
            row = [repr(float(getattr(r, c))) if c != "step" else r.step for c in COLUMNS]
            row += [repr(float((r.shells or {}).get(k, math.nan))) for k in shell_keys]
            w.writerow(row)


def read_csv(path):
    """Rows of a series CSV as dicts of floats (comment lines skipped)."""
    with open(path, newline="") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(lines)]


def write_jsonl(path, records: Sequence[TimeSeriesRecord], *, config_hash=""):
    with open(path, "w") as fh:
        for r in records:
            d = asdict(r)
            d = {k: (None if isinstance(v, float) and not math.isfinite(v) else v)
                 for k, v in d.items()}
            d.update(schema_version=SCHEMA_VERSION, config_hash=config_hash)
            fh.write(json.dumps(d, sort_keys=True) + "\n")
