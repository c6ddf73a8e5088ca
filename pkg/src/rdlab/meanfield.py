"""Perfect-mixing (classical kinetics) rate equations for all three models.

Closed forms are used wherever they exist; the adaptive integrator is
the cross-check and the primary path only for the ABBA system, which
has no elementary solution.  These are the baselines whose breakdown
the stochastic runs demonstrate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate

from .errors import IntegratorError, ValidationError
from .timeseries import TimeSeries


@dataclass
class MeanFieldTrajectory:
    t: np.ndarray
    rho_a: np.ndarray
    rho_b: np.ndarray
    closed_form_used: bool

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=np.float64)
        self.rho_a = np.asarray(self.rho_a, dtype=np.float64)
        self.rho_b = np.asarray(self.rho_b, dtype=np.float64)
        if self.rho_a.min() < -1e-12 or self.rho_b.min() < -1e-12:
            raise IntegratorError("negative density in mean-field trajectory")
        self.rho_a = np.maximum(self.rho_a, 0.0)
        self.rho_b = np.maximum(self.rho_b, 0.0)

    def to_timeseries(self, volume: int = 1) -> TimeSeries:
        return TimeSeries(t=self.t, n_a=self.rho_a * volume,
                          n_b=self.rho_b * volume, volume=volume)


def mf_aa(rho0: float, lam: float, t):
    """rho0 / (1 + lam*rho0*t), the classical A+A decay."""
    if rho0 < 0 or lam < 0:
        raise ValidationError("rho0 and lam must be >= 0")
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0):
        raise ValidationError("t must be >= 0")
    out = rho0 / (1.0 + lam * rho0 * t)
    return out if out.ndim else float(out)


def _integrate(rhs, y0, t_grid, rtol=1e-11, atol=1e-14):
    t_grid = np.asarray(t_grid, dtype=np.float64)
    t0 = min(0.0, float(t_grid[0]))
    sol = scipy.integrate.solve_ivp(rhs, (t0, float(t_grid[-1])), y0,
                                    t_eval=t_grid, method="DOP853",
                                    rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegratorError(f"mean-field integration failed: {sol.message}")
    return sol.y


def mf_aa_numeric(rho0: float, lam: float, t_grid) -> MeanFieldTrajectory:
    """Adaptive-integrator cross-check of the mf_aa closed form."""
    y = _integrate(lambda t, y: [-lam * y[0] ** 2], [rho0], t_grid)
    t_grid = np.asarray(t_grid, dtype=np.float64)
    return MeanFieldTrajectory(t=t_grid, rho_a=y[0], rho_b=np.zeros_like(y[0]),
                               closed_form_used=False)


def mf_ab(rho_a0: float, rho_b0: float, delta: float, t_grid) -> MeanFieldTrajectory:
    """Two-species annihilation with perfect mixing.

    rho_A - rho_B is conserved; equal initial densities reduce to the
    A+A closed form, unequal ones to the exact logistic-type solution.
    """
    if rho_a0 < 0 or rho_b0 < 0 or delta < 0:
        raise ValidationError("densities and delta must be >= 0")
    t = np.asarray(t_grid, dtype=np.float64)
    if rho_a0 == rho_b0:
        rho = mf_aa(rho_a0, delta, t)
        return MeanFieldTrajectory(t=t, rho_a=rho, rho_b=rho.copy(),
                                   closed_form_used=True)
    gap = rho_a0 - rho_b0
    if rho_a0 == 0 or rho_b0 == 0:
        rho_a = np.full_like(t, rho_a0)
        rho_b = np.full_like(t, rho_b0)
        return MeanFieldTrajectory(t=t, rho_a=rho_a, rho_b=rho_b,
                                   closed_form_used=True)
    # minority/majority ratio decays as exp(-|gap|*delta*t)
    if gap > 0:
        ratio = (rho_b0 / rho_a0) * np.exp(-gap * delta * t)
        rho_a = gap / (1.0 - ratio)
        rho_b = rho_a * ratio
    else:
        ratio = (rho_a0 / rho_b0) * np.exp(gap * delta * t)
        rho_b = -gap / (1.0 - ratio)
        rho_a = rho_b * ratio
    return MeanFieldTrajectory(t=t, rho_a=rho_a, rho_b=rho_b,
                               closed_form_used=True)


def mf_ab_numeric(rho_a0: float, rho_b0: float, delta: float, t_grid) -> MeanFieldTrajectory:
    y = _integrate(lambda t, y: [-delta * y[0] * y[1], -delta * y[0] * y[1]],
                   [rho_a0, rho_b0], t_grid)
    return MeanFieldTrajectory(t=np.asarray(t_grid, dtype=np.float64),
                               rho_a=y[0], rho_b=y[1], closed_form_used=False)


def mf_abba(rho_a0: float, rho_b0: float, lam: float, delta: float, t_grid,
            require_delta_gt_lambda: bool = True) -> MeanFieldTrajectory:
    """Mean-field ABBA: rho_A' = -lam*rho_A^2 - delta*rho_A*rho_B and the
    A<->B mirror image.  The interesting regime is delta > lam > 0, where
    this predicts extinction of whichever species starts in the minority.
    """
    if rho_a0 < 0 or rho_b0 < 0:
        raise ValidationError("densities must be >= 0")
    if require_delta_gt_lambda and not (delta > lam > 0):
        raise ValidationError(
            "ABBA regime of interest needs delta > lam > 0 "
            "(pass require_delta_gt_lambda=False to override)")

    def rhs(t, y):
        a, b = y
        return [-lam * a * a - delta * a * b, -lam * b * b - delta * a * b]

    y = _integrate(rhs, [rho_a0, rho_b0], t_grid)
    return MeanFieldTrajectory(t=np.asarray(t_grid, dtype=np.float64),
                               rho_a=y[0], rho_b=y[1], closed_form_used=False)


def ratio_slope(traj: MeanFieldTrajectory, decades: float = 1.0) -> float:
    """Log-log slope of rho_A/rho_B over the trailing `decades` of t.

    For mean-field ABBA this approaches delta/lam - 1.
    """
    t, ra, rb = traj.t, traj.rho_a, traj.rho_b
    if np.any(rb <= 0):
        raise ValidationError("ratio undefined where rho_B = 0")
    mask = t >= t[-1] / 10.0 ** decades
    if mask.sum() < 5:
        raise ValidationError("not enough points in the trailing window")
    r = ra[mask] / rb[mask]
    return float(np.polyfit(np.log(t[mask]), np.log(r), 1)[0])
