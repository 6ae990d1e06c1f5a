"""Saturating B-H material models for the reactor core.

The default model is a smooth anhysteretic curve

    B(H) = (2*B_plateau/pi) * atan(g(H/H_knee)) + mu_0*H

with ``g(x) = x*(1 + x^2)^((s-1)/2)``.  The shape factor ``s``
(:attr:`MaterialCurve.knee_sharpness`) controls how abruptly the
incremental permeability collapses at the knee; ``s = 1`` is a plain
arctangent.  ``H_knee`` is calibrated so the slope at the origin equals
``mu_r_init*mu_0`` exactly, and the ``mu_0*H`` term gives the correct
deep-saturation behaviour.  ``B_plateau`` sits slightly above the knee
flux density ``b_sat`` (real laminations keep magnetizing past the
knee), controlled by :attr:`MaterialCurve.saturation_overshoot`.

The forward direction B(H) is closed form; the inverse H(B) is computed
by a safeguarded Newton iteration with a bisection fallback.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

MU_0 = 4e-7 * math.pi  # vacuum permeability [H/m]

_ROUNDTRIP_RTOL = 1e-14
_MAX_NEWTON_ITER = 200


class CurveError(ValueError):
    """Invalid material-curve parameters or failed inverse lookup."""


def _check_finite(name: str, value: float) -> float:
    if not math.isfinite(value):
        raise CurveError(f"{name} must be finite, got {value!r}")
    return float(value)


@dataclass(frozen=True)
class MaterialCurve:
    """Parametric anhysteretic saturation curve.

    Attributes:
        b_sat: flux density at the saturation knee [T].
        mu_r_init: relative permeability at the origin (dimensionless).
        knee_sharpness: shape factor >= 1; larger values hold the
            permeability near its initial value up to the knee and then
            collapse faster (squarer loop).
        saturation_overshoot: plateau flux density as a multiple of
            b_sat.  Must be > 1 so that the curve actually crosses
            b_sat with positive margin before the mu_0 tail takes over.
    """

    b_sat: float = 1.34
    mu_r_init: float = 2500.0
    knee_sharpness: float = 3.0
    saturation_overshoot: float = 1.05

    def __post_init__(self) -> None:
        if not (math.isfinite(self.b_sat) and self.b_sat > 0):
            raise CurveError(f"b_sat must be positive, got {self.b_sat!r}")
        if not (math.isfinite(self.mu_r_init) and self.mu_r_init > 1):
            raise CurveError(f"mu_r_init must exceed 1, got {self.mu_r_init!r}")
        if not (math.isfinite(self.knee_sharpness) and self.knee_sharpness >= 1):
            raise CurveError(
                f"knee_sharpness must be >= 1, got {self.knee_sharpness!r}"
            )
        if not (math.isfinite(self.saturation_overshoot) and self.saturation_overshoot > 1):
            raise CurveError(
                f"saturation_overshoot must be > 1, got {self.saturation_overshoot!r}"
            )

    @property
    def b_plateau(self) -> float:
        """Asymptotic core flux density (excluding the mu_0*H term) [T]."""
        return self.saturation_overshoot * self.b_sat

    @property
    def h_knee(self) -> float:
        """Field-intensity scale of the knee [A/m]."""
        return (2.0 * self.b_plateau / math.pi) / ((self.mu_r_init - 1.0) * MU_0)

    def b_of_h(self, h: float) -> float:
        """Flux density on the anhysteretic curve [T]; odd, C1, increasing."""
        h = _check_finite("h", h)
        x = h / self.h_knee
        s = self.knee_sharpness
        g = x * (1.0 + x * x) ** (0.5 * (s - 1.0))
        return (2.0 * self.b_plateau / math.pi) * math.atan(g) + MU_0 * h

    def db_dh(self, h: float) -> float:
        """Differential permeability dB/dH [T/(A/m)]; > mu_0 everywhere."""
        h = _check_finite("h", h)
        x = h / self.h_knee
        s = self.knee_sharpness
        x2 = x * x
        g = x * (1.0 + x2) ** (0.5 * (s - 1.0))
        gp = (1.0 + x2) ** (0.5 * (s - 3.0)) * (1.0 + s * x2)
        return (2.0 * self.b_plateau / math.pi) * gp / (1.0 + g * g) / self.h_knee + MU_0

    def h_of_b(self, b: float) -> float:
        """Inverse lookup H(B) by safeguarded Newton with bisection fallback.

        Round-trips with :meth:`b_of_h` to 1e-12 relative.
        """
        b = _check_finite("b", b)
        if b == 0.0:
            return 0.0
        if b < 0.0:
            return -self.h_of_b(-b)
        # B(H) <= b_plateau + mu_0*H and B(H) >= mu_0*H bracket the root.
        lo = max(0.0, (b - self.b_plateau) / MU_0)
        hi = b / MU_0
        h = min(b / (self.mu_r_init * MU_0), hi)
        tol = _ROUNDTRIP_RTOL * max(1.0, b)
        for _ in range(_MAX_NEWTON_ITER):
            f = self.b_of_h(h) - b
            if abs(f) <= tol:
                return h
            if f > 0.0:
                hi = h
            else:
                lo = h
            step = f / self.db_dh(h)
            h_new = h - step
            if not (lo < h_new < hi):
                h_new = 0.5 * (lo + hi)
            if h_new == h:
                return h
            h = h_new
        raise CurveError(
            f"h_of_b failed to converge for b={b!r}; last bracket [{lo}, {hi}]"
        )

    def dh_db(self, b: float) -> float:
        """Differential reluctivity dH/dB [(A/m)/T] at flux density ``b``."""
        b = _check_finite("b", b)
        return 1.0 / self.db_dh(self.h_of_b(b))

    def energy_density(self, b: float, n_points: int = 48) -> float:
        """Stored magnetic energy density w(B) = integral of H dB [J/m^3].

        Gauss-Legendre quadrature; the integrand is smooth so this is
        accurate far beyond the needs of the power-balance bookkeeping.
        """
        b = _check_finite("b", b)
        if b == 0.0:
            return 0.0
        nodes, weights = _gauss_legendre(n_points)
        half = 0.5 * abs(b)
        total = 0.0
        for xi, wi in zip(nodes, weights):
            total += wi * self.h_of_b(half * (xi + 1.0))
        return half * total


@dataclass(frozen=True)
class ConstantPermeabilityCurve:
    """Linear material B = mu_r*mu_0*H; used for analytic-oracle checks."""

    mu_r: float = 2500.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mu_r) and self.mu_r > 0):
            raise CurveError(f"mu_r must be positive, got {self.mu_r!r}")

    def b_of_h(self, h: float) -> float:
        return self.mu_r * MU_0 * _check_finite("h", h)

    def h_of_b(self, b: float) -> float:
        return _check_finite("b", b) / (self.mu_r * MU_0)

    def db_dh(self, h: float) -> float:
        _check_finite("h", h)
        return self.mu_r * MU_0

    def dh_db(self, b: float) -> float:
        _check_finite("b", b)
        return 1.0 / (self.mu_r * MU_0)

    def energy_density(self, b: float) -> float:
        b = _check_finite("b", b)
        return 0.5 * b * b / (self.mu_r * MU_0)


class TabulatedCurve:
    """Monotone interpolant through measured (H, B) sample points.

    Accepts the two-column CSV described in :func:`load_curve_csv`.  The
    positive branch is mirrored through the origin (anhysteretic curves
    are odd); beyond the last sample the curve continues linearly with
    the end-segment slope, floored at mu_0.
    """

    def __init__(self, h_points, b_points):
        import numpy as np
        from scipy.interpolate import PchipInterpolator

        h = np.asarray(h_points, dtype=float)
        b = np.asarray(b_points, dtype=float)
        if h.ndim != 1 or h.shape != b.shape or h.size < 3:
            raise CurveError("curve table needs >= 3 (h, b) pairs")
        if not (np.isfinite(h).all() and np.isfinite(b).all()):
            raise CurveError("curve table contains non-finite values")
        if h[0] != 0.0 or b[0] != 0.0:
            raise CurveError("curve table must start at H=0, B=0")
        if np.any(np.diff(h) <= 0) or np.any(np.diff(b) <= 0):
            raise CurveError("curve table must be strictly increasing in H and B")
        self._h_max = float(h[-1])
        self._b_max = float(b[-1])
        self._interp = PchipInterpolator(h, b)
        self._deriv = self._interp.derivative()
        self._tail_slope = max(float(self._deriv(self._h_max)), MU_0)

    def b_of_h(self, h: float) -> float:
        h = _check_finite("h", h)
        sign, a = (1.0, h) if h >= 0.0 else (-1.0, -h)
        if a <= self._h_max:
            return sign * float(self._interp(a))
        return sign * (self._b_max + self._tail_slope * (a - self._h_max))

    def db_dh(self, h: float) -> float:
        h = _check_finite("h", h)
        a = abs(h)
        if a <= self._h_max:
            return max(float(self._deriv(a)), MU_0)
        return self._tail_slope

    def h_of_b(self, b: float) -> float:
        b = _check_finite("b", b)
        if b == 0.0:
            return 0.0
        if b < 0.0:
            return -self.h_of_b(-b)
        if b >= self._b_max:
            return self._h_max + (b - self._b_max) / self._tail_slope
        lo, hi = 0.0, self._h_max
        h = 0.5 * hi
        tol = _ROUNDTRIP_RTOL * max(1.0, b)
        for _ in range(_MAX_NEWTON_ITER):
            f = self.b_of_h(h) - b
            if abs(f) <= tol:
                return h
            if f > 0.0:
                hi = h
            else:
                lo = h
            h_new = h - f / self.db_dh(h)
            if not (lo < h_new < hi):
                h_new = 0.5 * (lo + hi)
            if h_new == h:
                return h
            h = h_new
        raise CurveError(
            f"h_of_b failed to converge for b={b!r}; last bracket [{lo}, {hi}]"
        )

    def dh_db(self, b: float) -> float:
        return 1.0 / self.db_dh(self.h_of_b(b))

    def energy_density(self, b: float, n_points: int = 48) -> float:
        b = _check_finite("b", b)
        if b == 0.0:
            return 0.0
        nodes, weights = _gauss_legendre(n_points)
        half = 0.5 * abs(b)
        return half * sum(
            wi * self.h_of_b(half * (xi + 1.0)) for xi, wi in zip(nodes, weights)
        )


def load_curve_csv(path) -> TabulatedCurve:
    """Read a curve table: columns ``h_A_per_m,b_tesla``, H >= 0 strictly
    increasing, first row 0,0.  The negative branch is implied by oddness.
    """
    rows = []
    with open(Path(path), newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip() for c in header[:2]] != ["h_A_per_m", "b_tesla"]:
            raise CurveError(
                f"{path}: expected header 'h_A_per_m,b_tesla', got {header!r}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                h, b = float(row[0]), float(row[1])
            except (ValueError, IndexError) as exc:
                raise CurveError(f"{path}:{lineno}: bad row {row!r}") from exc
            if h < 0.0:
                raise CurveError(f"{path}:{lineno}: negative H not allowed "
                                 "(negative branch is mirrored from positive)")
            rows.append((h, b))
    if not rows:
        raise CurveError(f"{path}: no data rows")
    h_points = [r[0] for r in rows]
    b_points = [r[1] for r in rows]
    return TabulatedCurve(h_points, b_points)


_GL_CACHE: dict[int, tuple[tuple[float, ...], tuple[float, ...]]] = {}


def _gauss_legendre(n: int):
    cached = _GL_CACHE.get(n)
    if cached is None:
        import numpy.polynomial.legendre as leg

        nodes, weights = leg.leggauss(n)
        cached = (tuple(float(x) for x in nodes), tuple(float(w) for w in weights))
        _GL_CACHE[n] = cached
    return cached
