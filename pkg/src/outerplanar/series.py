"""Generating series, phase parameters and offspring laws of face-weighted
dissections and outerplanar maps.

Notation follows the usual simply-generated-tree conventions:

    s(z)     = sum_{k>=1} iota_{k+2} z^k          (faces)
    phi_D(z) = 1 / (1 - s(z))                     (chord-restricted dissections)
    D(z)     = z phi_D(D(z))                      (dissections, origin not counted)
    phi_O(z) = 1 / (1 - D(z))                     (sequences of dissections)
    O(z)     = z phi_O(O(z))                      (outerplanar maps)

Infinite quantities are represented by ``math.inf``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import special

INF = math.inf

BISECT_TOL = 1e-13
IDENTITY_TOL = 1e-10


class SeriesError(ValueError):
    """Raised for invalid weight models or failed numerical solves."""


# ---------------------------------------------------------------------------
# special functions
# ---------------------------------------------------------------------------


def zeta(s: float) -> float:
    """Riemann zeta for real s > 1."""
    if not s > 1:
        raise SeriesError(f"zeta requires s > 1, got {s}")
    return float(special.zeta(s, 1))


def gamma_neg(alpha: float) -> float:
    """Gamma(-alpha); integer alpha is a pole."""
    if float(alpha).is_integer():
        raise SeriesError(f"Gamma(-alpha) has a pole at alpha = {alpha}")
    return math.gamma(-alpha)


def _powerlaw_sum(beta: float, q: float) -> float:
    """sum_{k>=1} k^(-beta) q^k for 0 <= q <= 1 (inf if divergent)."""
    if q <= 0.0:
        return 0.0
    if q >= 1.0:
        return zeta(beta) if beta > 1 else INF
    # terms decay at least like q^k; stop once below 1e-18 relative
    K = int(math.ceil(-41.5 / math.log(q))) + 2
    if K <= 4_000_000:
        k = np.arange(1, K + 1, dtype=float)
        return float(np.sum(np.exp(k * math.log(q) - beta * np.log(k))))
    import mpmath

    return float(mpmath.polylog(beta, q))


# ---------------------------------------------------------------------------
# weight models
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightModel:
    """Face-weight sequence (iota_k)_{k>=3}.

    kind is ``"uniform"`` (iota_k = 1), ``"power_law"``
    (iota_{k+2} = c k^{-alpha-1} r^{-k}) or ``"explicit"`` (weights list
    iota_3, ..., iota_{K+2}, zero beyond).
    """

    kind: str
    alpha: float | None = None
    c: float | None = None
    r: float | None = None
    weights: tuple = field(default=())

    def __post_init__(self):
        if self.kind == "uniform":
            return
        if self.kind == "power_law":
            if self.alpha is None or self.c is None or self.r is None:
                raise SeriesError("power_law needs alpha, c and r")
            if not self.alpha > 1:
                raise SeriesError(f"power_law requires alpha > 1, got {self.alpha}")
            if not self.c > 0:
                raise SeriesError("power_law requires c > 0")
            if not 0 < self.r < 1:
                raise SeriesError("power_law requires r in (0, 1)")
            return
        if self.kind == "explicit":
            if any(w < 0 for w in self.weights):
                raise SeriesError("negative face weight")
            if not any(w > 0 for w in self.weights):
                raise SeriesError("empty weight model")
            return
        raise SeriesError(f"unknown weight model kind {self.kind!r}")

    # -- constructors -------------------------------------------------------
    @classmethod
    def uniform(cls) -> "WeightModel":
        return cls("uniform")

    @classmethod
    def power_law(cls, alpha: float, c: float, r: float) -> "WeightModel":
        return cls("power_law", alpha=float(alpha), c=float(c), r=float(r))

    @classmethod
    def explicit(cls, weights: Sequence) -> "WeightModel":
        return cls("explicit", weights=tuple(weights))

    @property
    def K(self) -> int | None:
        """Truncation degree of an explicit model (largest k with iota_{k+2} listed)."""
        return len(self.weights) if self.kind == "explicit" else None

    # -- coefficients -------------------------------------------------------
    def iota(self, k: int, exact: bool = False):
        """Weight of an inner face of degree k >= 3."""
        j = k - 2
        if j < 1:
            return 0
        if self.kind == "uniform":
            return Fraction(1) if exact else 1.0
        if self.kind == "explicit":
            if j > len(self.weights):
                return Fraction(0) if exact else 0.0
            w = self.weights[j - 1]
            return Fraction(w) if exact else float(w)
        if exact:
            raise SeriesError("exact arithmetic is unavailable for power_law weights")
        return self.c * j ** (-self.alpha - 1) * self.r ** (-j)

    def s_coeffs(self, N: int, x: float = 1.0) -> np.ndarray:
        """Coefficients of s(x z) up to z^N, computed without overflow."""
        out = np.zeros(N + 1)
        if N < 1:
            return out
        k = np.arange(1, N + 1, dtype=float)
        if self.kind == "uniform":
            out[1:] = x ** k
        elif self.kind == "explicit":
            m = min(N, len(self.weights))
            out[1:m + 1] = np.asarray(self.weights[:m], dtype=float) * x ** k[:m]
        else:
            with np.errstate(divide="ignore"):
                logq = math.log(x / self.r) if x > 0 else -np.inf
            out[1:] = self.c * np.exp(-(self.alpha + 1) * np.log(k) + k * logq)
        return out

    @property
    def radius(self) -> float:
        """Radius of convergence r of s."""
        if self.kind == "uniform":
            return 1.0
        if self.kind == "explicit":
            return INF
        return self.r

    def s_derivs(self, x: float) -> tuple[float, float, float]:
        """(s(x), s'(x), s''(x)) for 0 <= x <= r, with inf where divergent."""
        if x < 0:
            raise SeriesError("negative argument")
        if self.kind == "uniform":
            if x >= 1:
                return INF, INF, INF
            return x / (1 - x), 1 / (1 - x) ** 2, 2 / (1 - x) ** 3
        if self.kind == "explicit":
            w = np.asarray(self.weights, dtype=float)
            k = np.arange(1, len(w) + 1, dtype=float)
            s0 = float(np.sum(w * x ** k))
            s1 = float(np.sum(w * k * x ** (k - 1)))
            s2 = float(np.sum(w * k * (k - 1) * x ** np.maximum(k - 2, 0)))
            return s0, s1, s2
        if x > self.r * (1 + 1e-15):
            return INF, INF, INF
        q = min(x / self.r, 1.0)
        a, c, r = self.alpha, self.c, self.r
        s0 = c * _powerlaw_sum(a + 1, q)
        if x == 0:
            return 0.0, c / r, 2 * c * 2 ** (-a - 1) / r ** 2
        s1 = c * _powerlaw_sum(a, q) / x
        # sum k(k-1) k^{-a-1} q^k = sum k^{1-a} q^k - sum k^{-a} q^k
        t = _powerlaw_sum(a - 1, q)
        s2 = INF if t == INF else c * (t - _powerlaw_sum(a, q)) / x ** 2
        return s0, s1, s2

    # -- (de)serialisation ----------------------------------------------------
    def to_dict(self) -> dict:
        if self.kind == "uniform":
            return {"kind": "uniform"}
        if self.kind == "explicit":
            return {"kind": "explicit", "weights": list(self.weights)}
        return {"kind": "power_law", "alpha": self.alpha, "c": self.c, "r": self.r}


def model_from_dict(cfg: dict) -> WeightModel:
    """Build a model from its JSON form.

    ``{"kind": "power_law", "alpha": a}`` (optionally with ``c``) derives r
    from the critical construction; an explicit ``r`` is used as given.
    """
    kind = cfg.get("kind")
    if kind == "uniform":
        return WeightModel.uniform()
    if kind == "explicit":
        return WeightModel.explicit(cfg.get("weights", []))
    if kind == "power_law":
        if "r" in cfg:
            return WeightModel.power_law(cfg["alpha"], cfg["c"], cfg["r"])
        model, _, _, _ = build_power_law_weights(cfg["alpha"], cfg.get("c"), cfg.get("nu_O", 1.0))
        return model
    raise SeriesError(f"unknown weight model kind {kind!r}")


def load_model(path) -> WeightModel:
    with open(path) as fh:
        return model_from_dict(json.load(fh))


def build_power_law_weights(alpha: float, c: float | None = None, nu_O: float = 1.0):
    """Power-law weights c k^{-alpha-1} r^{-k}, with r tuned to a target nu_O.

    Returns ``(model, c0, c, r)`` where c0 = 1/(zeta(alpha)+zeta(alpha+1)) is
    the supremum of admissible c and r solves
    r/(1-r) = nu_O (1 - c zeta(alpha) / (1 - c zeta(alpha+1))).
    The default nu_O = 1 is the critical tuning.
    """
    if not alpha > 1:
        raise SeriesError(f"alpha must exceed 1, got {alpha}")
    if not 0 < nu_O <= 1:
        raise SeriesError(f"nu_O must lie in (0, 1], got {nu_O}")
    za, za1 = zeta(alpha), zeta(alpha + 1)
    c0 = 1.0 / (za + za1)
    if c is None:
        c = c0 / 2
    if not 0 < c < c0:
        raise SeriesError(f"supercritical c: need 0 < c < c0 = {c0:.12g}, got {c}")
    t = nu_O * (1.0 - c * za / (1.0 - c * za1))
    r = t / (1.0 + t)
    return WeightModel.power_law(alpha, c, r), c0, c, r


def regime_identity_residual(model: WeightModel) -> float:
    """|r/(1-r) + r s'(r)/(1-s(r)) - 1|; zero exactly when nu_O = 1."""
    r = model.radius
    if not r < 1:
        return INF
    s0, s1, _ = model.s_derivs(r)
    if not s0 < 1:
        return INF
    return abs(r / (1 - r) + r * s1 / (1 - s0) - 1)


# ---------------------------------------------------------------------------
# truncated power series
# ---------------------------------------------------------------------------

def _inverse_one_minus(a: Sequence, N: int, zero):
    """Coefficients of 1/(1 - a(z)) up to z^N, assuming a_0 = 0."""
    out = [zero] * (N + 1)
    out[0] = zero + 1
    for n in range(1, N + 1):
        acc = zero
        for k in range(1, n + 1):
            if a[k]:
                acc += a[k] * out[n - k]
        out[n] = acc
    return out


def _inverse_one_minus_np(a: np.ndarray, N: int) -> np.ndarray:
    out = np.zeros(N + 1)
    out[0] = 1.0
    for n in range(1, N + 1):
        out[n] = np.dot(a[1:n + 1], out[n - 1::-1][:n])
    return out


def _solve_tree_equation(a, N: int, exact: bool):
    """Coefficients of Y = z / (1 - a(Y)) up to z^N.

    Each pass fixes one further coefficient: Y_n = [z^{n-1}] 1/(1 - a(Y)) only
    involves Y_1..Y_{n-1}.  Powers [z^m] Y^k are kept in a table so the total
    cost is cubic in N.
    """
    if exact:
        zero = Fraction(0)
        Y = [zero] * (N + 1)
        P = [[zero] * (N + 1) for _ in range(N + 1)]  # P[k][m] = [z^m] Y^k
        P[0][0] = Fraction(1)
        E = [zero] * (N + 1)  # a(Y)
        F = [zero] * (N + 1)  # 1/(1 - a(Y))
        F[0] = Fraction(1)
        for n in range(1, N + 1):
            Y[n] = F[n - 1]
            m = n
            # [z^m] Y^k for all k, now that Y_1..Y_m are known
            for k in range(1, m + 1):
                acc = zero
                for i in range(1, m - k + 2):
                    if Y[i] and P[k - 1][m - i]:
                        acc += Y[i] * P[k - 1][m - i]
                P[k][m] = acc
            E[m] = sum((a[k] * P[k][m] for k in range(1, m + 1) if a[k]), zero)
            F[m] = sum((E[i] * F[m - i] for i in range(1, m + 1)), zero)
        return Y
    a = np.asarray(a, dtype=float)
    Y = np.zeros(N + 1)
    P = np.zeros((N + 1, N + 1))
    P[0, 0] = 1.0
    E = np.zeros(N + 1)
    F = np.zeros(N + 1)
    F[0] = 1.0
    for n in range(1, N + 1):
        Y[n] = F[n - 1]
        m = n
        # P[k, m] = sum_i Y_i P[k-1, m-i]
        P[1:m + 1, m] = P[0:m, m - 1::-1][:, :m] @ Y[1:m + 1]
        E[m] = np.dot(a[1:m + 1], P[1:m + 1, m])
        F[m] = np.dot(E[1:m + 1], F[m - 1::-1][:m])
    return Y


@dataclass(frozen=True)
class SeriesTable:
    """Truncated coefficient lists (index = power of z)."""

    truncation: int
    s_coeffs: tuple
    phiD_coeffs: tuple
    D_coeffs: tuple
    phiO_coeffs: tuple
    O_coeffs: tuple
    exact: bool = False


def build_series(model: WeightModel, N: int, exact: bool = False) -> SeriesTable:
    """All five coefficient lists of the model up to z^N.

    ``exact=True`` uses rational arithmetic (uniform and explicit models only).
    """
    if N < 1:
        raise SeriesError("truncation must be >= 1")
    if exact:
        s = [Fraction(0)] + [model.iota(k + 2, exact=True) for k in range(1, N + 1)]
        if not any(s) and model.kind == "explicit" and not any(model.weights):
            raise SeriesError("empty weight model")
        zero = Fraction(0)
        phiD = _inverse_one_minus(s, N, zero)
        D = _solve_tree_equation(s, N, exact=True)
        phiO = _inverse_one_minus(D, N, zero)
        O = _solve_tree_equation(D, N, exact=True)
    else:
        s = model.s_coeffs(N)
        if not np.all(np.isfinite(s)):
            raise SeriesError("face weights overflow double precision at this truncation")
        phiD = _inverse_one_minus_np(s, N)
        D = _solve_tree_equation(s, N, exact=False)
        phiO = _inverse_one_minus_np(D, N)
        O = _solve_tree_equation(D, N, exact=False)
        for arr in (phiD, D, phiO, O):
            if not np.all(np.isfinite(arr)):
                raise SeriesError("series coefficients overflow double precision")
    return SeriesTable(N, tuple(s), tuple(phiD), tuple(D), tuple(phiO), tuple(O), exact)


def fixed_point_residual(table: SeriesTable) -> float:
    """max_n |[z^n](D - z phi_D(D))| / max(1, |[z^n]D|), and the same for O."""
    N = table.truncation
    worst = 0.0
    for inner, Y in ((table.s_coeffs, table.D_coeffs), (table.D_coeffs, table.O_coeffs)):
        a = np.asarray([float(v) for v in inner])
        y = np.asarray([float(v) for v in Y])
        # a(Y) by Horner on truncated series
        comp = np.zeros(N + 1)
        for k in range(N, 0, -1):
            comp[0] += a[k]
            comp = np.convolve(comp, y)[:N + 1]
        phi = _inverse_one_minus_np(comp, N)
        rhs = np.concatenate(([0.0], phi[:N]))
        worst = max(worst, float(np.max(np.abs(y - rhs) / np.maximum(1.0, np.abs(y)))))
    return worst


# ---------------------------------------------------------------------------
# phase parameters
# ---------------------------------------------------------------------------

def _bisect(f, lo: float, hi: float, what: str, tol: float = BISECT_TOL) -> float:
    """Root of an increasing function f on [lo, hi]."""
    flo, fhi = f(lo), f(hi)
    if not (flo <= 0 <= fhi):
        raise SeriesError(
            f"bisection for {what} not bracketed: f({lo:.6g})={flo:.6g}, f({hi:.6g})={fhi:.6g}"
        )
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if hi - lo <= tol:
            break
        if f(mid) <= 0:
            lo = mid
        else:
            hi = mid
    else:
        raise SeriesError(f"bisection for {what} did not converge on [{lo}, {hi}]")
    return 0.5 * (lo + hi)


class _Analytic:
    """Closed-form evaluation of phi_D, D and psi functions for one model."""

    def __init__(self, model: WeightModel):
        self.model = model
        r = model.radius
        self.r = r
        # radius of phi_D: first x with s(x) = 1, else r
        if r == INF:
            hi = 1.0
            while model.s_derivs(hi)[0] < 1:
                hi *= 2
            self.rho_phiD = _bisect(lambda x: model.s_derivs(x)[0] - 1, 0.0, hi, "rho_phiD")
        else:
            sr = model.s_derivs(r)[0]
            if sr <= 1:
                self.rho_phiD = r
            else:
                self.rho_phiD = _bisect(
                    lambda x: model.s_derivs(x)[0] - 1, 0.0, r, "rho_phiD"
                )

    def phi(self, x):
        s0, s1, s2 = self.model.s_derivs(x)
        if s0 >= 1:
            return INF, INF, INF
        p0 = 1 / (1 - s0)
        p1 = s1 * p0 ** 2
        p2 = INF if s2 == INF else s2 * p0 ** 2 + 2 * s1 ** 2 * p0 ** 3
        return p0, p1, p2

    def psi_D(self, x: float) -> float:
        if x == 0:
            return 0.0
        s0, s1, _ = self.model.s_derivs(x)
        if s0 >= 1:
            return INF
        return x * s1 / (1 - s0)

    def psi_D_prime(self, x: float) -> float:
        s0, s1, s2 = self.model.s_derivs(x)
        if s2 == INF or s0 >= 1:
            return INF
        return ((s1 + x * s2) * (1 - s0) + x * s1 ** 2) / (1 - s0) ** 2

    # D(x) on [0, rho_D] is the inverse of y -> y (1 - s(y)) on [0, tau_D]
    def D(self, x: float) -> float:
        if x >= self.rho_D:
            return self.tau_D
        return _bisect(lambda y: y * (1 - self.model.s_derivs(y)[0]) - x, 0.0, self.tau_D, "D(x)")

    def D_derivs(self, x: float):
        """(D, D', D'') at 0 <= x <= rho_D."""
        y = self.D(x)
        p0, p1, p2 = self.phi(y)
        denom = 1 - x * p1
        if denom <= 1e-300:
            return y, INF, INF
        d1 = p0 / denom
        if p2 == INF:
            return y, d1, INF
        d2 = (2 * p1 * d1 + x * p2 * d1 ** 2) / denom
        return y, d1, d2

    def psi_O(self, x: float) -> float:
        y, d1, _ = self.D_derivs(x)
        if y >= 1:
            return INF
        return x * d1 / (1 - y)

    def psi_O_prime(self, x: float) -> float:
        y, d1, d2 = self.D_derivs(x)
        if d1 == INF or d2 == INF or y >= 1:
            return INF
        return ((d1 + x * d2) * (1 - y) + x * d1 ** 2) / (1 - y) ** 2


@dataclass(frozen=True)
class PhaseParameters:
    r: float
    s_at_r: float
    s_prime_at_r: float
    s_second_at_r: float
    rho_phiD: float
    tau_D: float
    nu_D: float
    sigma2_D: float
    rho_D: float
    rho_phiO: float
    tau_O: float
    nu_O: float
    sigma2_O: float
    regime: str
    alpha: float | None = None
    identity_residual: float = INF

    def to_dict(self) -> dict:
        def enc(v):
            if isinstance(v, float) and math.isinf(v):
                return "inf" if v > 0 else "-inf"
            return v

        return {k: enc(v) for k, v in self.__dict__.items()}


REGIMES = ("Circle", "LooptreeAlpha", "BrownianFinite", "Degenerate", "Unclassified")


def phase_parameters(model: WeightModel, N: int = 64) -> PhaseParameters:
    """Analytic phase diagram quantities of ``model``.

    ``N`` is accepted for interface symmetry with :func:`build_series`; all
    quantities are evaluated in closed form at the relevant points.
    """
    an = _Analytic(model)
    r = model.radius
    if r == INF:
        s_r = s1_r = s2_r = INF
    else:
        s_r, s1_r, s2_r = model.s_derivs(r)
    rho_phiD = an.rho_phiD

    # nu_D = lim psi_D at rho_phiD
    if rho_phiD < r or model.s_derivs(rho_phiD)[0] >= 1 - 1e-15:
        nu_D = INF
    else:
        nu_D = an.psi_D(rho_phiD)
    if nu_D >= 1:
        hi = rho_phiD
        if an.psi_D(hi) == INF:
            # step back from the pole so the bracket is finite
            hi = rho_phiD * (1 - 1e-15)
        tau_D = _bisect(lambda x: an.psi_D(x) - 1, 0.0, hi, "tau_D")
    else:
        tau_D = rho_phiD
    an.tau_D = tau_D
    sigma2_D = tau_D * an.psi_D_prime(tau_D)
    rho_D = tau_D / an.phi(tau_D)[0]
    an.rho_D = rho_D

    residual = regime_identity_residual(model)
    if nu_D >= 1:
        nu_O = INF
    elif nu_D == 0:
        nu_O = 0.0
    elif rho_phiD >= 1:
        nu_O = INF
    else:
        nu_O = tau_D / ((1 - tau_D) * (1 - nu_D))
        if residual <= IDENTITY_TOL:
            nu_O = 1.0

    # radius of phi_O = 1/(1 - D)
    if tau_D < 1:
        rho_phiO = rho_D
    else:
        rho_phiO = 1 - model.s_derivs(1.0)[0]
    if nu_O > 1:
        hi = rho_phiO
        if an.psi_O(hi) == INF:
            hi = rho_phiO * (1 - 1e-13)
        tau_O = _bisect(lambda x: an.psi_O(x) - 1, 0.0, hi, "tau_O")
    else:
        tau_O = rho_phiO
    if nu_O == 1.0 and s2_r == INF:
        sigma2_O = INF
    else:
        sigma2_O = tau_O * an.psi_O_prime(tau_O)

    alpha = model.alpha if model.kind == "power_law" else None
    if nu_O == 0:
        regime = "Degenerate"
    elif nu_O < 1:
        regime = "Circle"
    elif nu_O == 1.0 and sigma2_O == INF:
        regime = "LooptreeAlpha" if alpha is not None and 1 < alpha < 2 else "Unclassified"
    elif nu_O >= 1:
        regime = "BrownianFinite"
    else:
        regime = "Unclassified"
    return PhaseParameters(
        r=r, s_at_r=s_r, s_prime_at_r=s1_r, s_second_at_r=s2_r,
        rho_phiD=rho_phiD, tau_D=tau_D, nu_D=nu_D, sigma2_D=sigma2_D, rho_D=rho_D,
        rho_phiO=rho_phiO, tau_O=tau_O, nu_O=nu_O, sigma2_O=sigma2_O,
        regime=regime, alpha=alpha, identity_residual=residual,
    )


def D_value(model: WeightModel, params: PhaseParameters, x: float) -> float:
    """D(x) for 0 <= x <= rho_D, by inverting y (1 - s(y)) = x."""
    an = _Analytic(model)
    an.tau_D, an.rho_D = params.tau_D, params.rho_D
    return an.D(x)


# ---------------------------------------------------------------------------
# scaling constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ScalingConstants:
    alpha: float
    gamma_neg_alpha: float
    b_n_factor: float
    theorem_factor: float
    nu_D_complement: float

    def b_n(self, n: float) -> float:
        return self.b_n_factor * n ** (1 / self.alpha)

    def diameter_scale(self, n: float) -> float:
        """Multiplier of the map metric in the looptree limit."""
        return self.theorem_factor * n ** (-1 / self.alpha)


def scaling_constants(params: PhaseParameters, alpha: float, c: float) -> ScalingConstants:
    """n-independent parts of b_n and of the map normalisation (L_n = c)."""
    if params.regime != "LooptreeAlpha":
        raise SeriesError(f"scaling constants need the LooptreeAlpha regime, got {params.regime}")
    g = gamma_neg(alpha)
    r, s_r = params.r, params.s_at_r
    base = c * g / (1 - s_r)
    theorem = base ** (-1 / alpha)
    b = base ** (1 / alpha) * (1 - r) / r
    return ScalingConstants(alpha, g, b, theorem, r / (1 - r))


# ---------------------------------------------------------------------------
# offspring laws
# ---------------------------------------------------------------------------

LAW_LABELS = ("DissectionVertexLaw", "MapVertexLaw", "MapLeafLaw")


@dataclass(frozen=True)
class OffspringLaw:
    probabilities: np.ndarray
    tail_mass: float
    mean: float
    label: str

    @property
    def K(self) -> int:
        return len(self.probabilities) - 1


def _scaled_D(model: WeightModel, x: float, K: int) -> np.ndarray:
    """Coefficients of D(x z) up to z^K (float), solved in the scaled variable."""
    # D(xz) = x z / (1 - s(D(xz))); with Y = D(xz)/x... keep it direct:
    # Y(z) := D(xz) satisfies Y = x z phi_D(Y), i.e. Y/x = z / (1 - s(Y)).
    # Substitute Y = x U:  U = z / (1 - s(x U)), whose inner series is s(x .).
    U = _solve_tree_equation(model.s_coeffs(K, x), K, exact=False)
    return x * U


def offspring_law(model: WeightModel, params: PhaseParameters, which: str, K: int,
                  tail_tol: float | None = None) -> OffspringLaw:
    """Truncated offspring law of one of the three tree couplings.

    DissectionVertexLaw: p_k = gamma_k tau_D^k / phi_D(tau_D)
    MapVertexLaw:        p_k = omega_k tau_O^k / phi_O(tau_O)
    MapLeafLaw:          p_0 = 1 - D(tau_O), p_k = tau_O^{k-1} [z^{k-1}] D
    """
    if which == "DissectionVertexLaw":
        t = params.tau_D
        a = model.s_coeffs(K, t)
        p = _inverse_one_minus_np(a, K)
        s_t = model.s_derivs(t)[0]
        p = p * (1 - s_t)
    elif which == "MapVertexLaw":
        t = params.tau_O
        Dt = _scaled_D(model, t, K)
        p = _inverse_one_minus_np(Dt, K)
        p = p * (1 - D_value(model, params, t))
    elif which == "MapLeafLaw":
        t = params.tau_O
        Dt = _scaled_D(model, t, max(K - 1, 1))
        p = np.zeros(K + 1)
        p[0] = 1 - D_value(model, params, t)
        if K >= 1:
            p[1:] = Dt[:K]
    else:
        raise SeriesError(f"unknown offspring law {which!r}")
    p = np.clip(p, 0.0, None)
    tail = max(0.0, 1.0 - float(math.fsum(p)))
    if tail_tol is not None and tail > tail_tol:
        raise SeriesError(f"cutoff K={K} too small: tail mass {tail:.3g} > {tail_tol:.3g}")
    mean = float(np.dot(np.arange(K + 1), p))
    return OffspringLaw(p, tail, mean, which)


@lru_cache(maxsize=32)
def dissection_law_table(model: WeightModel, K: int) -> np.ndarray:
    """Cached DissectionVertexLaw probabilities p_0..p_K."""
    params = cached_phase_parameters(model)
    return offspring_law(model, params, "DissectionVertexLaw", K).probabilities


@lru_cache(maxsize=32)
def cached_phase_parameters(model: WeightModel) -> PhaseParameters:
    return phase_parameters(model)
