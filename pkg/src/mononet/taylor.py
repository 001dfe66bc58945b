"""Taylor models of exp-sums.

An exp-sum ``f(x) = sum_i nu_i exp(w_i . x)`` with huge, cancelling
coefficients is expanded around the box centre ``c``::

    f(x) = sum_alpha c_alpha (x - c)^alpha + R(x),   |R(x)| <= remainder

with every ``c_alpha`` computed in extended precision.  The polynomial part
has moderate coefficients (it approximates the smooth function the
exp-sum represents), so it can be bounded, majorised and evaluated in
float64 without catastrophic cancellation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from mpmath import mp, mpf

UNIT_ROUNDOFF = 2.0**-53


def gamma(n: int) -> float:
    """Classical ``n u / (1 - n u)`` rounding-error constant."""
    nu = n * UNIT_ROUNDOFF
    return nu / (1.0 - nu)


def multi_indices(d: int, order: int) -> list[tuple[int, ...]]:
    """All multi-indices in ``d`` variables of total degree ``<= order``."""
    if d == 0:
        return [()]
    out = []
    for first in range(order + 1):
        for rest in multi_indices(d - 1, order - first):
            out.append((first,) + rest)
    out.sort(key=lambda a: (sum(a), tuple(-v for v in a)))
    return out


def round_up(x) -> float:
    """Nearest float that is not below the mpf ``x``."""
    v = float(x)
    if v < x:
        v = math.nextafter(v, math.inf)
    return v


def round_down(x) -> float:
    """Nearest float that is not above the mpf ``x``."""
    v = float(x)
    if v > x:
        v = math.nextafter(v, -math.inf)
    return v


@dataclass(frozen=True)
class TaylorModel:
    """Polynomial in ``(x - center)`` plus an absolute remainder bound."""

    center: tuple[float, ...]
    radius: tuple[mpf, ...]
    order: int
    coeffs: dict
    remainder: mpf
    prec: int

    @property
    def d(self) -> int:
        return len(self.center)

    def _abs_tail(self, skip_constant: bool) -> mpf:
        with mp.workprec(self.prec):
            total = mpf(0)
            for alpha, c in self.coeffs.items():
                if skip_constant and not any(alpha):
                    continue
                term = abs(c)
                for r, a in zip(self.radius, alpha):
                    if a:
                        term *= r**a
                total += term
            return total

    def majorant(self) -> float:
        """Upper bound on ``|f|`` over the box."""
        with mp.workprec(self.prec):
            return round_up(self._abs_tail(False) + self.remainder)

    def range_bound(self) -> tuple[float, float]:
        """Enclosure ``[lo, hi]`` of the values of ``f`` over the box."""
        with mp.workprec(self.prec):
            c0 = self.coeffs.get((0,) * self.d, mpf(0))
            spread = self._abs_tail(True) + self.remainder
            return round_down(c0 - spread), round_up(c0 + spread)

    def eval_error_bound(self) -> float:
        """Bound on |double evaluation - f| for points inside the box."""
        n_mon = len(self.coeffs)
        rel = UNIT_ROUNDOFF + gamma(2 * self.order + 2) + gamma(n_mon + 1)
        with mp.workprec(self.prec):
            return round_up(self._abs_tail(False) * mpf(rel) * (1 + mpf(2) ** -20) + self.remainder)

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """float64 evaluation of the polynomial part at the rows of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        diff = X - np.asarray(self.center)[None, :]
        out = np.zeros(X.shape[0])
        if self.d == 1:
            coeffs = [float(self.coeffs.get((j,), 0)) for j in range(self.order + 1)]
            u = diff[:, 0]
            for c in reversed(coeffs):
                out = out * u + c
            return out
        powers = [
            np.stack([diff[:, k] ** j for j in range(self.order + 1)]) for k in range(self.d)
        ]
        for alpha, c in self.coeffs.items():
            mono = np.full(X.shape[0], float(c))
            for k, a in enumerate(alpha):
                if a:
                    mono = mono * powers[k][a]
            out += mono
        return out


def build_taylor_model(
    nus: Sequence[mpf],
    ws: Sequence[Sequence[mpf]],
    lo: Sequence[float],
    hi: Sequence[float],
    prec: int,
    tol: float = 1e-14,
    max_order: int = 120,
    max_monomials: int = 20000,
) -> TaylorModel:
    """Expand ``sum_i nus[i] * exp(ws[i] . x)`` over the box ``[lo, hi]``.

    The order is the smallest one whose remainder bound drops below ``tol``,
    subject to ``max_order`` and ``max_monomials``; the remainder is always
    rigorous, only its size depends on the order reached.
    """
    d = len(lo)
    center = tuple(float((a + b) / 2) for a, b in zip(lo, hi))
    with mp.workprec(prec):
        radius = tuple(
            max(mpf(b) - mpf(c), mpf(c) - mpf(a)) for a, b, c in zip(lo, hi, center)
        )
        bases, rhos, supports = [], [], []
        for nu, w in zip(nus, ws):
            arg = mp.fsum(wk * mpf(ck) for wk, ck in zip(w, center))
            bases.append(nu * mp.exp(arg))
            rhos.append(mp.fsum(abs(wk) * rk for wk, rk in zip(w, radius)))
            supports.append(tuple(k for k, wk in enumerate(w) if wk != 0))
        mass = mp.fsum(abs(b) * mp.exp(r) for b, r in zip(bases, rhos))

        def tail(order: int) -> mpf:
            f = mp.factorial(order + 1)
            return mp.fsum(abs(b) * r ** (order + 1) / f * mp.exp(r) for b, r in zip(bases, rhos))

        d_eff = max((len(s) for s in supports), default=0)
        order = 1
        while order < max_order:
            if tail(order) <= tol:
                break
            if math.comb(order + 1 + d_eff, d_eff) > max_monomials:
                break
            order += 1

        coeffs: dict = {}
        inv_fact = [1 / mp.factorial(j) for j in range(order + 1)]
        index_cache: dict = {}
        for base, w, supp in zip(bases, ws, supports):
            if base == 0:
                continue
            key = len(supp)
            if key not in index_cache:
                index_cache[key] = multi_indices(key, order)
            pw = [[w[k] ** j * inv_fact[j] for j in range(order + 1)] for k in supp]
            for sub in index_cache[key]:
                val = base
                for p, a in zip(pw, sub):
                    if a:
                        val *= p[a]
                alpha = [0] * d
                for k, a in zip(supp, sub):
                    alpha[k] = a
                alpha = tuple(alpha)
                coeffs[alpha] = coeffs.get(alpha, mpf(0)) + val
        work_err = mass * (d + order + len(bases) + 8) * mpf(2) ** (-(prec - 4))
        remainder = tail(order) + work_err
    return TaylorModel(center, radius, order, coeffs, remainder, prec)
