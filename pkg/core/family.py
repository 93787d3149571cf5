"""Copyright 2025 The ghive developers

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Self

import numpy as np
from scipy import special

from .constants import EPS_FLOOR
from .enums import FamilyKind
from .errors import FamilyDomainError, ValidationError


if TYPE_CHECKING:
    from numpy.typing import ArrayLike

    from types_.arrays import BoolArray, FloatArray


__all__ = ("GlmFamily", "b_derivs", "loglik_term", "quasi_loglik_term", "weighted_residual", "zeta")


def _as_finite(value: ArrayLike, name: str) -> FloatArray:
    arr: FloatArray = np.asarray(value, dtype=np.float64)

    if not np.all(np.isfinite(arr)):
        raise FamilyDomainError(f"{name} must be finite.")

    return arr


@dataclass(frozen=True, slots=True)
class GlmFamily:
    """Canonical-link exponential family with known dispersion.

    Gaussian has ``b(t) = t²/2``, Bernoulli ``b(t) = log(1 + eᵗ)`` and Poisson ``b(t) = eᵗ``.
    Every method accepts scalars or arrays and broadcasts ``y`` against ``eta``.
    """

    kind: FamilyKind
    dispersion: float = 1.0
    eps_floor: float = EPS_FLOOR

    def __post_init__(self) -> None:
        if self.dispersion != 1.0:
            raise ValidationError("Only the known dispersion 1.0 is supported.")

        if self.eps_floor <= 0:
            raise ValidationError("eps_floor must be positive.")

    @classmethod
    def from_name(cls, name: str, /, *, eps_floor: float = EPS_FLOOR) -> Self:
        try:
            kind: FamilyKind = FamilyKind(name.lower())
        except ValueError:
            choices: str = ", ".join(k.value for k in FamilyKind)
            raise ValidationError(f'Unknown family "{name}", expected one of: {choices}.') from None

        return cls(kind=kind, eps_floor=eps_floor)

    @property
    def name(self) -> str:
        return self.kind.value

    def derivatives(self, t: ArrayLike) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray, FloatArray]:
        """Return ``(b, b', b'', b''', b'''')`` evaluated at ``t``."""
        t_: FloatArray = _as_finite(t, "t")

        if self.kind is FamilyKind.gaussian:
            zero: FloatArray = np.zeros_like(t_)
            return 0.5 * t_ * t_, t_.copy(), np.ones_like(t_), zero, zero.copy()

        if self.kind is FamilyKind.bernoulli:
            # softplus and the expit products stay accurate far into the tails
            b: FloatArray = np.logaddexp(0.0, t_)
            b1: FloatArray = special.expit(t_)
            b2: FloatArray = b1 * special.expit(-t_)
            b3: FloatArray = b2 * -np.tanh(0.5 * t_)
            b4: FloatArray = b2 * (1.0 - 6.0 * b2)
            return b, b1, b2, b3, b4

        e: FloatArray = np.exp(t_)
        return e, e.copy(), e.copy(), e.copy(), e.copy()

    def mean(self, eta: ArrayLike) -> FloatArray:
        return self.derivatives(eta)[1]

    def variance(self, eta: ArrayLike) -> FloatArray:
        return self.derivatives(eta)[2]

    def third_over_second(self, eta: ArrayLike) -> FloatArray:
        """``b'''/b''``, which is bounded for every supported family."""
        eta_: FloatArray = _as_finite(eta, "eta")

        if self.kind is FamilyKind.gaussian:
            return np.zeros_like(eta_)

        if self.kind is FamilyKind.bernoulli:
            return -np.tanh(0.5 * eta_)

        return np.ones_like(eta_)

    def response_mask(self, y: ArrayLike) -> BoolArray:
        """True where ``y`` lies in the support of the family."""
        y_: FloatArray = np.asarray(y, dtype=np.float64)
        mask: BoolArray = np.isfinite(y_)

        if self.kind is FamilyKind.bernoulli:
            mask &= (y_ == 0.0) | (y_ == 1.0)
        elif self.kind is FamilyKind.poisson:
            mask &= y_ >= 0.0

        return mask

    def validate_response(self, y: ArrayLike) -> None:
        y_: FloatArray = _as_finite(y, "y")

        if self.kind is FamilyKind.bernoulli and not np.all((y_ == 0.0) | (y_ == 1.0)):
            raise FamilyDomainError("Bernoulli responses must be 0 or 1.")

        if self.kind is FamilyKind.poisson and np.any(y_ < 0.0):
            raise FamilyDomainError("Poisson responses must be non-negative.")

    def weighted_residual(self, y: ArrayLike, eta: ArrayLike) -> FloatArray:
        """Inverse-variance weighted residual ``(y − b'(η)) / max(b''(η), eps_floor)``.

        For Bernoulli the ratio is bounded by ``1 / eps_floor`` however far ``η`` diverges.
        """
        y_: FloatArray = _as_finite(y, "y")
        eta_: FloatArray = _as_finite(eta, "eta")

        if self.kind is FamilyKind.gaussian:
            return y_ - eta_

        if self.kind is FamilyKind.bernoulli:
            y_b, eta_b = np.broadcast_arrays(y_, eta_)
            # 1 − σ(η) is taken as σ(−η) so it keeps precision when σ(η) is near 1
            numerator: FloatArray = np.where(y_b == 1.0, special.expit(-eta_b), y_b - special.expit(eta_b))
            variance: FloatArray = special.expit(eta_b) * special.expit(-eta_b)
            return numerator / np.maximum(variance, self.eps_floor)

        _, b1, b2, _, _ = self.derivatives(eta_)
        return (y_ - b1) / np.maximum(b2, self.eps_floor)

    def zeta(self, y: ArrayLike, eta: ArrayLike) -> FloatArray:
        """``(y − b'(η)) b'''(η) / b''(η)²``; ``−(1 + ζ)`` is the η-derivative of the weighted residual."""
        return self.weighted_residual(y, eta) * self.third_over_second(eta)

    def quasi_loglik(self, y: ArrayLike, eta: ArrayLike) -> FloatArray:
        """Closed-form ``∫₀^η (y − b'(s)) / b''(s) ds``; zero at ``η = 0``."""
        y_: FloatArray = _as_finite(y, "y")
        eta_: FloatArray = _as_finite(eta, "eta")

        if self.kind is FamilyKind.gaussian:
            return y_ * eta_ - 0.5 * eta_ * eta_

        if self.kind is FamilyKind.bernoulli:
            if not np.all((y_ == 0.0) | (y_ == 1.0)):
                raise FamilyDomainError("The Bernoulli quasi-likelihood is defined for y in {0, 1} only.")

            y_b, eta_b = np.broadcast_arrays(y_, eta_)
            with np.errstate(over="ignore"):
                one: FloatArray = eta_b - np.exp(-eta_b) + 1.0
                zero: FloatArray = -eta_b - np.exp(eta_b) + 1.0
            return np.where(y_b == 1.0, one, zero)

        return y_ - y_ * np.exp(-eta_) - eta_

    def loglik(self, y: ArrayLike, eta: ArrayLike) -> FloatArray:
        """Ordinary log-likelihood term ``y η − b(η)`` without the base-measure constant."""
        y_: FloatArray = _as_finite(y, "y")
        b: FloatArray = self.derivatives(eta)[0]
        return y_ * np.asarray(eta, dtype=np.float64) - b


def b_derivs(family: GlmFamily, t: ArrayLike) -> tuple[FloatArray, FloatArray, FloatArray, FloatArray, FloatArray]:
    return family.derivatives(t)


def weighted_residual(family: GlmFamily, y: ArrayLike, eta: ArrayLike) -> FloatArray:
    return family.weighted_residual(y, eta)


def quasi_loglik_term(family: GlmFamily, y: ArrayLike, eta: ArrayLike) -> FloatArray:
    return family.quasi_loglik(y, eta)


def zeta(family: GlmFamily, y: ArrayLike, eta: ArrayLike) -> FloatArray:
    return family.zeta(y, eta)


def loglik_term(family: GlmFamily, y: ArrayLike, eta: ArrayLike) -> FloatArray:
    return family.loglik(y, eta)
