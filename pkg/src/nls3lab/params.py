"""Model parameters and exact handling of the resonance value 2*beta/3."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
import math

from .errors import ContractError, NonResonanceError

Beta = float | Fraction

# float betas are compared against integers with this tolerance
BETA_TOL = 1e-9


def parse_beta(value) -> Beta:
    """Accept a float, int, Fraction or a "p/q" string; strings with a slash stay exact."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise TypeError("beta cannot be a boolean")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        text = value.strip()
        if "/" in text:
            return Fraction(text)
        return float(text)
    return float(value)


def shell_value(beta: Beta) -> Fraction | float:
    """The resonance value 2*beta/3, exact when beta is a Fraction."""
    if isinstance(beta, Fraction):
        return beta * 2 / 3
    return 2.0 * float(beta) / 3.0


def resonant_integer(beta: Beta) -> int | None:
    """Return 2*beta/3 when it is an integer (the resonant case), else None."""
    v = shell_value(beta)
    if isinstance(v, Fraction):
        return int(v) if v.denominator == 1 else None
    k = round(v)
    return int(k) if abs(v - k) <= BETA_TOL else None


def nonres_margin(beta: Beta) -> float:
    v = shell_value(beta)
    if isinstance(v, Fraction):
        return float(abs(v - round(v)))
    return abs(v - round(v))


def off_shell(total, beta: Beta):
    """Elementwise test n1 + n3 != 2*beta/3 for an integer array ``total``."""
    k = resonant_integer(beta)
    if k is None:
        # no integer sum can hit a non-integer shell
        return total == total
    return total != k


@dataclass(frozen=True)
class ModelParams:
    beta: Beta = 2.1
    s: float = 0.8
    sigma: float | None = None
    epsilon: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "beta", parse_beta(self.beta))
        if self.sigma is None:
            object.__setattr__(self, "sigma", self.s - 0.51)
        if not self.sigma < self.s - 0.5:
            raise ContractError(f"sigma={self.sigma} must satisfy sigma < s - 1/2 (s={self.s})")
        if not self.epsilon > 0:
            raise ContractError("epsilon must be positive")

    @property
    def nonres_margin(self) -> float:
        return nonres_margin(self.beta)

    @property
    def beta_float(self) -> float:
        return float(self.beta)

    @property
    def resonant(self) -> bool:
        return resonant_integer(self.beta) is not None

    def require_nonresonant(self) -> None:
        if self.resonant or not self.nonres_margin > 0:
            raise NonResonanceError(
                f"2*beta/3 = {shell_value(self.beta)} is an integer; the interaction-picture "
                "forms are defined only in the non-resonant case"
            )

    def with_(self, **changes) -> "ModelParams":
        data = dict(beta=self.beta, s=self.s, sigma=self.sigma, epsilon=self.epsilon)
        data.update(changes)
        if "s" in changes and "sigma" not in changes:
            data["sigma"] = None
        return ModelParams(**data)

    def describe(self) -> dict:
        return {
            "beta": str(self.beta) if isinstance(self.beta, Fraction) else self.beta,
            "s": self.s,
            "sigma": self.sigma,
            "epsilon": self.epsilon,
            "nonres_margin": self.nonres_margin,
        }


def is_finite_number(x) -> bool:
    return isinstance(x, (int, float, Fraction)) and math.isfinite(float(x))
