"""Physical parameters of the perturbed shear-flow problem."""
from __future__ import annotations

from dataclasses import dataclass, field

__all__ = ["PhysParams"]


@dataclass(frozen=True)
class PhysParams:
    """Viscosities and pressure law.

    mu is the shear viscosity, mu_prime the bulk viscosity with
    mu + mu_prime >= 0, and nu = 2*mu + mu_prime the derived combination
    entering the divergence equation.  The pressure law is
    P(rho) = rho^gamma / gamma, which normalizes P'(1) = 1.

    mu = 0 is accepted for inviscid reference runs; default configurations
    keep 0 < mu <= 1 with nu/mu in [1, 3].
    """

    mu: float
    mu_prime: float = 0.0
    gamma: float = 1.4
    nu: float = field(init=False)

    def __post_init__(self):
        if self.mu < 0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.mu + self.mu_prime < 0:
            raise ValueError("mu + mu_prime must be >= 0")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "nu", 2.0 * self.mu + self.mu_prime)
        if self.nu > 1.0 + 1e-12:
            raise ValueError(f"nu = 2*mu + mu_prime must be <= 1, got {self.nu}")

    def f_of_n(self, n):
        """f(N) = P'(1+N)/(1+N) - 1 = (1+N)^(gamma-2) - 1."""
        return (1.0 + n) ** (self.gamma - 2.0) - 1.0

    @staticmethod
    def g_of_n(n):
        """g(N) = N/(1+N)."""
        return n / (1.0 + n)
