"""Error-propagation bounds, Lipschitz estimation, and empirical envelope checks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numerics import SolverKind, integrate

__all__ = [
    "LipschitzEstimate",
    "ConvergenceParams",
    "BoundCheckReport",
    "continuous_bound",
    "discrete_bound",
    "gamma_N",
    "eps_f",
    "uub_radius",
    "estimate_lipschitz",
    "empirical_bound_check",
]

# below this the closed forms are evaluated at their L -> 0 (or L -> 1) limit
_L_TINY = 1e-12


def continuous_bound(eps: float, L: float, t: float) -> float:
    """Worst-case flow divergence at time t for vector fields eps apart.

    Returns (eps/L)(e^{Lt} - 1), the Gronwall envelope for an L-Lipschitz
    field; for L under 1e-12 the limit eps*t is used.
    """
    if eps < 0.0 or L < 0.0 or t < 0.0:
        raise ValueError(f"eps, L, t must all be non-negative, got {eps}, {L}, {t}")
    if L < _L_TINY:
        return eps * t
    return (eps / L) * math.expm1(L * t)


def discrete_bound(eps: float, L: float, H: int) -> float:
    """Worst-case deviation after H applications of a one-step map.

    Per-step error eps compounds through an L-Lipschitz map into the
    geometric sum eps*(L^H - 1)/(L - 1); at L = 1 this is eps*H.
    """
    if eps < 0.0 or L < 0.0 or H < 0:
        raise ValueError(f"eps, L, H must all be non-negative, got {eps}, {L}, {H}")
    if H == 0:
        return 0.0
    if abs(L - 1.0) < _L_TINY:
        return eps * float(H)
    return eps * (L**H - 1.0) / (L - 1.0)


def gamma_N(L_ell: float, L_lf: float, L_x: float, N: int) -> float:
    """Amplification of one-step model error into an N-step planned cost gap.

    Stage costs (slope L_ell) each absorb the deviation accumulated so far
    and the terminal cost (slope L_lf) the full tail. Evaluated as explicit
    geometric sums so L_x = 1 needs no special casing.
    """
    if L_ell < 0.0 or L_lf < 0.0 or L_x < 0.0:
        raise ValueError("Lipschitz constants must be non-negative")
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    powers = L_x ** np.arange(N, dtype=np.float64)
    partial = np.cumsum(powers)  # partial[i] = sum_{j<=i} L_x^j
    inner = float(partial[:-1].sum())  # sum over stages of sum_{j<i} L_x^j
    return L_ell * inner + L_lf * float(partial[-1])


def eps_f(L_z: float, eps_z: float, eps_s: float) -> float:
    """Overall one-step model error from context and state-net contributions.

    A context estimate off by eps_z moves the field by at most L_z*eps_z;
    eps_s is the residual error with the true context.
    """
    if L_z < 0.0 or eps_z < 0.0 or eps_s < 0.0:
        raise ValueError("all error contributions must be non-negative")
    return L_z * eps_z + eps_s


@dataclass(frozen=True)
class ConvergenceParams:
    """Constants feeding the closed-loop ultimate-boundedness radius.

    L_ell / L_lf bound the stage and terminal cost slopes, L_x the model's
    one-step state sensitivity, L_z the field's context sensitivity; eps_z
    and eps_s are the context and state-net one-step errors; alpha1 is the
    quadratic lower-bound coefficient of the value-style Lyapunov candidate.
    """

    L_ell: float
    L_lf: float
    L_x: float
    L_z: float
    eps_z: float
    eps_s: float
    N: int
    alpha1: float

    def __post_init__(self):
        for name in ("L_ell", "L_lf", "L_x", "L_z", "eps_z", "eps_s"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be non-negative, got {getattr(self, name)}")
        if self.N < 1:
            raise ValueError(f"N must be >= 1, got {self.N}")
        if self.alpha1 <= 0.0:
            raise ValueError(f"alpha1 must be positive, got {self.alpha1}")


def uub_radius(params: ConvergenceParams) -> float:
    """Radius of the ball the closed loop ultimately settles into.

    sqrt(2 * Gamma_N * eps_f / alpha1): model error inflates the planned
    cost by at most 2*Gamma_N*eps_f per step, and the quadratic lower bound
    turns that plateau into a state-space radius.
    """
    g = gamma_N(params.L_ell, params.L_lf, params.L_x, params.N)
    e = eps_f(params.L_z, params.eps_z, params.eps_s)
    return math.sqrt(2.0 * g * e / params.alpha1)


@dataclass(frozen=True)
class LipschitzEstimate:
    """Sampled slope estimate: a lower bound on the true constant, never more."""

    L: float
    n_pairs: int
    domain: str = ""

    def __post_init__(self):
        if self.L < 0.0 or self.n_pairs < 0:
            raise ValueError("L and n_pairs must be non-negative")


def estimate_lipschitz(fn, sample, n_pairs: int, rng: np.random.Generator,
                       domain: str = "") -> LipschitzEstimate:
    """Largest ||fn(a) - fn(b)|| / ||a - b|| over sampled point pairs.

    `sample(rng)` draws one domain point. Coincident pairs are skipped;
    n_pairs on the result counts the pairs actually evaluated. The estimate
    only tightens from below as more pairs are drawn.
    """
    if n_pairs < 1:
        raise ValueError(f"n_pairs must be >= 1, got {n_pairs}")
    best = 0.0
    used = 0
    for _ in range(n_pairs):
        a = np.asarray(sample(rng), dtype=np.float64)
        b = np.asarray(sample(rng), dtype=np.float64)
        run = float(np.linalg.norm((a - b).ravel()))
        if run < 1e-12:
            continue
        fa = np.asarray(fn(a), dtype=np.float64)
        fb = np.asarray(fn(b), dtype=np.float64)
        best = max(best, float(np.linalg.norm((fa - fb).ravel())) / run)
        used += 1
    return LipschitzEstimate(L=best, n_pairs=used, domain=domain)


@dataclass
class BoundCheckReport:
    """Measured trajectory divergence against the closed-form envelope."""

    passed: bool
    eps: float
    L: float
    times: np.ndarray
    delta: np.ndarray
    bound: np.ndarray
    violating_t: float | None = None

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "eps": self.eps,
            "L": self.L,
            "violating_t": self.violating_t,
            "times": self.times.tolist(),
            "delta": self.delta.tolist(),
            "bound": self.bound.tolist(),
        }


def empirical_bound_check(true_field, perturbed_field, x0, controls, t_max: float,
                          L: float, eps: float | None = None) -> BoundCheckReport:
    """Integrate both fields under the same controls and test the envelope.

    delta(t) = ||x_true(t) - x_pert(t)|| must stay under
    continuous_bound(eps, L, t) at every logged step. Fields take (x, u, t).
    L must come from the caller (a sampled estimate can undershoot, which
    would shrink the envelope below its valid size); when eps is omitted it
    is measured as the largest field gap over the points both trajectories
    visit, a sound sup only where they actually go.
    """
    controls = np.asarray(controls, dtype=np.float64)
    if controls.ndim == 1:
        controls = controls[:, None]
    n_steps = controls.shape[0]
    if n_steps < 1 or t_max <= 0.0:
        raise ValueError("need at least one control interval and t_max > 0")
    if L < 0.0 or (eps is not None and eps < 0.0):
        raise ValueError("eps and L must be non-negative")
    dt = t_max / n_steps
    solver = SolverKind.rk4(dt)
    x0 = np.asarray(x0, dtype=np.float64)

    def lift(f):
        return lambda x, u, z, t: np.asarray(f(x, u, t), dtype=np.float64)

    xs_true = np.stack(integrate(lift(true_field), x0, controls, dt, n_steps, solver))
    xs_pert = np.stack(integrate(lift(perturbed_field), x0, controls, dt, n_steps, solver))
    times = dt * np.arange(n_steps + 1)

    if eps is None:
        gap = 0.0
        for xs in (xs_true, xs_pert):
            for k in range(n_steps):
                d = (np.asarray(true_field(xs[k], controls[k], times[k]))
                     - np.asarray(perturbed_field(xs[k], controls[k], times[k])))
                gap = max(gap, float(np.linalg.norm(d)))
        eps = gap

    delta = np.linalg.norm(xs_true - xs_pert, axis=1)
    bound = np.array([continuous_bound(eps, L, float(t)) for t in times])
    # hairline slack: a constant perturbation of an L=0 field meets the bound
    # with equality, and the integrator adds rounding on top of that
    ok = delta <= bound * (1.0 + 1e-9) + 1e-12
    passed = bool(ok.all())
    violating_t = None if passed else float(times[int(np.argmin(ok))])
    return BoundCheckReport(passed, float(eps), float(L), times, delta, bound,
                            violating_t)
