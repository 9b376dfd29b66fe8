"""Preconditioned plug-and-play ADMM.

The preconditioned splitting estimates the image through rescaled
variables x = P^{-1} x_hat, with P a positive diagonal preconditioner.
The loop below carries the iterates in natural units (x_hat = P x)
instead, which is algebraically the same update but keeps the state
meaningful when P changes between iterations; P then enters in exactly
two places:

* x-update: exact minimiser of ||A x_hat - b||^2 plus the coupling
  rho*||P^{-1}(x_hat - v)||^2, so boosted pixels follow the denoiser
  more than the data;
* y-update: one call to a locally adjustable denoiser with noise map
  (sigma/sqrt(rho))*P, so boosted pixels get stronger denoising;

followed by the dual update l <- l + rho*(x_hat - y_hat) and geometric
penalty growth rho <- rho*alpha. Poisson problems re-estimate P from
the denoiser output after every iteration.

Two data terms are supported: quadratic ||A x_hat - b||^2 with a
diagonal sampling operator A (completion, interpolation, demosaicing)
and the Poisson negative log-likelihood for photon-count observations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import mse_between, psnr
from .validation import as_image, as_mask, check_positive, check_same_shape

__all__ = [
    "Schedule",
    "compute_schedule",
    "LinearProblem",
    "PoissonProblem",
    "SolverState",
    "SolverError",
    "TraceRow",
    "RestorationResult",
    "x_update_linear",
    "x_update_poisson",
    "y_update",
    "dual_update",
    "init_state",
    "run_admm",
]


@dataclass(frozen=True)
class Schedule:
    """Penalty schedule rho_k = rho0 * alpha^k for k = 0 .. n_iter-1.

    ``sigma`` is the data-term noise level of unit-range problems; the
    denoiser strength at iteration k is sigma / sqrt(rho_k). Poisson
    problems ignore ``sigma`` (their strength comes from P directly).
    """

    n_iter: int
    rho0: float
    alpha: float
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.n_iter < 0:
            raise ValueError(f"n_iter: must be non-negative, got {self.n_iter}")
        check_positive(self.rho0, name="rho0")
        check_positive(self.alpha, name="alpha")

    def rho_at(self, k: int) -> float:
        return self.rho0 * self.alpha**k

    def denoiser_sigma(self, k: int) -> float:
        return self.sigma / math.sqrt(self.rho_at(k))


def compute_schedule(
    sigma0_den: float, sigmaN_den: float, n_iter: int, sigma: float
) -> Schedule:
    """Schedule that sweeps the denoiser strength from sigma0 to sigmaN.

    Setting rho0 = (sigmaN/sigma0)^2 and alpha = (1/rho0)^(1/n_iter)
    makes sigma/sqrt(rho_k) decay geometrically from sigma*sigma0/sigmaN
    to sigma; with sigma = sigmaN the sweep runs from sigma0 to sigmaN.
    """
    check_positive(sigma0_den, name="sigma0_den")
    check_positive(sigmaN_den, name="sigmaN_den")
    check_positive(sigma, name="sigma")
    if sigmaN_den > sigma0_den:
        raise ValueError(
            f"sigmaN_den: must not exceed sigma0_den, got {sigmaN_den} > {sigma0_den}"
        )
    if n_iter < 1:
        raise ValueError(f"n_iter: must be >= 1, got {n_iter}")
    rho0 = (sigmaN_den / sigma0_den) ** 2
    alpha = (1.0 / rho0) ** (1.0 / n_iter)
    return Schedule(n_iter=n_iter, rho0=rho0, alpha=alpha, sigma=sigma)


@dataclass(frozen=True)
class LinearProblem:
    """Quadratic data term ||A x_hat - b||^2 with diagonal sampling A.

    ``observation`` is b embedded in image shape (zero at unsampled
    positions); ``mask`` is the diagonal of A^T A with entries in
    {0, 1}.
    """

    observation: np.ndarray
    mask: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "observation", as_image(self.observation, name="observation"))
        object.__setattr__(self, "mask", as_mask(self.mask))
        check_same_shape(self.observation, self.mask, names="observation/mask")


@dataclass(frozen=True)
class PoissonProblem:
    """Poisson counts z ~ P(peak * x_hat) observed directly."""

    counts: np.ndarray
    peak: float

    def __post_init__(self) -> None:
        counts = as_image(self.counts, name="counts")
        if (counts < 0).any():
            raise ValueError("counts: must be non-negative")
        object.__setattr__(self, "counts", counts)
        check_positive(self.peak, name="peak")


@dataclass
class SolverState:
    """Natural-units iterates; ``p`` is the current preconditioner."""

    x: np.ndarray
    y: np.ndarray
    l: np.ndarray
    p: np.ndarray


@dataclass(frozen=True)
class TraceRow:
    k: int
    rho: float
    xy_mse: float
    psnr: float | None = None


@dataclass(frozen=True)
class RestorationResult:
    image: np.ndarray
    trace: tuple[TraceRow, ...] = field(default_factory=tuple)
    n_iter: int = 0


class SolverError(RuntimeError):
    """Raised when an iteration of the solver fails."""


def x_update_linear(observation, mask, p, rho, y, l) -> np.ndarray:
    """Closed-form x-update for the quadratic data term.

    Per entry: (P^2*b + rho*y - l) / (P^2*m + rho), the minimiser of
    ||A x - b||^2 + rho*||P^{-1}(x - (y - l/rho))||^2 for diagonal A
    and P, everything in natural units.
    """
    p2 = p * p
    return (p2 * observation + rho * y - l) / (p2 * mask + rho)


def x_update_poisson(counts, p, rho, u) -> np.ndarray:
    """Exact minimiser of the Poisson x-update, entry-wise.

    Solves min_{x >= 0} -b*ln(P*x) + P*x + (rho/2)*(x - u)^2 for b > 0;
    for b = 0 the log term is dropped and the minimiser projected onto
    x >= 0, extending the domain to 0 continuously. This is the update
    of the rescaled variable; ``run_admm`` maps it back to counts.
    """
    counts = np.asarray(counts, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    a = rho * u - p
    disc = np.sqrt(a * a + 4.0 * rho * counts)
    # rationalised root avoids cancellation when rho*u < P and b is small
    with np.errstate(divide="ignore", invalid="ignore"):
        small = 2.0 * counts / (disc - a)
    return np.where(a >= 0, (a + disc) / (2.0 * rho), small)


def y_update(
    x,
    l,
    rho,
    p,
    denoiser,
    *,
    sigma: float | None = None,
    peak: float | None = None,
    passthrough_mask=None,
) -> np.ndarray:
    """Denoiser step on the natural-units variable.

    Unit-range problems call the denoiser on x + l/rho with map
    (sigma/sqrt(rho))*P. Poisson problems apply the peak-rescale rule
    G_peak(v, S) = peak*G(v/peak, S/peak) with map P/sqrt(rho), so the
    denoiser always sees a [0, 1]-range image. When a passthrough mask
    is given, the denoiser output is replaced by its input at sampled
    positions.
    """
    u = x + l / rho
    if peak is None:
        if sigma is None:
            raise ValueError("sigma: required for unit-range problems")
        denoised = denoiser(u, (sigma / math.sqrt(rho)) * p)
    else:
        denoised = peak * denoiser(u / peak, p / (peak * math.sqrt(rho)))
    if passthrough_mask is not None:
        sampled = passthrough_mask == 1.0
        denoised = denoised.copy()
        denoised[sampled] = u[sampled]
    return denoised


def dual_update(l, rho, x, y) -> np.ndarray:
    return l + rho * (x - y)


def init_state(x_hat0, p) -> SolverState:
    """Initial state x = y = x_hat0, l = 0, in natural units."""
    x_hat0 = as_image(x_hat0, name="x_hat0")
    check_same_shape(x_hat0, p, names="x_hat0/preconditioner")
    return SolverState(x=x_hat0.copy(), y=x_hat0.copy(), l=np.zeros_like(x_hat0), p=p)


def run_admm(
    problem,
    denoiser,
    schedule: Schedule,
    *,
    x_hat0,
    precond,
    passthrough: bool = False,
    reference=None,
    early_stop: float | None = None,
) -> RestorationResult:
    """Run the preconditioned PnP-ADMM loop and return the restored image.

    ``x_hat0`` is the initial estimate in natural units (counts for
    Poisson problems). The result image is y after the last iteration,
    divided by the peak for Poisson problems, with sampled positions
    restored to their observed values when ``passthrough`` is on, and
    clipped to [0, 1]. The trace records, per iteration, the penalty
    rho and the residual mse between x and y (in [0, 1] units), plus
    the PSNR against ``reference`` when one is given.
    """
    poisson = isinstance(problem, PoissonProblem)
    if poisson:
        data = problem.counts
        scale = problem.peak
        if passthrough:
            raise ValueError("passthrough: not applicable to Poisson problems")
    elif isinstance(problem, LinearProblem):
        data = problem.observation
        scale = 1.0
    else:
        raise TypeError(f"problem: unsupported type {type(problem).__name__}")

    x_hat0 = as_image(x_hat0, name="x_hat0")
    check_same_shape(x_hat0, data, names="x_hat0/observation")
    if reference is not None:
        reference = as_image(reference, name="reference")
        check_same_shape(reference, data, names="reference/observation")

    p = precond.initial(data.shape)
    state = init_state(x_hat0, p)
    x, y, l = state.x, state.y, state.l
    pass_mask = problem.mask if (passthrough and not poisson) else None

    trace: list[TraceRow] = []
    n_done = 0
    for k in range(schedule.n_iter):
        try:
            rho = schedule.rho_at(k)
            p = precond.for_iteration(k + 1, p)
            if poisson:
                x = p * x_update_poisson(data, p, rho, (y - l / rho) / p)
                y = y_update(x, l, rho, p, denoiser, peak=scale)
            else:
                x = x_update_linear(data, problem.mask, p, rho, y, l)
                y = y_update(
                    x,
                    l,
                    rho,
                    p,
                    denoiser,
                    sigma=schedule.sigma,
                    passthrough_mask=pass_mask,
                )
            l = dual_update(l, rho, x, y)
            xy_mse = mse_between(x / scale, y / scale)
            row_psnr = None
            if reference is not None:
                row_psnr = psnr(reference, np.clip(y / scale, 0.0, 1.0))
            trace.append(TraceRow(k=k, rho=rho, xy_mse=xy_mse, psnr=row_psnr))
            p = precond.after_iteration(y, p)
        except Exception as exc:
            if isinstance(exc, SolverError):
                raise
            raise SolverError(f"iteration {k}: {exc}") from exc
        n_done = k + 1
        if early_stop is not None and xy_mse <= early_stop:
            break

    out = y / scale
    if pass_mask is not None:
        sampled = pass_mask == 1.0
        out = out.copy()
        out[sampled] = (data / scale)[sampled]
    image = np.clip(out, 0.0, 1.0)
    return RestorationResult(image=image, trace=tuple(trace), n_iter=n_done)
