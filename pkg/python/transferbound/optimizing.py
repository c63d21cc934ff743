"""
Bayesian optimization of the error objective ``f(omega) = |G_s^-1(j omega) G_t(j omega) - 1|``.

One campaign handles N sources against one target at once: every iteration probes
the target and each source at the same frequency, feeds one GP per source, then
picks the next frequency by maximizing the largest expected improvement among the
sources. On convergence each source gets an inflated estimate
``mean + 3 sigma`` of the infinity norm of its error transfer function.
"""
import dataclasses
import logging
import math
from typing import Dict
from typing import List
from typing import Mapping
from typing import Optional

import numpy as np
import scipy.stats

from transferbound import gaussianprocess
from transferbound import lti
from transferbound import probing
from transferbound.mathing import argmax_on_window
from transferbound.mathing import remap_range

LOGGER = logging.getLogger(__name__)

SIGMA_FLOOR = 1e-12
SIGMA_INFLATION = 3.0


class CampaignNotConvergedError(RuntimeError):
    """
    Raised when a campaign exhausts its iteration budget.

    Args:
        campaign: the campaign in its state at the time of the failure
    """

    def __init__(self, message: str, campaign: "BoCampaign"):
        super().__init__(message)
        self.campaign = campaign


@dataclasses.dataclass(frozen=True)
class ConvergencePolicy:
    """
    When to stop sampling.

    The campaign is converged when, for every source simultaneously, the maximum of
    the posterior mean moved by less than ``relative_tolerance`` (plus
    ``absolute_tolerance``) for ``patience`` consecutive iterations.
    """

    relative_tolerance: float = 0.01
    absolute_tolerance: float = 1e-6
    patience: int = 3
    min_iterations: int = 4
    max_iterations: int = 40

    def __post_init__(self):
        if self.relative_tolerance <= 0 or self.absolute_tolerance < 0:
            raise ValueError("tolerances must be positive")
        if self.patience < 1:
            raise ValueError(f"patience must be >= 1, got {self.patience}")
        if not 1 <= self.min_iterations <= self.max_iterations:
            raise ValueError(
                f"expected 1 <= min_iterations <= max_iterations, got"
                f" {self.min_iterations} and {self.max_iterations}"
            )

    def is_stable(self, previous: float, current: float) -> bool:
        scale = max(abs(previous), abs(current))
        return abs(current - previous) <= self.relative_tolerance * scale + self.absolute_tolerance


@dataclasses.dataclass(frozen=True)
class GpSettings:
    """
    How every source GP is built and refit.

    Before ``min_fit_points`` samples are collected the default hyperparameters are
    used (a length scale of one decade). ``noise_variance`` is a floor: noisy probes
    raise the GP noise to the largest variance of the measured objective values.
    """

    noise_variance: float = 1e-6
    signal_variance: float = 1.0
    length_scale: float = 1.0
    signal_variance_bounds: tuple = gaussianprocess.DEFAULT_SIGNAL_VARIANCE_BOUNDS
    length_scale_bounds: tuple = gaussianprocess.DEFAULT_LENGTH_SCALE_BOUNDS
    grid_starts: int = 6
    min_fit_points: int = 3

    def __post_init__(self):
        if self.noise_variance <= 0:
            raise ValueError(
                f"campaign GPs need a strictly positive noise variance, got {self.noise_variance}"
            )

    def build(
        self,
        omegas: List[float],
        values: List[float],
        measured_variance: float = 0.0,
    ) -> gaussianprocess.GpModel:
        model = gaussianprocess.GpModel.from_dataset(
            omegas,
            values,
            signal_variance=self.signal_variance,
            length_scale=self.length_scale,
            noise_variance=max(self.noise_variance, measured_variance),
        )
        if model.size < self.min_fit_points:
            return model
        return gaussianprocess.fit_hyperparameters(
            model,
            signal_variance_bounds=tuple(self.signal_variance_bounds),
            length_scale_bounds=tuple(self.length_scale_bounds),
            grid_starts=self.grid_starts,
        )


@dataclasses.dataclass(frozen=True)
class AcquisitionChoice:
    """
    Args:
        omega: selected frequency in rad/s
        alpha: value of the acquisition function there
        exhausted: True if the acquisition is zero everywhere on the window
    """

    omega: float
    alpha: float
    exhausted: bool


@dataclasses.dataclass(frozen=True)
class BoundEstimate:
    """
    Estimated infinity norm of one source error transfer function.

    ``e_star`` is always ``posterior_mean_at_star + 3 * posterior_sigma_at_star``.
    """

    source_name: str
    omega_star: float
    posterior_mean_at_star: float
    posterior_sigma_at_star: float
    iterations_used: int

    @property
    def e_star(self) -> float:
        return self.posterior_mean_at_star + SIGMA_INFLATION * self.posterior_sigma_at_star

    def to_dict(self) -> dict:
        return {
            "source": self.source_name,
            "omega_star": self.omega_star,
            "e_star": self.e_star,
            "posterior_mean": self.posterior_mean_at_star,
            "posterior_sigma": self.posterior_sigma_at_star,
            "iterations": self.iterations_used,
        }


def expected_improvement_from_moments(
    mean: np.ndarray,
    sigma: np.ndarray,
    f_max: float,
) -> np.ndarray:
    """
    ``(mean - f_max) Phi(Z) + sigma phi(Z)`` with ``Z = (mean - f_max) / sigma``.

    Points where sigma is under 1e-12 get an expected improvement of 0.
    """
    mean = np.asarray(mean, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    improvement = mean - f_max
    safe_sigma = np.where(sigma < SIGMA_FLOOR, 1.0, sigma)
    z = improvement / safe_sigma
    ei = improvement * scipy.stats.norm.cdf(z) + safe_sigma * scipy.stats.norm.pdf(z)
    return np.where(sigma < SIGMA_FLOOR, 0.0, np.maximum(ei, 0.0))


def expected_improvement(m: gaussianprocess.GpModel, omega: float, f_max: float) -> float:
    """
    Expected improvement of the GP over ``f_max`` at ``omega``.
    """
    if not m.size:
        raise ValueError("expected improvement needs at least one data point")
    mean, variance = gaussianprocess.posterior(m, omega)
    return float(expected_improvement_from_moments(mean, math.sqrt(variance), f_max))


def _max_expected_improvement(models: List[gaussianprocess.GpModel], omegas: np.ndarray):
    alpha = np.zeros(len(omegas))
    for model in models:
        means, variances = gaussianprocess.predict(model, omegas)
        ei = expected_improvement_from_moments(means, np.sqrt(variances), max(model.values))
        alpha = np.maximum(alpha, ei)
    return alpha


class BoCampaign:
    """
    State of one run of the estimation loop for N sources and one target.

    Use :func:`run_campaign` for the full loop; this class exposes the
    individual steps.

    Args:
        sources: named source baseline systems, probed in the mapping order
        target: target baseline system
        window: probe settings, including the frequency window of interest
        policy: convergence policy
        seed: seed of the single random generator of the campaign
        gp_settings: how the source GPs are built
        acquisition_grid_size: number of log-spaced points used to maximize functions of omega
    """

    def __init__(
        self,
        sources: Mapping[str, lti.RationalTransferFunction],
        target: lti.RationalTransferFunction,
        window: probing.ProbeConfig,
        policy: Optional[ConvergencePolicy] = None,
        seed: int = 0,
        gp_settings: Optional[GpSettings] = None,
        acquisition_grid_size: int = 512,
    ):
        if not sources:
            raise ValueError("a campaign needs at least one source")
        for name, source in sources.items():
            if lti.relative_degree(target) < lti.relative_degree(source):
                raise lti.ImproperSystemError(
                    f"source '{name}' has a relative degree {lti.relative_degree(source)} higher"
                    f" than the target one {lti.relative_degree(target)}"
                )
        for name, system in list(sources.items()) + [("target", target)]:
            if not system.is_proper or not lti.is_bibo_stable(system):
                raise ValueError(f"'{name}' must be stable and proper, got {system}")

        self.sources: Dict[str, lti.RationalTransferFunction] = dict(sources)
        self.target: lti.RationalTransferFunction = target
        self.window: probing.ProbeConfig = window
        self.policy: ConvergencePolicy = policy or ConvergencePolicy()
        self.gp_settings: GpSettings = gp_settings or GpSettings()
        self.acquisition_grid_size: int = acquisition_grid_size
        self.rng_seed: int = seed

        self._rng = np.random.default_rng(seed)
        self.gp_models: Dict[str, gaussianprocess.GpModel] = {}
        self.sample_history: List[probing.ProbeResult] = []
        self.convergence: List[Dict[str, float]] = []
        self.exhausted: bool = False

        initial = remap_range(self._rng.random(), 0.0, 1.0, window.omega_min, window.omega_max)
        self._next_omega: float = float(initial)

    @property
    def iterations(self) -> int:
        return len(self.sample_history)

    @property
    def probe_time(self) -> float:
        """
        Total simulated experiment time spent so far, in seconds.
        """
        return sum(result.probe_time for result in self.sample_history)

    @property
    def sample_omegas(self) -> List[float]:
        return [result.omega for result in self.sample_history]

    def _dataset(self, name: str):
        values = [result.objective_values[name] for result in self.sample_history]
        return self.sample_omegas, values

    def measured_variance(self, name: str) -> float:
        """
        Largest variance of the objective values of a source due to probe noise.
        """
        return max(
            (result.objective_variances.get(name, 0.0) for result in self.sample_history),
            default=0.0,
        )

    def max_posterior_mean(self, name: str):
        """
        Returns:
            tuple of (argmax omega, maximum) of the posterior mean of the given source
        """
        model = self.gp_models[name]
        return argmax_on_window(
            lambda omegas: gaussianprocess.predict(model, omegas)[0],
            self.window.omega_min,
            self.window.omega_max,
            self.acquisition_grid_size,
        )

    def next_sample(self) -> AcquisitionChoice:
        """
        Maximize ``alpha(omega) = max_n EI_n(omega)`` over the window.
        """
        models = [self.gp_models[name] for name in self.sources]
        if not all(model.size for model in models):
            raise ValueError("every GP needs at least one data point")

        def _alpha(omegas: np.ndarray) -> np.ndarray:
            return _max_expected_improvement(models, omegas)

        omega, alpha = argmax_on_window(
            _alpha,
            self.window.omega_min,
            self.window.omega_max,
            self.acquisition_grid_size,
        )
        exhausted = alpha <= 0.0
        if exhausted:
            omega = self.window.omega_min
        return AcquisitionChoice(omega=omega, alpha=alpha, exhausted=exhausted)

    def step(self) -> probing.ProbeResult:
        """
        Run one iteration: probe, extend the datasets, refit the GPs and pick the next frequency.
        """
        omega = self._next_omega
        result = probing.probe_pair(self.target, self.sources, omega, self.window, rng=self._rng)
        self.sample_history.append(result)

        for name in self.sources:
            omegas, values = self._dataset(name)
            self.gp_models[name] = self.gp_settings.build(
                omegas, values, measured_variance=self.measured_variance(name)
            )

        self.convergence.append({name: self.max_posterior_mean(name)[1] for name in self.sources})

        choice = self.next_sample()
        self._next_omega = choice.omega
        self.exhausted = choice.exhausted
        LOGGER.debug(
            f"iteration {self.iterations}: sampled omega={omega:.5g},"
            f" next omega={choice.omega:.5g} (alpha={choice.alpha:.3g})"
        )
        return result

    @property
    def is_converged(self) -> bool:
        if self.iterations < self.policy.min_iterations:
            return False
        if self.exhausted:
            return True
        if len(self.convergence) <= self.policy.patience:
            return False
        recent = self.convergence[-(self.policy.patience + 1) :]
        for name in self.sources:
            for previous, current in zip(recent, recent[1:]):
                if not self.policy.is_stable(previous[name], current[name]):
                    return False
        return True

    def estimates(self) -> List[BoundEstimate]:
        """
        Inflated infinity-norm estimate of every source, in source order.
        """
        estimates = []
        for name in self.sources:
            omega_star, _ = self.max_posterior_mean(name)
            mean, variance = gaussianprocess.posterior(self.gp_models[name], omega_star)
            estimates.append(
                BoundEstimate(
                    source_name=name,
                    omega_star=omega_star,
                    posterior_mean_at_star=mean,
                    posterior_sigma_at_star=math.sqrt(variance),
                    iterations_used=self.iterations,
                )
            )
        return estimates

    def transcript_rows(self) -> List[dict]:
        """
        One row per iteration: sampled omega, objective value and max posterior mean per source.
        """
        rows = []
        for iteration, (result, trace) in enumerate(zip(self.sample_history, self.convergence)):
            row = {"iteration": iteration + 1, "omega_sample": result.omega}
            for name in self.sources:
                row[f"f[{name}]"] = result.objective_values[name]
                row[f"max_mean[{name}]"] = trace[name]
            rows.append(row)
        return rows


def next_sample(c: BoCampaign) -> AcquisitionChoice:
    """
    Next frequency to probe for the given campaign, see :meth:`BoCampaign.next_sample`.
    """
    return c.next_sample()


def run_campaign(
    sources: Mapping[str, lti.RationalTransferFunction],
    target: lti.RationalTransferFunction,
    cfg: probing.ProbeConfig,
    stop: Optional[ConvergencePolicy] = None,
    seed: int = 0,
    gp_settings: Optional[GpSettings] = None,
    acquisition_grid_size: int = 512,
    campaign: Optional[BoCampaign] = None,
) -> List[BoundEstimate]:
    """
    Estimate the infinity norm of the error transfer function of every source.

    Args:
        sources: named source baseline systems
        target: target baseline system
        cfg: probe settings and frequency window
        stop: convergence policy
        seed: seed of the campaign random generator
        gp_settings: how the source GPs are built
        acquisition_grid_size: grid size used by every 1-D maximization
        campaign: optionally an already created campaign to run, the other
            arguments are then ignored. Useful to inspect the state afterwards.

    Returns:
        one estimate per source, in source order

    Raises:
        lti.ImproperSystemError: if a source has a higher relative degree than the target
        CampaignNotConvergedError: if the iteration budget is exhausted
    """
    campaign = campaign or BoCampaign(
        sources=sources,
        target=target,
        window=cfg,
        policy=stop,
        seed=seed,
        gp_settings=gp_settings,
        acquisition_grid_size=acquisition_grid_size,
    )
    while not campaign.is_converged:
        if campaign.iterations >= campaign.policy.max_iterations:
            raise CampaignNotConvergedError(
                f"campaign did not converge in {campaign.policy.max_iterations} iterations",
                campaign=campaign,
            )
        campaign.step()

    LOGGER.info(
        f"campaign converged in {campaign.iterations} iterations"
        f" ({campaign.probe_time:.1f}s of simulated probing)"
    )
    return campaign.estimates()
