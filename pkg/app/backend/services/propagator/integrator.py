"""Liouville-equation propagation of the reduced density matrix.

Two schemes share one driver: scipy's embedded Runge-Kutta pairs (default,
DOP853) and a fixed-step classical RK4 used as the brute-force oracle. Both
restart at every breakpoint so that no step straddles the drive kink.
"""

from __future__ import annotations

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from app.backend.services.errors import IntegrationError, ValidationError
from app.backend.services.qubit_model import QubitSpectrum, TrianglePulse, sweep_rate

from .models import ADAPTIVE, FIXED_RK4, EvolutionResult, StepperConfig
from .state import initial_state

logger = logging.getLogger(__name__)

HamiltonianFn = Callable[[float], np.ndarray]
Trajectory = List[Tuple[float, np.ndarray]]


def _segment_nodes(
    t_span: Tuple[float, float], breakpoints: Sequence[float]
) -> List[float]:
    t0, t1 = float(t_span[0]), float(t_span[1])
    if not t1 > t0:
        raise ValidationError(f"empty time span ({t0:g}, {t1:g})")
    inner = sorted({float(b) for b in breakpoints if t0 < b < t1})
    return [t0, *inner, t1]


def _integrate_adaptive(
    hamiltonian_fn: HamiltonianFn,
    nodes: List[float],
    config: StepperConfig,
    rho0: np.ndarray,
    sample_times: np.ndarray,
) -> EvolutionResult:
    dim = rho0.shape[0]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(dim, dim)
        h = hamiltonian_fn(t)
        return (-1j * (h @ rho - rho @ h)).ravel()

    y = rho0.astype(np.complex128).ravel()
    trajectory: Trajectory = []
    steps = 0
    evaluations = 0
    want_samples = sample_times.size > 0

    for index, (start, stop) in enumerate(zip(nodes[:-1], nodes[1:])):
        options = {}
        if config.initial_step is not None:
            options["first_step"] = min(config.initial_step, stop - start)
        sol = solve_ivp(
            rhs,
            (start, stop),
            y,
            method=config.adaptive_pair,
            rtol=config.rel_tol,
            atol=config.abs_tol,
            max_step=config.max_step,
            dense_output=want_samples,
            **options,
        )
        if not sol.success:
            t_reached = float(sol.t[-1]) if sol.t.size else start
            raise IntegrationError(
                f"adaptive integration failed at t={t_reached:.9g} ns: {sol.message}",
                t_reached=t_reached,
            )
        steps += sol.t.size - 1
        evaluations += int(sol.nfev)

        if want_samples:
            last = index == len(nodes) - 2
            mask = (sample_times >= start) & (
                (sample_times <= stop) if last else (sample_times < stop)
            )
            for t in sample_times[mask]:
                trajectory.append((float(t), sol.sol(t).reshape(dim, dim)))

        y = sol.y[:, -1]

    return EvolutionResult(
        final_state=y.reshape(dim, dim),
        trajectory=trajectory if want_samples else None,
        step_count=steps,
        rhs_eval_count=evaluations,
    )


def _integrate_rk4(
    hamiltonian_fn: HamiltonianFn,
    nodes: List[float],
    step: float,
    rho0: np.ndarray,
    sample_times: np.ndarray,
) -> EvolutionResult:
    def f(t: float, rho: np.ndarray) -> np.ndarray:
        h = hamiltonian_fn(t)
        return -1j * (h @ rho - rho @ h)

    rho = rho0.astype(np.complex128)
    trajectory: Trajectory = []
    pending = list(sample_times)
    steps = 0

    def record(t: float, dt: float) -> None:
        # samples snap to the nearest step boundary
        while pending and pending[0] <= t + 0.5 * dt:
            trajectory.append((t, rho.copy()))
            pending.pop(0)

    record(nodes[0], 0.0)
    for start, stop in zip(nodes[:-1], nodes[1:]):
        n = max(1, math.ceil((stop - start) / step - 1e-9))
        dt = (stop - start) / n
        for i in range(n):
            t = start + i * dt
            k1 = f(t, rho)
            k2 = f(t + 0.5 * dt, rho + 0.5 * dt * k1)
            k3 = f(t + 0.5 * dt, rho + 0.5 * dt * k2)
            k4 = f(t + dt, rho + dt * k3)
            rho = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            record(start + (i + 1) * dt, dt)
        steps += n

    return EvolutionResult(
        final_state=rho,
        trajectory=trajectory if sample_times.size else None,
        step_count=steps,
        rhs_eval_count=4 * steps,
    )


def evolve_hamiltonian(
    hamiltonian_fn: HamiltonianFn,
    t_span: Tuple[float, float],
    config: StepperConfig,
    rho0: np.ndarray,
    breakpoints: Sequence[float] = (),
) -> EvolutionResult:
    """Integrate drho/dt = -i[H(t), rho] over ``t_span``.

    Args:
        hamiltonian_fn: t (ns) -> Hermitian matrix (rad/ns)
        t_span: (t0, t1)
        config: stepper settings
        rho0: initial density matrix
        breakpoints: times where the integrator must restart (kinks of H(t))
    """
    nodes = _segment_nodes(t_span, breakpoints)
    if config.trajectory_samples:
        sample_times = np.linspace(nodes[0], nodes[-1], config.trajectory_samples)
    else:
        sample_times = np.empty(0)

    if config.method == FIXED_RK4:
        return _integrate_rk4(
            hamiltonian_fn, nodes, config.fixed_step, rho0, sample_times
        )
    if config.method == ADAPTIVE:
        return _integrate_adaptive(hamiltonian_fn, nodes, config, rho0, sample_times)
    raise ValidationError(f"unknown stepper method {config.method!r}")


def pulse_hamiltonian(spectrum: QubitSpectrum, pulse: TrianglePulse) -> HamiltonianFn:
    """H(t) along the triangle drive, with the detuning inlined for speed."""
    a, b, coupling = spectrum.linear_form()
    k = sweep_rate(pulse)
    tau = pulse.tau
    half = 0.5 * tau
    phi_i = pulse.phi_i

    def hamiltonian_fn(t: float) -> np.ndarray:
        offset = k * t if t <= half else k * (tau - t)
        return coupling + np.diag(a * (phi_i + offset) + b)

    return hamiltonian_fn


def evolve(
    spectrum: QubitSpectrum,
    pulse: TrianglePulse,
    config: Optional[StepperConfig] = None,
    rho0: Optional[np.ndarray] = None,
) -> EvolutionResult:
    """Propagate one triangle pulse from t = 0 to t = tau."""
    config = config or StepperConfig()
    if rho0 is None:
        rho0 = initial_state(spectrum.dim)
    if rho0.shape != (spectrum.dim, spectrum.dim):
        raise ValidationError(
            f"rho0 shape {rho0.shape} does not match spectrum dimension {spectrum.dim}"
        )

    result = evolve_hamiltonian(
        pulse_hamiltonian(spectrum, pulse),
        (0.0, pulse.tau),
        config,
        rho0,
        breakpoints=(0.5 * pulse.tau,),
    )
    logger.debug(
        f"evolve phi_f={pulse.phi_f:.6g} tau={pulse.tau:.6g}: "
        f"{result.step_count} steps, {result.rhs_eval_count} rhs evaluations"
    )
    return result


def evolve_fixed_rk4(
    spectrum: QubitSpectrum,
    pulse: TrianglePulse,
    step: float,
    rho0: Optional[np.ndarray] = None,
) -> EvolutionResult:
    config = StepperConfig(method=FIXED_RK4, fixed_step=step)
    return evolve(spectrum, pulse, config, rho0)


def single_passage_probability(
    gap: float,
    slope: float,
    rate: float,
    span: float,
    config: Optional[StepperConfig] = None,
) -> float:
    """Numeric diabatic survival probability for one linear passage.

    The detuning runs from -span to +span mPhi0 at ``rate`` mPhi0/ns through a
    single anticrossing at 0; the return value is W_11 at the end.
    """
    if not (rate > 0 and span > 0):
        raise ValidationError("rate and span must be > 0")
    spectrum = QubitSpectrum.two_level(slope, gap)
    a, b, coupling = spectrum.linear_form()

    def hamiltonian_fn(t: float) -> np.ndarray:
        return coupling + np.diag(a * (-span + rate * t) + b)

    result = evolve_hamiltonian(
        hamiltonian_fn,
        (0.0, 2.0 * span / rate),
        config or StepperConfig(),
        initial_state(2),
    )
    return result.initial_population
