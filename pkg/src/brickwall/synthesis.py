"""Variational compilation of target matrices onto circuit templates: the
trace-overlap cost, its analytic gradient, a restarted limited-memory
quasi-Newton optimizer, the adaptive brick-growing compiler, and
non-Clifford rotation accounting."""

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .circuit_ir import analytic_jacobian, evaluate, jacobian_real_matrix
from .matrix_core import group_membership
from .templates import build_template, lower_bound_two_qubit, truncated_template

HALF_PI = np.pi / 2

# attempts ending below this cost are handed to the Gauss-Newton polish
POLISH_THRESHOLD = 1e-2


@dataclass
class CompileConfig:
    """Optimizer and restart settings for :func:`compile`.

    ``max_epochs`` and ``memory`` default to 500 * n and 5 * d when left as
    ``None``. An attempt stops early once the cost drops below
    ``target_precision``; the attempt counts as converged if its final cost
    is below ``epsilon``. ``polish`` enables the least-squares refinement of
    near-converged attempts.
    """

    epsilon: float = 1e-10
    target_precision: float = 1e-12
    max_epochs: int | None = None
    max_attempts: int = 25
    init_sigma: float = 0.2
    memory: int | None = None
    seed: int = 0
    snap_tol: float = 1e-6
    polish: bool = True

    def __post_init__(self):
        if self.epsilon <= 0 or self.init_sigma <= 0:
            raise ValueError("epsilon and init_sigma must be positive")


@dataclass
class CompileReport:
    """Per-target record of a compilation run."""

    converged: bool
    final_cost: float
    theta: np.ndarray
    attempts_used: int
    epochs_per_attempt: list
    wall_time: float
    non_clifford_count: int
    snapped_cost: float
    cost_traces: list = field(repr=False, default_factory=list)
    bricks_used: int | None = None


def cost(circuit, theta, target):
    """Trace-overlap compilation cost, 1 - |tr(U^dag V(theta))| / 2^n.

    Invariant under a global phase of either argument; zero exactly when
    the circuit matches the target up to phase.
    """
    v = evaluate(circuit, theta)
    if target.shape != v.shape:
        raise ValueError("target dimension does not match the circuit")
    return max(0.0, 1 - abs(np.trace(target.conj().T @ v)) / circuit.dim)


def cost_and_gradient(circuit, theta, target):
    """Cost together with its analytic gradient.

    The gradient follows from the chain rule through the trace overlap,
    using the analytic Jacobian of the circuit; at a vanishing overlap the
    zero vector is returned as the subgradient choice.
    """
    theta = np.asarray(theta, dtype=float)
    v = evaluate(circuit, theta)
    if target.shape != v.shape:
        raise ValueError("target dimension does not match the circuit")
    t = np.trace(target.conj().T @ v)
    value = max(0.0, 1 - abs(t) / circuit.dim)
    if abs(t) == 0:
        return value, np.zeros(circuit.d)
    stack = analytic_jacobian(circuit, theta)
    overlaps = np.einsum("ab,jab->j", target.conj(), stack)
    grad = -np.real(np.conj(t) * overlaps) / (abs(t) * circuit.dim)
    return value, grad


def cost_gradient(circuit, theta, target):
    """Gradient of :func:`cost` with respect to the parameters."""
    return cost_and_gradient(circuit, theta, target)[1]


class _Converged(Exception):
    pass


def polish(circuit, theta, target, max_nfev=4000):
    """Refine near-converged parameters by damped Gauss-Newton.

    Minimizes the Frobenius residual of ``V(theta) - exp(i phi) U`` over the
    parameters and the auxiliary global phase, which resolves the flat
    directions of the trace-overlap cost far beyond where quasi-Newton line
    searches stall. Returns ``(theta, cost)`` for the better of the input
    and the refined point.
    """
    target = np.asarray(target, dtype=complex)
    v = evaluate(circuit, theta)
    phi0 = np.angle(np.trace(target.conj().T @ v))
    x0 = np.concatenate([theta, [phi0]])

    def residual(x):
        diff = evaluate(circuit, x[:-1]) - np.exp(1j * x[-1]) * target
        flat = diff.ravel()
        return np.concatenate([flat.real, flat.imag])

    def jacobian(x):
        stack = analytic_jacobian(circuit, x[:-1])
        d_theta = jacobian_real_matrix(stack).T
        d_phi = (-1j * np.exp(1j * x[-1]) * target).ravel()
        d_phi = np.concatenate([d_phi.real, d_phi.imag])[:, None]
        return np.hstack([d_theta, d_phi])

    result = least_squares(
        residual,
        x0,
        jac=jacobian,
        method="lm",
        xtol=3e-16,
        ftol=3e-16,
        gtol=3e-16,
        max_nfev=max_nfev,
    )
    refined = result.x[:-1]
    refined_cost = cost(circuit, refined, target)
    original_cost = cost(circuit, theta, target)
    if refined_cost < original_cost:
        return refined, refined_cost
    return np.asarray(theta, dtype=float), original_cost


def _minimize_once(circuit, target, theta0, max_epochs, memory, target_precision, use_polish):
    """One optimization attempt; returns (theta, cost, trace, epochs)."""
    best = {"x": np.asarray(theta0, dtype=float), "f": np.inf}
    trace = []

    def objective(x):
        f, g = cost_and_gradient(circuit, x, target)
        if f < best["f"]:
            best["x"], best["f"] = x.copy(), f
        if f < target_precision:
            raise _Converged
        return f, g

    def record(_xk):
        trace.append(best["f"])

    epochs = max_epochs
    try:
        result = minimize(
            objective,
            theta0,
            jac=True,
            method="L-BFGS-B",
            callback=record,
            options={
                "maxiter": max_epochs,
                # memory beyond d brings no measurable benefit but a
                # quadratic cost in the backend's subspace step
                "maxcor": min(memory, max(circuit.d, 1)),
                # hand flatlined attempts to the polish instead of crawling
                "ftol": 1e-13,
                "gtol": 1e-16,
            },
        )
        epochs = result.nit
    except _Converged:
        trace.append(best["f"])
        epochs = len(trace)
    if use_polish and best["f"] < POLISH_THRESHOLD and best["f"] > 0:
        theta, value = polish(circuit, best["x"], target)
        best["x"], best["f"] = theta, value
        trace.append(value)
    return best["x"], best["f"], np.asarray(trace), epochs


def count_non_clifford(theta, snap_tol=1e-6):
    """Count rotation angles away from multiples of pi/2 and snap the rest.

    Angles within ``snap_tol`` of k * pi / 2 (including zero) are replaced
    by the exact multiple and excluded from the count.

    Returns:
        tuple: ``(count, snapped_theta)``.
    """
    theta = np.asarray(theta, dtype=float)
    nearest = np.round(theta / HALF_PI) * HALF_PI
    clifford = np.abs(theta - nearest) <= snap_tol
    snapped = np.where(clifford, nearest, theta)
    return int(np.sum(~clifford)), snapped


def compile(target, group, n, config=None, circuit=None):
    """Variationally compile a target matrix onto a template circuit.

    Repeatedly draws initial angles from a normal distribution and runs a
    limited-memory quasi-Newton optimization until an attempt reaches a cost
    below ``config.epsilon`` or the attempt budget is exhausted.

    Args:
        target (np.ndarray): Matrix to synthesize; must pass the membership
            check for ``(group, n)``.
        group (str): Group label, SU, SO or SP.
        n (int): Number of qubits.
        config (CompileConfig): Optimizer settings.
        circuit (Circuit): Ansatz override; defaults to the group's template.

    Returns:
        CompileReport: Best attempt found, with cost traces for all attempts.
    """
    config = config or CompileConfig()
    target = np.asarray(target, dtype=complex)
    group_membership(target, group, n)
    if circuit is None:
        circuit = build_template(group, n)
    rng = np.random.default_rng(config.seed)
    max_epochs = config.max_epochs or 500 * n
    memory = config.memory or 5 * circuit.d
    start = time.perf_counter()
    best_theta, best_cost = None, np.inf
    traces, epochs_used = [], []
    attempts = 0
    for attempts in range(1, config.max_attempts + 1):
        theta0 = rng.normal(0.0, config.init_sigma, circuit.d)
        theta, value, trace, epochs = _minimize_once(
            circuit, target, theta0, max_epochs, memory,
            config.target_precision, config.polish,
        )
        traces.append(trace)
        epochs_used.append(epochs)
        if value < best_cost:
            best_theta, best_cost = theta, value
        if best_cost < config.epsilon:
            break
    count, snapped = count_non_clifford(best_theta, config.snap_tol)
    return CompileReport(
        converged=bool(best_cost < config.epsilon),
        final_cost=float(best_cost),
        theta=best_theta,
        attempts_used=attempts,
        epochs_per_attempt=epochs_used,
        wall_time=time.perf_counter() - start,
        non_clifford_count=count,
        snapped_cost=cost(circuit, snapped, target),
        cost_traces=traces,
    )


def compile_adapt(target, group, n, config=None, n_reps=3):
    """Adaptive compilation that grows the ansatz brick by brick.

    For k = 0, 1, 2, ... bricks, up to ``n_reps`` attempts are run on the
    truncated template; the first stage whose best cost beats the threshold
    wins. The loop terminates at the full template at the latest; if even
    that stage fails, the best result is reported as unconverged.
    """
    config = config or CompileConfig()
    target = np.asarray(target, dtype=complex)
    group_membership(target, group, n)
    full_bricks = lower_bound_two_qubit(group, n)
    rng = np.random.default_rng(config.seed)
    start = time.perf_counter()
    best = None
    for bricks in range(full_bricks + 1):
        circuit = truncated_template(group, n, bricks)
        stage_config = CompileConfig(
            epsilon=config.epsilon,
            target_precision=config.target_precision,
            max_epochs=config.max_epochs,
            max_attempts=n_reps,
            init_sigma=config.init_sigma,
            memory=config.memory,
            seed=rng.integers(2**63),
            snap_tol=config.snap_tol,
            polish=config.polish,
        )
        report = compile(target, group, n, stage_config, circuit=circuit)
        report.bricks_used = bricks
        if best is None or report.final_cost < best.final_cost:
            best = report
        if report.converged:
            best = report
            break
    best.wall_time = time.perf_counter() - start
    return best


def success_curve(final_costs, thresholds=None):
    """Fraction of attempts below each threshold, on a descending grid."""
    final_costs = np.asarray(final_costs, dtype=float)
    if thresholds is None:
        thresholds = np.logspace(0, -14, 29)
    rates = [float(np.mean(final_costs < eps)) for eps in thresholds]
    return np.asarray(thresholds), np.asarray(rates)


@dataclass
class BatchStats:
    thresholds: np.ndarray
    success_rates: np.ndarray
    attempt_costs: np.ndarray
    times_to_compile: np.ndarray
    per_attempt_success: float


def batch_compile(targets, group, n, config=None):
    """Compile a batch of targets, collecting aggregate statistics.

    Each target is attempted until its first convergence (within the
    configured attempt budget). The aggregate contains all attempts' final
    costs, the success-rate-versus-threshold curve, and the wall time each
    target took to compile.

    Returns:
        tuple: ``(reports, BatchStats)``.
    """
    config = config or CompileConfig()
    reports = []
    attempt_costs = []
    for index, target in enumerate(targets):
        target_config = CompileConfig(
            epsilon=config.epsilon,
            target_precision=config.target_precision,
            max_epochs=config.max_epochs,
            max_attempts=config.max_attempts,
            init_sigma=config.init_sigma,
            memory=config.memory,
            seed=config.seed + index,
            snap_tol=config.snap_tol,
            polish=config.polish,
        )
        report = compile(target, group, n, target_config)
        reports.append(report)
        attempt_costs.extend(trace[-1] for trace in report.cost_traces if len(trace))
    attempt_costs = np.asarray(attempt_costs)
    thresholds, rates = success_curve(attempt_costs)
    stats = BatchStats(
        thresholds=thresholds,
        success_rates=rates,
        attempt_costs=attempt_costs,
        times_to_compile=np.asarray([r.wall_time for r in reports]),
        per_attempt_success=float(np.mean(attempt_costs < config.epsilon)),
    )
    return reports, stats
