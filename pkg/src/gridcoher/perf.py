"""Synchronization-norm evaluation and time-domain simulation.

The synchronization norm is the expected total transient incoherence

    E { integral_0^inf (1/n) sum_i (omega_i - mean_j omega_j)^2 dt }

under an i.i.d. standard-normal step load applied at t = 0 with the
closed loop starting at the origin.  Three mutually checking evaluation
routes are provided: the closed form (uniform parameters, proportional
communication), a per-mode Lyapunov oracle, and a Monte Carlo ensemble
of explicitly integrated trajectories.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .controllers import (
    Capi,
    ClosedLoopSystem,
    Controller,
    Dapi,
    Depi,
    Droop,
    GeneratorParams,
    _is_uniform_vector,
    assemble,
    modal_block,
    unobservable_marginal_modes,
)
from .errors import (
    AssumptionError,
    ObservableMarginalModeError,
    ParameterError,
    UnstableSystemError,
)
from .netmodel import LaplacianSpectrum, NetworkGraph, build_laplacian, spectrum
from .util import thread_count

DEFAULT_DT = 0.01               # integrator step [s]
HORIZON_FACTOR = 40.0           # default horizon = factor / |Re lambda_slow|
HORIZON_CAP = 200.0             # upper bound on the default horizon [s]
DIVERGENCE_LIMIT = 1e9          # |x| beyond this counts as divergence
DIVERGENCE_CHECK_STRIDE = 64    # steps between divergence checks
TAIL_WARN_FRACTION = 0.01       # tail-energy fraction that triggers a warning
MARGINAL_RESIDUAL_TOL = 1e-7    # max output leak allowed for marginal modes
MC_BATCH = 256                  # samples per integration batch (fixed for determinism)
SYNC_LOSS_ANGLE = np.pi / 2     # inter-bus angle beyond which sync is considered lost


@dataclass(frozen=True)
class NormReport:
    """Result of one synchronization-norm evaluation."""

    value: float
    method: str
    per_mode: tuple[tuple[int, float], ...] | None = None
    stderr: float | None = None
    samples: int | None = None
    warnings: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class DisturbanceSample:
    """One step-load draw, reproducible from its scalar seed."""

    p_m: np.ndarray
    seed: int


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """Fixed-step trajectory of one closed-loop simulation.

    ``omega`` holds frequency deviations; ``omega_abs`` (nonlinear runs
    only) adds the nominal frequency back in.  ``y_sq`` is the population
    variance of bus frequencies at each step.
    """

    times: np.ndarray
    omega: np.ndarray
    z: np.ndarray | None
    y_sq: np.ndarray
    load: np.ndarray
    omega_abs: np.ndarray | None = None
    warnings: tuple[str, ...] = ()


def draw_load(master_seed: int, index: int, n: int) -> DisturbanceSample:
    """Standard-normal load for ensemble member ``index``.

    The per-sample seed is derived by hashing (master_seed, index), so a
    sample is reproducible regardless of batching or thread schedule.
    """
    seed = int(np.random.SeedSequence((master_seed, index)).generate_state(1, np.uint64)[0])
    rng = np.random.default_rng(seed)
    return DisturbanceSample(p_m=rng.standard_normal(n), seed=seed)


def _uniform_scalar_gain(q, what):
    qv = np.atleast_1d(np.asarray(q, dtype=float))
    if np.any(qv <= 0):
        raise ParameterError(f"{what} must be strictly positive, got {q}")
    if not _is_uniform_vector(qv):
        raise AssumptionError(f"closed form requires Assumption 1 (uniform {what})")
    return float(qv[0])


def _infer_gamma(comm_laplacian, L):
    """Communication gain when L_c is proportional to the network Laplacian."""
    Lc = np.asarray(comm_laplacian, dtype=float)
    if Lc.shape != L.shape:
        raise ParameterError(f"communication Laplacian shape {Lc.shape} does not match {L.shape}")
    denom = float(np.sum(L * L))
    gamma = float(np.sum(Lc * L)) / denom
    scale = max(1.0, float(np.max(np.abs(Lc))))
    if gamma < 0 or np.max(np.abs(Lc - gamma * L)) > 1e-9 * scale:
        raise AssumptionError(
            "closed form requires Assumption 2 (communication Laplacian proportional "
            "to the network Laplacian)"
        )
    return gamma


def _resolve_gains(ctrl: Controller, get_laplacian):
    """Normalize a controller to ('droop'|'dapi', gamma, q) for modal formulas.

    CAPI maps to 'droop' because its integrator is invisible to modes
    i >= 2.  DePI maps to DAPI with gamma = 0 through the identical code
    path, which keeps the two variants bit-for-bit equal.
    ``get_laplacian`` is only called when an explicit communication
    matrix must be checked for proportionality.
    """
    if isinstance(ctrl, (Droop, Capi)):
        return "droop", None, None
    if isinstance(ctrl, Depi):
        return "dapi", 0.0, _uniform_scalar_gain(ctrl.q, "integral gain q")
    if isinstance(ctrl, Dapi):
        q = _uniform_scalar_gain(ctrl.q, "integral gain q")
        if ctrl.gamma is not None:
            return "dapi", float(ctrl.gamma), q
        return "dapi", _infer_gamma(ctrl.comm_laplacian, get_laplacian()), q
    raise ParameterError(f"unknown controller {ctrl!r}")


def _dapi_f(gamma, q, m, d, lam):
    """Per-mode damping added by the integral layer (DAPI family)."""
    return (d * q + gamma * lam * m) / (gamma * d * q + q * q + gamma * gamma * lam * m)


def sync_norm_closed_form(
    spec: LaplacianSpectrum, m: float, d: float, controller: Controller
) -> NormReport:
    """Closed-form synchronization norm for uniform parameters.

    Parameters
    ----------
    spec : LaplacianSpectrum
        Network spectrum; only the nonzero eigenvalues enter.
    m, d : float
        Uniform inertia and damping.
    controller : Droop | Capi | Dapi | Depi
        Droop and CAPI give identical values.  DAPI must use proportional
        communication (gamma form, or an explicit matrix that is a
        nonnegative multiple of the network Laplacian).

    Raises
    ------
    AssumptionError
        Non-uniform gains (Assumption 1) or non-proportional
        communication (Assumption 2).
    """
    if not (m > 0 and d > 0):
        raise ParameterError(f"m and d must be positive, got m={m}, d={d}")
    n = spec.n
    lam = spec.eigenvalues[1:]
    kind, gamma, q = _resolve_gains(
        controller,
        lambda: (spec.eigenbasis * spec.eigenvalues) @ spec.eigenbasis.T,
    )
    if kind == "droop":
        contrib = 1.0 / (2.0 * n * lam * d)
    else:
        f = _dapi_f(gamma, q, m, d, lam)
        contrib = 1.0 / (2.0 * n * (lam * d + f))
    per_mode = tuple((i, float(v)) for i, v in enumerate(contrib, start=2))
    return NormReport(
        value=float(np.sum(contrib)), method="closed_form", per_mode=per_mode
    )


def _solve_modal_lyapunov(A, c, singular):
    """Observability Gramian of one modal block via the vectorized equation.

    For the gamma = 0 block A is singular with an unobservable null
    direction; least squares then picks one valid Gramian, and the
    nullspace ambiguity is orthogonal to the equilibrium offset, so the
    quadratic form used downstream is unaffected.
    """
    k = A.shape[0]
    K = np.kron(np.eye(k), A.T) + np.kron(A.T, np.eye(k))
    rhs = -np.outer(c, c).reshape(-1, order="F")
    if singular:
        p_vec = np.linalg.lstsq(K, rhs, rcond=None)[0]
    else:
        p_vec = np.linalg.solve(K, rhs)
    P = p_vec.reshape(k, k, order="F")
    return 0.5 * (P + P.T)


def _modal_equilibrium(A, b, gamma, q, lam):
    """Post-step equilibrium of one modal block, offset from the origin.

    For gamma = 0 the block is singular: the combination delta - q z is
    conserved and stays at its initial value 0, which pins the reached
    equilibrium uniquely via a bordered solve.
    """
    if gamma == 0.0 and A.shape[0] == 3:
        M = np.vstack([A, np.array([1.0, 0.0, -q])])
        rhs = np.concatenate([-b, [0.0]])
        return np.linalg.lstsq(M, rhs, rcond=None)[0]
    x_eq = np.linalg.solve(A, -b)
    expected = np.zeros(A.shape[0])
    expected[0] = 1.0 / lam
    if not np.allclose(x_eq, expected, rtol=1e-9, atol=1e-9 * max(1.0, 1.0 / lam)):
        raise RuntimeError(f"modal equilibrium {x_eq} deviates from expected {expected}")
    return x_eq


def sync_norm_lyapunov(
    g: NetworkGraph, params: GeneratorParams, controller: Controller
) -> NormReport:
    """Synchronization norm via per-mode Lyapunov solves.

    Decomposes the closed loop into scalar network modes (valid for
    uniform parameters and proportional communication), translates each
    mode's step-load equilibrium to the origin, and accumulates the
    resulting quadratic cost from a 2x2 or 3x3 Lyapunov equation per
    mode.  The rigid mode contributes nothing and is skipped.
    """
    if not params.is_uniform:
        raise AssumptionError("Lyapunov oracle requires Assumption 1 (uniform m and d)")
    if params.n != g.n:
        raise ParameterError(f"params have {params.n} buses but graph has {g.n}")
    m, d = params.uniform_m(), params.uniform_d()
    L = build_laplacian(g)
    spec = spectrum(L)
    kind, gamma, q = _resolve_gains(controller, lambda: L)
    if kind == "dapi":
        block_ctrl = Dapi(q=q, gamma=gamma)
    else:
        block_ctrl = Droop()
    n = g.n
    contribs = []
    for idx, lam in enumerate(spec.eigenvalues[1:], start=2):
        A, b, c = modal_block(block_ctrl, float(lam), m, d, n)
        eigs = np.linalg.eigvals(A)
        if np.any(eigs.real > 1e-9):
            raise UnstableSystemError(f"unstable mode {idx}: eigenvalues {eigs}")
        singular = kind == "dapi" and gamma == 0.0
        x_eq = _modal_equilibrium(A, b, gamma if kind == "dapi" else None, q, float(lam))
        P = _solve_modal_lyapunov(A, c, singular)
        contribs.append((idx, float(x_eq @ P @ x_eq)))
    value = float(np.sum([v for _, v in contribs]))
    return NormReport(value=value, method="lyapunov", per_mode=tuple(contribs))


def _rk4_affine_maps(A, dt):
    """One-step propagators (Phi, Gam) of RK4 for x' = A x + const.

    x_{k+1} = Phi x_k + Gam u with u the constant forcing vector; this
    is algebraically the classic four-stage step specialized to a linear
    system with constant input.
    """
    k = A.shape[0]
    I = np.eye(k)
    A2 = A @ A
    A3 = A2 @ A
    A4 = A3 @ A
    Phi = I + dt * A + (dt**2 / 2.0) * A2 + (dt**3 / 6.0) * A3 + (dt**4 / 24.0) * A4
    Gam = dt * (I + (dt / 2.0) * A + (dt**2 / 6.0) * A2 + (dt**3 / 24.0) * A3)
    return Phi, Gam


def _slow_time_constant(A):
    eigs = np.linalg.eigvals(A)
    stable = eigs.real[eigs.real < -1e-9]
    if stable.size == 0:
        return np.inf
    return 1.0 / float(np.min(np.abs(stable)))


def _default_horizon(A):
    tau = _slow_time_constant(A)
    if not np.isfinite(tau):
        return HORIZON_CAP
    return min(HORIZON_FACTOR * tau, HORIZON_CAP)


def _mc_batch(sys, Phi, GamB, C, steps, dt, master_seed, indices):
    """Integrate one fixed batch of ensemble members; returns (J, tail)."""
    n = sys.layout.n
    P = np.column_stack([draw_load(master_seed, int(i), n).p_m for i in indices])
    X = np.zeros((sys.layout.dim, P.shape[1]))
    G = GamB @ P
    J = np.zeros(P.shape[1])
    prev = np.zeros(P.shape[1])
    for k in range(1, steps + 1):
        X = Phi @ X + G
        ysq = np.sum((C @ X) ** 2, axis=0)
        J += (0.5 * dt) * (prev + ysq)
        prev = ysq
        if k % DIVERGENCE_CHECK_STRIDE == 0 and float(np.max(np.abs(X))) > DIVERGENCE_LIMIT:
            raise UnstableSystemError(
                f"unstable closed loop: state exceeded {DIVERGENCE_LIMIT:g} at t={k * dt:g}",
                time=k * dt,
            )
    return J, prev


def sync_norm_monte_carlo(
    sys: ClosedLoopSystem,
    samples: int,
    horizon: float | None = None,
    dt: float | None = None,
    master_seed: int = 0,
) -> NormReport:
    """Synchronization norm from an ensemble of integrated trajectories.

    Each ensemble member applies an independent standard-normal step
    load from the origin and integrates with fixed-step RK4, summing the
    output energy by the trapezoid rule.  Results are independent of the
    GRIDCOHER_THREADS worker count: samples are seeded individually,
    processed in fixed batches, and reduced in index order.

    Parameters
    ----------
    sys : ClosedLoopSystem
    samples : int
        Ensemble size (>= 2 so the standard error is defined).
    horizon : float, optional
        Integration horizon [s]; default 40 slow time constants, capped
        at 200 s.
    dt : float, optional
        Step size [s]; default 0.01.
    master_seed : int
        Root of the per-sample seed derivation.

    Raises
    ------
    ObservableMarginalModeError
        If a marginal mode of A leaks into the output.
    UnstableSystemError
        If any trajectory diverges.
    """
    if samples < 2:
        raise ParameterError(f"need at least 2 samples, got {samples}")
    leaks = [r for _, r in unobservable_marginal_modes(sys) if r > MARGINAL_RESIDUAL_TOL]
    if leaks:
        raise ObservableMarginalModeError(
            f"observable marginal mode: output residuals {leaks} exceed {MARGINAL_RESIDUAL_TOL}"
        )
    dt = DEFAULT_DT if dt is None else float(dt)
    if dt <= 0:
        raise ParameterError(f"dt must be positive, got {dt}")
    horizon = _default_horizon(sys.A) if horizon is None else float(horizon)
    if horizon <= 0:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    steps = max(1, int(round(horizon / dt)))
    Phi, Gam = _rk4_affine_maps(sys.A, dt)
    GamB = Gam @ sys.B_in
    batches = [
        np.arange(lo, min(lo + MC_BATCH, samples)) for lo in range(0, samples, MC_BATCH)
    ]
    results: list = [None] * len(batches)

    def run(b):
        return _mc_batch(sys, Phi, GamB, sys.C, steps, dt, master_seed, batches[b])

    workers = thread_count()
    if workers > 1 and len(batches) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            for b, res in enumerate(pool.map(run, range(len(batches)))):
                results[b] = res
    else:
        for b in range(len(batches)):
            results[b] = run(b)

    J = np.concatenate([r[0] for r in results])
    tails = np.concatenate([r[1] for r in results])
    value = float(np.mean(J))
    stderr = float(np.std(J, ddof=1) / np.sqrt(samples))
    warnings = ()
    tau = _slow_time_constant(sys.A)
    if np.isfinite(tau) and value > 0 and float(np.mean(tails)) * tau > TAIL_WARN_FRACTION * value:
        warnings = (
            f"horizon too short: estimated tail energy exceeds {TAIL_WARN_FRACTION:.0%} "
            f"of the accumulated value",
        )
    return NormReport(
        value=value, method="monte_carlo", stderr=stderr, samples=int(samples), warnings=warnings
    )


def _record_from_states(layout, times, states, load, omega_ref=None, warnings=()):
    omega = states[:, layout.omega]
    y_dev = omega - omega.mean(axis=1, keepdims=True)
    y_sq = np.sum(y_dev**2, axis=1) / layout.n
    z = states[:, layout.z] if layout.z_dim else None
    omega_abs = omega + omega_ref if omega_ref is not None else None
    return TrajectoryRecord(
        times=times,
        omega=omega,
        z=z,
        y_sq=y_sq,
        load=np.asarray(load, dtype=float).copy(),
        omega_abs=omega_abs,
        warnings=tuple(warnings),
    )


def simulate_linear(
    sys: ClosedLoopSystem, p_m, horizon: float, dt: float = DEFAULT_DT
) -> TrajectoryRecord:
    """Fixed-step RK4 trajectory of the linear closed loop under a step load."""
    p = np.asarray(p_m, dtype=float)
    if p.shape != (sys.layout.n,):
        raise ParameterError(f"load shape {p.shape} does not match n={sys.layout.n}")
    if dt <= 0 or horizon <= 0:
        raise ParameterError("horizon and dt must be positive")
    steps = max(1, int(round(horizon / dt)))
    forcing = sys.B_in @ p
    A = sys.A

    def f(x):
        return A @ x + forcing

    states = np.zeros((steps + 1, sys.layout.dim))
    x = np.zeros(sys.layout.dim)
    for k in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if float(np.max(np.abs(x))) > DIVERGENCE_LIMIT:
            raise UnstableSystemError(
                f"trajectory diverged at t={k * dt:g}", time=k * dt
            )
        states[k] = x
    times = np.arange(steps + 1) * dt
    return _record_from_states(sys.layout, times, states, p)


def simulate_nonlinear(
    g: NetworkGraph,
    params: GeneratorParams,
    ctrl: Controller,
    p_m,
    delta0=None,
    horizon: float = 40.0,
    dt: float = DEFAULT_DT,
) -> TrajectoryRecord:
    """RK4 trajectory of the full sine-coupled swing dynamics.

    Works in the frame rotating at the nominal frequency, so ``omega``
    is the deviation and ``omega_abs`` adds ``params.omega_ref`` back.
    Initial frequencies and integrator states are zero; initial angles
    default to zero.  A warning is attached (not an error) the first
    time any coupled angle difference leaves the +-pi/2 band.
    """
    n = g.n
    if params.n != n:
        raise ParameterError(f"params have {params.n} buses but graph has {n}")
    p = np.asarray(p_m, dtype=float)
    if p.shape != (n,):
        raise ParameterError(f"load shape {p.shape} does not match n={n}")
    delta0 = np.zeros(n) if delta0 is None else np.asarray(delta0, dtype=float)
    if delta0.shape != (n,):
        raise ParameterError(f"delta0 shape {delta0.shape} does not match n={n}")
    if dt <= 0 or horizon <= 0:
        raise ParameterError("horizon and dt must be positive")

    ei = np.array([e[0] for e in g.edges])
    ej = np.array([e[1] for e in g.edges])
    ew = np.array([e[2] for e in g.edges])
    sys_linear = assemble(g, params, ctrl)     # reuse layout and comm Laplacian validation
    layout = sys_linear.layout
    z_dim = layout.z_dim
    if isinstance(ctrl, (Dapi, Depi)):
        Lc = -sys_linear.A[layout.z, layout.z] * params_q(ctrl, n)[:, None]
        qvec = params_q(ctrl, n)
    else:
        Lc = None
        qvec = None

    def flows(delta):
        s = ew * np.sin(delta[ei] - delta[ej])
        out = np.zeros(n)
        np.add.at(out, ei, s)
        np.add.at(out, ej, -s)
        return out

    def f(x):
        delta, omega = x[:n], x[n : 2 * n]
        dx = np.empty_like(x)
        dx[:n] = omega
        u = 0.0
        if z_dim == 1:
            u = -x[2 * n]
            dx[2 * n] = np.mean(omega) / ctrl.q
        elif z_dim == n:
            z = x[2 * n :]
            u = -z
            dx[2 * n :] = (omega - Lc @ z) / qvec
        dx[n : 2 * n] = (-flows(delta) - params.d * omega + p + u) / params.m
        return dx

    steps = max(1, int(round(horizon / dt)))
    dim = 2 * n + z_dim
    states = np.zeros((steps + 1, dim))
    x = np.zeros(dim)
    x[:n] = delta0
    states[0] = x
    for k in range(1, steps + 1):
        k1 = f(x)
        k2 = f(x + 0.5 * dt * k1)
        k3 = f(x + 0.5 * dt * k2)
        k4 = f(x + dt * k3)
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if float(np.max(np.abs(x))) > DIVERGENCE_LIMIT:
            raise UnstableSystemError(f"trajectory diverged at t={k * dt:g}", time=k * dt)
        states[k] = x
    times = np.arange(steps + 1) * dt

    warnings = []
    gaps = np.abs(states[:, ei] - states[:, ej])
    exceeded = np.nonzero(np.max(gaps, axis=1) > SYNC_LOSS_ANGLE)[0]
    if exceeded.size:
        k0 = int(exceeded[0])
        edge = int(np.argmax(gaps[k0]))
        warnings.append(
            f"loss of synchronism: angle gap on edge ({int(ei[edge])}, {int(ej[edge])}) "
            f"exceeded pi/2 at t={times[k0]:g}"
        )
    return _record_from_states(
        layout, times, states, p, omega_ref=params.omega_ref, warnings=warnings
    )


def params_q(ctrl, n):
    """Per-bus integral gain vector of a DAPI/DePI controller."""
    return np.broadcast_to(np.asarray(ctrl.q, dtype=float), (n,)).astype(float)


def scaling_bound_dapi(gamma: float, d: float, q: float) -> float:
    """Graph-independent upper bound on the DAPI synchronization norm."""
    if d <= 0 or q <= 0 or gamma < 0:
        raise ParameterError(f"need d > 0, q > 0, gamma >= 0; got d={d}, q={q}, gamma={gamma}")
    return (gamma * d + q) / (2.0 * d)


def trapezoid_energy(rec: TrajectoryRecord) -> float:
    """Accumulated output energy integral of one trajectory."""
    return float(np.trapezoid(rec.y_sq, rec.times))


def trajectory_to_csv(rec: TrajectoryRecord, path) -> None:
    """Write a trajectory as CSV: t, omega_*, y_sq, then z_* when present."""
    n = rec.omega.shape[1]
    header = ["t"] + [f"omega_{i}" for i in range(n)] + ["y_sq"]
    z_cols = 0 if rec.z is None else rec.z.shape[1]
    header += [f"z_{i}" for i in range(z_cols)]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for k in range(rec.times.shape[0]):
            row = [repr(float(rec.times[k]))]
            row += [repr(float(v)) for v in rec.omega[k]]
            row.append(repr(float(rec.y_sq[k])))
            if z_cols:
                row += [repr(float(v)) for v in rec.z[k]]
            writer.writerow(row)


def report_to_dict(report: NormReport) -> dict:
    out = {
        "value": float(report.value),
        "method": report.method,
        "stderr": None if report.stderr is None else float(report.stderr),
        "samples": None if report.samples is None else int(report.samples),
        "per_mode": None
        if report.per_mode is None
        else [[int(i), float(v)] for i, v in report.per_mode],
    }
    if report.warnings:
        out["warnings"] = list(report.warnings)
    return out


def report_to_json(report: NormReport, path) -> None:
    """Write a NormReport as JSON (value, method, stderr, samples, per_mode)."""
    with open(path, "w") as fh:
        json.dump(report_to_dict(report), fh, indent=2)
        fh.write("\n")
