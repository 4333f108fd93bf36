"""Generator parameters, controller variants, and closed-loop assembly.

Four controller layers are modeled on top of the linearized swing
dynamics: pure droop (proportional), centralized-averaging PI (CAPI),
distributed-averaging PI (DAPI), and decentralized PI (DePI, which is
DAPI with the communication graph removed).  ``assemble`` turns a graph,
generator parameters, and a controller choice into state-space matrices
whose output is the deviation-from-mean frequency, scaled so that the
squared output is the population variance of the bus frequencies.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GraphError, ParameterError
from .netmodel import (
    DisconnectedGraphError,
    NetworkGraph,
    ZERO_EIG_REL_TOL,
    build_laplacian,
)

UNIFORM_RTOL = 1e-12        # max/min - 1 bound for "uniform" parameter vectors
MARGINAL_RE_TOL = 1e-9      # |Re| below this counts as a marginal eigenvalue
OMEGA_REF_DEFAULT = 2.0 * math.pi * 50.0    # nominal grid frequency [rad/s]


def _as_positive_vector(x, n, name):
    v = np.broadcast_to(np.asarray(x, dtype=float), (n,)).copy()
    if np.any(~np.isfinite(v)) or np.any(v <= 0.0):
        raise ParameterError(f"{name} must be finite and strictly positive, got {x}")
    return v


def _is_uniform_vector(v):
    return float(np.max(v)) / float(np.min(v)) - 1.0 <= UNIFORM_RTOL


@dataclass(frozen=True, eq=False)
class GeneratorParams:
    """Per-bus inertia m and damping d, plus the nominal frequency.

    Scalars broadcast to all buses.  ``omega_ref`` only shifts reported
    absolute frequencies; the deviation dynamics never depend on it.
    """

    m: np.ndarray
    d: np.ndarray
    omega_ref: float = OMEGA_REF_DEFAULT

    def __post_init__(self):
        m = np.atleast_1d(np.asarray(self.m, dtype=float))
        d = np.atleast_1d(np.asarray(self.d, dtype=float))
        if m.shape != d.shape or m.ndim != 1:
            raise ParameterError(f"m and d must be 1-d and equal length, got {m.shape} vs {d.shape}")
        if np.any(m <= 0) or np.any(d <= 0):
            raise ParameterError("inertia and damping must be strictly positive")
        object.__setattr__(self, "m", m)
        object.__setattr__(self, "d", d)

    @classmethod
    def uniform(cls, n: int, m: float, d: float, omega_ref: float = OMEGA_REF_DEFAULT):
        return cls(m=np.full(n, float(m)), d=np.full(n, float(d)), omega_ref=omega_ref)

    @property
    def n(self) -> int:
        return self.m.shape[0]

    @property
    def is_uniform(self) -> bool:
        return _is_uniform_vector(self.m) and _is_uniform_vector(self.d)

    def uniform_m(self) -> float:
        if not _is_uniform_vector(self.m):
            raise ParameterError("inertia vector is not uniform")
        return float(self.m[0])

    def uniform_d(self) -> float:
        if not _is_uniform_vector(self.d):
            raise ParameterError("damping vector is not uniform")
        return float(self.d[0])


@dataclass(frozen=True)
class Droop:
    """Proportional primary control only; no integral state."""


@dataclass(frozen=True)
class Capi:
    """Centralized PI on the network-average frequency (one shared integrator)."""

    q: float

    def __post_init__(self):
        if not (float(self.q) > 0.0):
            raise ParameterError(f"CAPI integral gain q must be positive, got {self.q}")
        object.__setattr__(self, "q", float(self.q))


@dataclass(frozen=True, eq=False)
class Dapi:
    """Distributed PI with integrator consensus over a communication graph.

    Exactly one of ``gamma`` (communication Laplacian = gamma * network
    Laplacian) or ``comm_laplacian`` (explicit matrix) must be given.
    ``gamma = 0`` removes all communication and is identical to DePI.
    """

    q: float | np.ndarray
    gamma: float | None = None
    comm_laplacian: np.ndarray | None = None

    def __post_init__(self):
        if (self.gamma is None) == (self.comm_laplacian is None):
            raise ParameterError("DAPI needs exactly one of gamma or comm_laplacian")
        if self.gamma is not None and not (float(self.gamma) >= 0.0):
            raise ParameterError(f"DAPI communication gain gamma must be >= 0, got {self.gamma}")


@dataclass(frozen=True, eq=False)
class Depi:
    """Decentralized PI: each bus integrates its own frequency, no consensus."""

    q: float | np.ndarray


Controller = Droop | Capi | Dapi | Depi


@dataclass(frozen=True)
class StateLayout:
    """Block layout of the closed-loop state vector (delta, omega, z)."""

    n: int
    z_dim: int            # 0 for droop, 1 for CAPI, n for DAPI/DePI

    @property
    def delta(self) -> slice:
        return slice(0, self.n)

    @property
    def omega(self) -> slice:
        return slice(self.n, 2 * self.n)

    @property
    def z(self) -> slice | None:
        if self.z_dim == 0:
            return None
        return slice(2 * self.n, 2 * self.n + self.z_dim)

    @property
    def dim(self) -> int:
        return 2 * self.n + self.z_dim


@dataclass(frozen=True, eq=False)
class ClosedLoopSystem:
    """State-space closed loop: x' = A x + B_in p, y = C x.

    The output y is (1/sqrt(n)) (I - J) omega with J the averaging
    matrix, so |y|^2 is the population variance of bus frequencies.
    """

    A: np.ndarray
    B_in: np.ndarray
    C: np.ndarray
    layout: StateLayout

    def __post_init__(self):
        k = self.layout.dim
        n = self.layout.n
        if self.A.shape != (k, k) or self.B_in.shape != (k, n) or self.C.shape != (n, k):
            raise ParameterError(
                f"inconsistent system shapes A{self.A.shape} B{self.B_in.shape} C{self.C.shape}"
            )


def _coherence_output(n):
    return (np.eye(n) - np.full((n, n), 1.0 / n)) / np.sqrt(n)


def _resolve_comm_laplacian(ctrl: Dapi, L: np.ndarray) -> np.ndarray:
    n = L.shape[0]
    if ctrl.gamma is not None:
        return float(ctrl.gamma) * L
    Lc = np.asarray(ctrl.comm_laplacian, dtype=float)
    if Lc.shape != (n, n):
        raise ParameterError(f"communication Laplacian shape {Lc.shape} does not match n={n}")
    scale = max(1.0, float(np.max(np.abs(Lc))))
    if np.max(np.abs(Lc - Lc.T)) > 1e-12 * scale:
        raise GraphError("communication Laplacian is not symmetric")
    if np.max(np.abs(Lc.sum(axis=1))) > 1e-12 * scale:
        raise GraphError("communication Laplacian rows must sum to zero")
    w = np.linalg.eigvalsh(Lc)
    tol = ZERO_EIG_REL_TOL * max(1.0, float(w[-1]))
    if w[0] < -tol:
        raise GraphError("communication Laplacian must be positive semidefinite")
    if w[1] <= tol:
        raise DisconnectedGraphError("communication graph is disconnected")
    return Lc


def assemble(g: NetworkGraph, params: GeneratorParams, ctrl: Controller) -> ClosedLoopSystem:
    """Closed-loop matrices for a graph, generator set, and controller.

    Parameters
    ----------
    g : NetworkGraph
    params : GeneratorParams
        Must have one entry per bus.
    ctrl : Droop | Capi | Dapi | Depi

    Returns
    -------
    ClosedLoopSystem
        Load disturbances enter through B_in = M^{-1} restricted to the
        omega block; integral states (if any) are appended after omega.
    """
    n = g.n
    if params.n != n:
        raise ParameterError(f"params have {params.n} buses but graph has {n}")
    L = build_laplacian(g)
    minv = 1.0 / params.m
    Z = np.zeros((n, n))
    I = np.eye(n)
    neg_ml = -minv[:, None] * L
    neg_md = np.diag(-params.d * minv)
    Binv = np.vstack([Z, np.diag(minv)])

    if isinstance(ctrl, Droop):
        A = np.block([[Z, I], [neg_ml, neg_md]])
        B = Binv
        layout = StateLayout(n=n, z_dim=0)
    elif isinstance(ctrl, Capi):
        col = np.vstack([np.zeros((n, 1)), -minv[:, None]])
        row = np.concatenate([np.zeros(n), np.full(n, 1.0 / (ctrl.q * n)), [0.0]])
        A = np.block([[Z, I], [neg_ml, neg_md]])
        A = np.vstack([np.hstack([A, col]), row[None, :]])
        B = np.vstack([Binv, np.zeros((1, n))])
        layout = StateLayout(n=n, z_dim=1)
    elif isinstance(ctrl, (Dapi, Depi)):
        if isinstance(ctrl, Depi):
            qvec = _as_positive_vector(ctrl.q, n, "DePI integral gain q")
            Lc = 0.0 * L
        else:
            qvec = _as_positive_vector(ctrl.q, n, "DAPI integral gain q")
            Lc = _resolve_comm_laplacian(ctrl, L)
        qinv = 1.0 / qvec
        A = np.block(
            [
                [Z, I, Z],
                [neg_ml, neg_md, np.diag(-minv)],
                [Z, np.diag(qinv), -qinv[:, None] * Lc],
            ]
        )
        B = np.vstack([Binv, np.zeros((n, n))])
        layout = StateLayout(n=n, z_dim=n)
    else:
        raise ParameterError(f"unknown controller {ctrl!r}")

    C = np.hstack([np.zeros((n, n)), _coherence_output(n), np.zeros((n, layout.z_dim))])
    return ClosedLoopSystem(A=A, B_in=B, C=C, layout=layout)


def modal_block(ctrl: Controller, lam: float, m: float, d: float, n: int):
    """Per-mode state-space block for uniform parameters, modes i >= 2.

    Returns (A, b_in, c) for the scalar mode with network eigenvalue
    ``lam``.  Droop and CAPI share the same 2x2 block because the CAPI
    integrator only couples to the rigid mode; DAPI and DePI get a 3x3
    block with the integrator row.  DAPI must be in proportional
    communication form (gamma given).
    """
    if lam <= 0:
        raise ParameterError(f"modal blocks are defined for modes i >= 2 (lambda > 0), got {lam}")
    if isinstance(ctrl, (Droop, Capi)):
        A = np.array([[0.0, 1.0], [-lam / m, -d / m]])
        b = np.array([0.0, 1.0 / m])
        c = np.array([0.0, 1.0]) / np.sqrt(n)
        return A, b, c
    if isinstance(ctrl, (Dapi, Depi)):
        if isinstance(ctrl, Depi):
            gamma, q = 0.0, ctrl.q
        else:
            if ctrl.gamma is None:
                raise ParameterError("modal blocks need DAPI in gamma form")
            gamma, q = float(ctrl.gamma), ctrl.q
        qv = np.atleast_1d(np.asarray(q, dtype=float))
        if np.any(qv <= 0):
            raise ParameterError(f"integral gain q must be positive, got {q}")
        if not _is_uniform_vector(qv):
            raise ParameterError("modal blocks need a uniform integral gain q")
        q = float(qv[0])
        A = np.array(
            [
                [0.0, 1.0, 0.0],
                [-lam / m, -d / m, -1.0 / m],
                [0.0, 1.0 / q, -gamma * lam / q],
            ]
        )
        b = np.array([0.0, 1.0 / m, 0.0])
        c = np.array([0.0, 1.0, 0.0]) / np.sqrt(n)
        return A, b, c
    raise ParameterError(f"unknown controller {ctrl!r}")


def unobservable_marginal_modes(sys: ClosedLoopSystem):
    """Marginal eigenvalues of A with their output-leak residuals.

    Returns a list of (eigenvalue, residual) for every eigenvalue with
    |Re| <= 1e-9, where residual = |C v| / |v| for the corresponding
    eigenvector.  A residual above 1e-7 means the marginal mode is
    visible in the coherence output, which makes the synchronization
    norm ill-defined.
    """
    vals, vecs = np.linalg.eig(sys.A)
    out = []
    for k in range(vals.shape[0]):
        if abs(vals[k].real) <= MARGINAL_RE_TOL:
            v = vecs[:, k]
            residual = float(np.linalg.norm(sys.C @ v) / np.linalg.norm(v))
            out.append((complex(vals[k]), residual))
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def params_from_dict(cfg: dict, n: int) -> GeneratorParams:
    """GeneratorParams from config fields ``m``, ``d``, ``omega_ref``."""
    if "m" not in cfg or "d" not in cfg:
        raise ParameterError("params config requires fields m and d")
    m = _as_positive_vector(cfg["m"], n, "inertia m")
    d = _as_positive_vector(cfg["d"], n, "damping d")
    return GeneratorParams(m=m, d=d, omega_ref=float(cfg.get("omega_ref", OMEGA_REF_DEFAULT)))


def controller_from_dict(cfg: dict) -> Controller:
    """Controller from config fields ``variant``, ``q``, ``gamma``."""
    variant = str(cfg.get("variant", "")).lower()
    if variant == "droop":
        return Droop()
    if variant == "capi":
        if "q" not in cfg:
            raise ParameterError("CAPI config requires q")
        return Capi(q=float(cfg["q"]))
    if variant == "dapi":
        if "q" not in cfg or "gamma" not in cfg:
            raise ParameterError("DAPI config requires q and gamma")
        q = cfg["q"]
        return Dapi(q=q if np.ndim(q) else float(q), gamma=float(cfg["gamma"]))
    if variant == "depi":
        if "q" not in cfg:
            raise ParameterError("DePI config requires q")
        q = cfg["q"]
        return Depi(q=q if np.ndim(q) else float(q))
    raise ParameterError(f"unknown controller variant {variant!r}")


def save_system_csv(sys: ClosedLoopSystem, directory) -> None:
    """Dump A, B_in, C as plain CSV matrices for inspection."""
    import os

    for name, mat in (("A", sys.A), ("B_in", sys.B_in), ("C", sys.C)):
        np.savetxt(os.path.join(directory, f"{name}.csv"), mat, delimiter=",")
