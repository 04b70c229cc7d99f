"""Distance-relay instance: negative-sequence current as the auxiliary signal.

Normal operation::

    e_- = z_- theta + lambda_-,0        e_+ = z_+ i_+ + lambda_+,0

Phase-to-phase fault::

    e_- = z_f theta + lambda_-,1        e_+ = z_f i_+ + lambda_+,1

All phasors are split into real and imaginary parts.  The signal is
``theta = (mu, nu)`` and the measurements are stacked as
``x = (f_-, g_-, f_+, g_+, c_+, d_+)``, i.e. Re/Im of ``e_-``, ``e_+``, ``i_+``.
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial

import numpy as np

from .ccp import CcpConfig, design
from .conic import DEFAULT_TOL, SolverError
from .dual import check_separability
from .model import DesignProblem, StaticModel

FEASIBLE, INFEASIBLE, ERROR = 1, 0, -1


@dataclass(frozen=True)
class Phasor:
    re: float
    im: float

    def __post_init__(self):
        if not (math.isfinite(self.re) and math.isfinite(self.im)):
            raise ValueError(f"phasor components must be finite, got ({self.re}, {self.im})")

    @classmethod
    def from_complex(cls, z) -> "Phasor":
        z = complex(z)
        return cls(z.real, z.imag)

    def __complex__(self):
        return complex(self.re, self.im)


@dataclass(frozen=True)
class PhasorModelSpec:
    z_minus: Phasor
    z_plus: Phasor
    z_fault: Phasor

    def __post_init__(self):
        for name in ("z_minus", "z_plus", "z_fault"):
            z = getattr(self, name)
            if not isinstance(z, Phasor):
                object.__setattr__(self, name, Phasor.from_complex(z))
            elif z.re < 0:
                warnings.warn(f"{name} has negative resistance {z.re}", stacklevel=3)

    def with_fault_reactance(self, x_f: float) -> "PhasorModelSpec":
        return replace(self, z_fault=Phasor(self.z_fault.re, float(x_f)))


def case_study_spec(x_f: float = 25.0) -> PhasorModelSpec:
    """Line/load impedance 30 + j35 in both sequences, fault path 26 + j x_f."""
    return PhasorModelSpec(Phasor(30.0, 35.0), Phasor(30.0, 35.0), Phasor(26.0, x_f))


def complex_to_matrix(z) -> np.ndarray:
    """Real 2x2 matrix acting on (Re w, Im w) as multiplication by ``z``."""
    z = complex(z)
    return np.array([[z.real, -z.imag], [z.imag, z.real]])


def build_models(spec: PhasorModelSpec) -> DesignProblem:
    M_minus = complex_to_matrix(spec.z_minus)
    M_plus = complex_to_matrix(spec.z_plus)
    M_fault = complex_to_matrix(spec.z_fault)
    I2, Z2 = np.eye(2), np.zeros((2, 2))

    def mode(m_seq_minus, m_seq_plus):
        return StaticModel(
            theta_map=np.vstack([-m_seq_minus, Z2]),
            meas_map=np.block([[I2, Z2, Z2], [Z2, I2, -m_seq_plus]]),
            noise_map=np.eye(4),
            ineq_lhs=np.zeros((0, 6)),
            ineq_rhs=np.zeros(0),
        )

    return DesignProblem(mode(M_minus, M_plus), mode(M_fault, M_fault), np.eye(2), 1.0)


@dataclass
class FeasibilityGrid:
    """Separability of each grid node; ``states[i, j]`` is for ``(re_values[i], im_values[j])``."""

    re_values: np.ndarray
    im_values: np.ndarray
    states: np.ndarray

    @property
    def n_feasible(self) -> int:
        return int(np.sum(self.states == FEASIBLE))

    @property
    def n_errors(self) -> int:
        return int(np.sum(self.states == ERROR))

    def rows(self):
        for i, re in enumerate(self.re_values):
            for j, im in enumerate(self.im_values):
                yield float(re), float(im), int(self.states[i, j])


def _cell(problem, tol, theta):
    try:
        return FEASIBLE if check_separability(problem, theta, tol) else INFEASIBLE
    except SolverError:
        return ERROR


def _map(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * workers))))
    return [fn(it) for it in items]


def feasibility_grid(problem, re_range=(-3.0, 3.0), im_range=(-3.0, 3.0), n_re=41, n_im=41,
                     tolerance=DEFAULT_TOL, workers=1) -> FeasibilityGrid:
    """Check separability of every signal on a rectangular grid in the complex plane.

    ``problem`` may be a :class:`PhasorModelSpec` or any two-dimensional
    :class:`DesignProblem`.
    """
    if n_re < 2 or n_im < 2:
        raise ValueError("grid needs at least 2 nodes per axis")
    if isinstance(problem, PhasorModelSpec):
        problem = build_models(problem)
    if problem.n_theta != 2:
        raise ValueError(f"grid needs a 2-dimensional signal, problem has {problem.n_theta}")
    re = np.linspace(*re_range, n_re)
    im = np.linspace(*im_range, n_im)
    nodes = [np.array([a, b]) for a in re for b in im]
    states = _map(partial(_cell, problem, tolerance), nodes, workers)
    return FeasibilityGrid(re, im, np.array(states, dtype=int).reshape(n_re, n_im))


@dataclass
class SweepRow:
    xf: float
    theta_re: float
    theta_im: float
    theta_abs: float
    cost: float
    sigma: float
    status: str


def _sweep_point(spec_base, config, x_f):
    problem = build_models(spec_base.with_fault_reactance(x_f))
    try:
        res = design(problem, config)
    except SolverError:
        return SweepRow(x_f, math.nan, math.nan, math.nan, math.nan, math.nan, "SolverFailure")
    th = res.theta_star
    return SweepRow(x_f, float(th[0]), float(th[1]), float(np.hypot(*th)), res.cost,
                    float(res.sigma_verified), res.status.value)


def sweep_xf(spec_base: PhasorModelSpec, xf_min=12.0, xf_max=58.0, n_points=24,
             config: CcpConfig | None = None, workers=1) -> list[SweepRow]:
    """Optimal signal as the fault-path reactance varies; one row per reactance."""
    if n_points > 1 and not xf_min < xf_max:
        raise ValueError("xf_min must be below xf_max")
    config = config or CcpConfig()
    xs = [float(v) for v in np.linspace(xf_min, xf_max, n_points)]
    return _map(partial(_sweep_point, spec_base, config), xs, workers)
