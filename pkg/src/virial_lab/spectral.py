"""Radial eigenproblems in a Dirichlet sine basis.

The reduced radial function ``u(r)`` on ``[0, r_max]`` is expanded in the
orthonormal modes ``chi_k(r) = sqrt(2/R) sin(q_k r)``, ``q_k = k pi / R``.
Every operator is kept as a dense matrix in that basis:

* the radial kinetic symbol is diagonal, ``hbar^2 q_k^2``;
* multiplicative terms ``W(r)`` use exact Galerkin matrix elements.  Since
  ``chi_k chi_l = [cos((k-l) pi r/R) - cos((k+l) pi r/R)] / R`` the matrix is
  Toeplitz minus Hankel in the cosine moments
  ``d(m) = (1/R) int_0^R (cos(m pi r / R) - 1) W(r) dr``.
  The ``-1`` cancels between the two parts and keeps ``1/r`` and ``1/r^2``
  integrable;
* ``method="collocation"`` instead samples ``W`` at the interior nodes
  ``r_j = j h`` and maps through the orthonormal DST-I.

Grid values of an eigenvector are ``psi = DST(c) / sqrt(h)``, normalised so
that ``h * sum(psi**2) == 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft
import scipy.linalg

from .potentials import PotentialSpec

OBSERVABLES = ("T", "V", "p_dT", "r_dV")
_QUAD_ORDER = 16


class GridTooCoarse(ValueError):
    pass


class ConvergenceFailure(RuntimeError):
    def __init__(self, msg: str, diagnostics: dict | None = None):
        super().__init__(msg)
        self.diagnostics = diagnostics or {}


class UnknownObservable(KeyError):
    pass


@dataclass(frozen=True)
class RadialGrid:
    n_points: int
    r_max: float

    def __post_init__(self):
        if self.n_points < 16:
            raise ValueError("n_points must be at least 16")
        if not self.r_max > 0:
            raise ValueError("r_max must be positive")

    @property
    def h(self) -> float:
        return self.r_max / (self.n_points + 1)

    @property
    def nodes(self) -> np.ndarray:
        return self.h * np.arange(1, self.n_points + 1)

    @property
    def wavenumbers(self) -> np.ndarray:
        return math.pi * np.arange(1, self.n_points + 1) / self.r_max


@dataclass(frozen=True)
class NonRelativistic:
    mass: float = 1.0

    def __post_init__(self):
        if not self.mass > 0:
            raise ValueError("mass must be positive")

    def symbol(self, s):
        """Kinetic energy as a function of ``s = p^2``."""
        return s / (2.0 * self.mass)

    def euler_symbol(self, s):
        """``p dT/dp`` as a function of ``s = p^2``."""
        return s / self.mass

    def to_dict(self):
        return {"form": "nonrelativistic", "mass": self.mass}


@dataclass(frozen=True)
class Salpeter:
    mass: float = 1.0
    c: float = 1.0

    def __post_init__(self):
        if self.mass < 0 or not self.c > 0:
            raise ValueError("Salpeter needs mass >= 0 and c > 0")

    def symbol(self, s):
        rest = self.mass * self.c**2
        return np.sqrt(s * self.c**2 + rest**2) - rest

    def euler_symbol(self, s):
        rest = self.mass * self.c**2
        return s * self.c**2 / np.sqrt(s * self.c**2 + rest**2)

    def to_dict(self):
        return {"form": "salpeter", "mass": self.mass, "c": self.c}


KineticForm = NonRelativistic | Salpeter


def dst_matrix(n: int) -> np.ndarray:
    """Orthonormal DST-I matrix; symmetric and its own inverse."""
    return scipy.fft.dst(np.eye(n), type=1, norm="ortho", axis=0)


def cosine_moments(funcs: list[Callable], r_max: float, m_max: int) -> np.ndarray:
    """``d(m) = (1/R) int_0^R (cos(m pi r/R) - 1) W(r) dr`` for ``m = 0..m_max``.

    Composite Gauss-Legendre with one panel per highest-frequency period.
    Returns an array of shape ``(len(funcs), m_max + 1)``.
    """
    panels = max(32, (m_max + 1) // 2)
    x, w = np.polynomial.legendre.leggauss(_QUAD_ORDER)
    edges = np.linspace(0.0, r_max, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    r = (mid[:, None] + half[:, None] * x[None, :]).reshape(-1)
    wr = (half[:, None] * w[None, :]).reshape(-1)
    vals = np.stack([np.asarray(f(r), dtype=float) for f in funcs], axis=1) * wr[:, None]
    out = np.empty((len(funcs), m_max + 1))
    theta = math.pi * r / r_max
    chunk = max(1, 4_000_000 // r.size)
    for start in range(0, m_max + 1, chunk):
        m = np.arange(start, min(m_max + 1, start + chunk))
        kern = np.cos(np.outer(m, theta)) - 1.0
        out[:, m] = (kern @ vals).T / r_max
    return out


def galerkin_matrices(funcs: list[Callable], grid: RadialGrid) -> list[np.ndarray]:
    """Galerkin matrices ``<chi_k|W|chi_l>`` for each radial function ``W``."""
    n = grid.n_points
    d = cosine_moments(funcs, grid.r_max, 2 * n)
    mats = []
    for dm in d:
        toe = scipy.linalg.toeplitz(dm[:n])
        hank = scipy.linalg.hankel(dm[2 : n + 2], dm[n + 1 : 2 * n + 1])
        mats.append(toe - hank)
    return mats


def generator_matrix(grid: RadialGrid) -> np.ndarray:
    """Real antisymmetric ``D`` with ``<chi_k|G|chi_l> = -i hbar D_kl``.

    On reduced radial functions ``G u = -i hbar (r u' + u/2)``.  Using
    ``int_0^R r sin(m pi r/R) dr = -R^2 (-1)^m / (m pi)`` the elements are
    closed-form.
    """
    n = grid.n_points
    big_r = grid.r_max
    k = np.arange(1, n + 1)

    def moment(m):
        m = np.asarray(m, dtype=float)
        out = np.zeros_like(m)
        nz = m != 0
        out[nz] = -(big_r**2) * np.where(m[nz] % 2 == 0, 1.0, -1.0) / (math.pi * m[nz])
        return out

    kk, ll = np.meshgrid(k, k, indexing="ij")
    q_l = math.pi * ll / big_r
    return q_l / big_r * (moment(kk + ll) + moment(kk - ll)) + 0.5 * np.eye(n)


@dataclass
class RadialHamiltonian:
    """Hamiltonian and its component operators in the sine basis."""

    grid: RadialGrid
    kinetic: KineticForm
    potential: PotentialSpec
    ell: int
    method: str
    hbar: float
    radial_p2: np.ndarray  # hbar^2 q_k^2, diagonal
    centrifugal: np.ndarray  # hbar^2 l(l+1)/r^2, so that p^2 = radial_p2 + centrifugal
    v_matrix: np.ndarray
    r_dv_matrix: np.ndarray
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        self.matrix = self.kinetic_matrix(1.0) + self.v_matrix
        self.matrix = 0.5 * (self.matrix + self.matrix.T)

    @cached_property
    def _p2_eig(self):
        if self.ell == 0:
            return None
        p2 = np.diag(self.radial_p2) + self.centrifugal
        return scipy.linalg.eigh(p2)

    def _function_of_p2(self, fn, lam: float) -> np.ndarray:
        if self._p2_eig is None:
            return np.diag(fn(self.radial_p2 / lam**2))
        s, u = self._p2_eig
        s = np.clip(s, 0.0, None)
        return (u * fn(s / lam**2)) @ u.T

    def kinetic_matrix(self, lam: float = 1.0) -> np.ndarray:
        """``T(p/lam)``; centrifugal energy counts as kinetic."""
        if isinstance(self.kinetic, NonRelativistic):
            p2 = np.diag(self.radial_p2) + self.centrifugal
            return p2 / (2.0 * self.kinetic.mass * lam**2)
        return self._function_of_p2(self.kinetic.symbol, lam)

    @cached_property
    def p_dt_matrix(self) -> np.ndarray:
        if isinstance(self.kinetic, NonRelativistic):
            return 2.0 * self.kinetic_matrix(1.0)
        return self._function_of_p2(self.kinetic.euler_symbol, 1.0)

    @cached_property
    def t_matrix(self) -> np.ndarray:
        return self.kinetic_matrix(1.0)

    def potential_matrix(self, lam: float = 1.0) -> np.ndarray:
        """``V(lam r)`` in the same discretisation as ``v_matrix``."""
        if lam == 1.0:
            return self.v_matrix
        return _multiplicative([lambda r: self.potential.value(lam * r)], self.grid, self.method)[0]

    def operator(self, name: str) -> np.ndarray:
        if name == "T":
            return self.t_matrix
        if name == "V":
            return self.v_matrix
        if name == "p_dT":
            return self.p_dt_matrix
        if name == "r_dV":
            return self.r_dv_matrix
        raise UnknownObservable(name)

    @cached_property
    def norm(self) -> float:
        """Max row sum, an upper bound on the spectral norm."""
        return float(np.abs(self.matrix).sum(axis=1).max())


def _multiplicative(funcs, grid: RadialGrid, method: str) -> list[np.ndarray]:
    if method == "galerkin":
        return galerkin_matrices(funcs, grid)
    if method == "collocation":
        s = dst_matrix(grid.n_points)
        r = grid.nodes
        return [(s * np.asarray(f(r), dtype=float)) @ s for f in funcs]
    raise ValueError(f"unknown method {method!r}")


def build_hamiltonian(
    grid: RadialGrid,
    kinetic: KineticForm,
    potential: PotentialSpec,
    ell: int = 0,
    method: str = "galerkin",
    hbar: float = 1.0,
    max_dynamic_range: float = 10.0,
) -> RadialHamiltonian:
    """Assemble ``H = T + V`` for angular momentum ``ell``.

    Raises :class:`GridTooCoarse` when the potential plus centrifugal term at
    the first node exceeds ``max_dynamic_range`` times the largest kinetic
    symbol, which means the grid cannot resolve the core.
    """
    if ell < 0:
        raise ValueError("ell must be >= 0")
    q = grid.wavenumbers
    r1 = grid.nodes[:1]
    cent = hbar**2 * ell * (ell + 1)
    w1 = float(potential.value(r1)[0]) + float(kinetic.symbol(cent / r1[0] ** 2))
    t_max = float(kinetic.symbol(hbar**2 * q[-1] ** 2))
    if not math.isfinite(w1) or abs(w1) > max_dynamic_range * t_max:
        raise GridTooCoarse(f"|W(r_1)| = {abs(w1):.3g} exceeds {max_dynamic_range:g} x T_max = {t_max:.3g}")
    funcs = [potential.value, potential.r_dv]
    if ell:
        funcs.append(lambda r: cent / r**2)
    mats = _multiplicative(funcs, grid, method)
    centrifugal = mats[2] if ell else np.zeros((grid.n_points, grid.n_points))
    return RadialHamiltonian(
        grid=grid,
        kinetic=kinetic,
        potential=potential,
        ell=ell,
        method=method,
        hbar=hbar,
        radial_p2=hbar**2 * q**2,
        centrifugal=centrifugal,
        v_matrix=mats[0],
        r_dv_matrix=mats[1],
    )


@dataclass
class SpectralSolution:
    """Lowest eigenpairs.  ``coefficients[:, n]`` is state ``n`` in the sine basis."""

    hamiltonian: RadialHamiltonian | None
    eigenvalues: np.ndarray
    coefficients: np.ndarray

    @property
    def k(self) -> int:
        return len(self.eigenvalues)

    @property
    def grid(self) -> RadialGrid:
        return self.hamiltonian.grid

    @property
    def ell(self) -> int:
        return self.hamiltonian.ell

    def wavefunctions(self) -> np.ndarray:
        """Grid values ``psi[j, n]`` with ``h * sum_j psi[j, n]**2 == 1``."""
        return scipy.fft.dst(self.coefficients, type=1, norm="ortho", axis=0) / math.sqrt(self.grid.h)


def _fix_phases(vals: np.ndarray, vecs: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Re-orthonormalise degenerate clusters and make the first significant grid value positive."""
    vecs = vecs.copy()
    scale = max(1.0, float(np.max(np.abs(vals))))
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and abs(vals[stop] - vals[start]) <= tol * scale:
            stop += 1
        if stop - start > 1:
            vecs[:, start:stop], _ = np.linalg.qr(vecs[:, start:stop])
        start = stop
    grid_vals = scipy.fft.dst(vecs, type=1, norm="ortho", axis=0) if vecs.shape[0] > 1 else vecs
    for j in range(vecs.shape[1]):
        col = grid_vals[:, j]
        idx = int(np.argmax(np.abs(col) > 1e-6 * np.max(np.abs(col))))
        if col[idx] < 0:
            vecs[:, j] = -vecs[:, j]
    return vecs


def solve(hamiltonian: RadialHamiltonian | np.ndarray, k: int, residual_tol: float = 1e-8) -> SpectralSolution:
    """Lowest ``k`` eigenpairs by dense symmetric diagonalisation."""
    mat = hamiltonian.matrix if isinstance(hamiltonian, RadialHamiltonian) else np.asarray(hamiltonian, dtype=float)
    n = mat.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in 1..{n}")
    try:
        vals, vecs = scipy.linalg.eigh(mat, subset_by_index=[0, k - 1], driver="evr")
    except (np.linalg.LinAlgError, ValueError) as exc:
        raise ConvergenceFailure(f"eigensolver failed: {exc}", {"n": n, "k": k}) from exc
    vecs = _fix_phases(vals, vecs)
    res = np.linalg.norm(mat @ vecs - vecs * vals, axis=0)
    mat_norm = hamiltonian.norm if isinstance(hamiltonian, RadialHamiltonian) else float(np.abs(mat).sum(axis=1).max())
    if np.any(res > residual_tol * max(mat_norm, 1.0)):
        raise ConvergenceFailure(
            "eigenpair residual above tolerance",
            {"residuals": res.tolist(), "norm": mat_norm, "tolerance": residual_tol},
        )
    return SpectralSolution(hamiltonian if isinstance(hamiltonian, RadialHamiltonian) else None, vals, vecs)


def _matrix_element(sol: SpectralSolution, op: np.ndarray, n: int, m: int) -> float:
    if not (0 <= n < sol.k and 0 <= m < sol.k):
        raise IndexError("state index out of range")
    return float(sol.coefficients[:, n] @ op @ sol.coefficients[:, m])


def expectation(sol: SpectralSolution, n: int, observable: str) -> float:
    """``<n|O|n>`` for ``O`` in ``T``, ``V``, ``p_dT``, ``r_dV``."""
    if observable not in OBSERVABLES:
        raise UnknownObservable(observable)
    return _matrix_element(sol, sol.hamiltonian.operator(observable), n, n)


def virial_residual(sol: SpectralSolution, n: int) -> float:
    """``<p dT/dp> - <r dV/dr>`` in state ``n``."""
    return expectation(sol, n, "p_dT") - expectation(sol, n, "r_dV")


def offdiag_virial(sol: SpectralSolution, n: int, m: int) -> float:
    """``<n|p dT/dp - r dV/dr|m>``."""
    ham = sol.hamiltonian
    return _matrix_element(sol, ham.p_dt_matrix - ham.r_dv_matrix, n, m)


def generator_element(sol: SpectralSolution, n: int, m: int) -> complex:
    """``<n|G|m>``; purely imaginary for real eigenvectors."""
    d = generator_matrix(sol.grid)
    return -1j * sol.hamiltonian.hbar * _matrix_element(sol, d, n, m)


def commutator_route(sol: SpectralSolution, n: int, m: int) -> float:
    """``(E_m - E_n) <n|G|m> / (i hbar)``, the same quantity as :func:`offdiag_virial`."""
    de = sol.eigenvalues[m] - sol.eigenvalues[n]
    return float((de * generator_element(sol, n, m) / (1j * sol.hamiltonian.hbar)).real)


def dilated_energy(ham: RadialHamiltonian, c: np.ndarray, lam: float) -> float:
    """``<c|T(p/lam) + V(lam r)|c>`` for a normalised coefficient vector."""
    return float(c @ (ham.kinetic_matrix(lam) + ham.potential_matrix(lam)) @ c)


def dilated_energy_derivative_of(
    ham: RadialHamiltonian, c: np.ndarray, dlam: float = 1e-3, richardson: bool = False
) -> float:
    """Central difference of ``E(lam)`` at ``lam = 1``.

    The plain difference carries an ``O(dlam^2)`` bias; ``richardson=True``
    combines steps ``dlam`` and ``dlam/2`` to cancel it.
    """
    if not 0 < dlam <= 1e-2:
        raise ValueError("dlam must be in (0, 1e-2]")

    def central(d):
        return (dilated_energy(ham, c, 1.0 + d) - dilated_energy(ham, c, 1.0 - d)) / (2.0 * d)

    if not richardson:
        return central(dlam)
    return (4.0 * central(0.5 * dlam) - central(dlam)) / 3.0


def dilated_energy_derivative(sol: SpectralSolution, n: int, dlam: float = 1e-3, richardson: bool = False) -> float:
    """``dE/dlam`` at ``lam = 1`` for eigenstate ``n``."""
    return dilated_energy_derivative_of(sol.hamiltonian, sol.coefficients[:, n], dlam, richardson)


def coefficients_from_grid(grid: RadialGrid, psi: np.ndarray) -> np.ndarray:
    """Sine coefficients of grid values, normalised so that ``h sum psi^2 = 1``."""
    c = scipy.fft.dst(np.asarray(psi, dtype=float), type=1, norm="ortho") * math.sqrt(grid.h)
    return c / np.linalg.norm(c)


def state_report(sol: SpectralSolution, n: int, dlam: float = 1e-3) -> dict:
    vals = {name: expectation(sol, n, name) for name in OBSERVABLES}
    return {
        "E": float(sol.eigenvalues[n]),
        **vals,
        "residual": vals["p_dT"] - vals["r_dV"],
        "dilation_derivative": dilated_energy_derivative(sol, n, dlam),
    }
