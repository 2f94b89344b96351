"""Two particles on a periodic ring: momentum sectors, parity and a lattice G.

Conventions
-----------
Sites ``x = 0..M-1`` with spacing ``delta``; the full-space basis vector
``|x1, x2>`` has flat index ``x1 * M + x2`` and full-space vectors are often
handled as ``(M, M)`` arrays ``psi[x1, x2]``.

Ring momenta are ``p_q = 2 pi hbar q / (M delta)`` for the centred integers
``q in [-M/2, M/2)``.  The total momentum ``P`` is the generator of the
one-site translation ``T1 |x1, x2> = |x1 + 1, x2 + 1>``.  It is diagonal in
``(q1, q2)`` with the centred value of ``q1 + q2 (mod M)``, so
``U(d) = exp(-i d delta P / hbar)`` equals ``T1**d`` exactly.

Sector ``K = p_kappa`` uses the relative-coordinate basis
``|K; r> = M**-0.5 sum_s exp(2 pi i kappa s / M) |s, s + r>``.  Parity is the
site inversion ``x -> -x`` of both particles and acts as ``r -> -r`` on the
sectors ``kappa = 0`` and ``kappa = -M/2``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp

MIN_SITES = 8
MAX_SITES = 4096


class ConvergenceFailure(RuntimeError):
    pass


class SeamContamination(RuntimeWarning):
    """Bound-state amplitude reaches the sawtooth seam."""


def centred(idx, m: int):
    """Map integers mod ``m`` to ``[-m/2, m/2)``."""
    return ((np.asarray(idx) + m // 2) % m) - m // 2


@dataclass(frozen=True)
class Interaction:
    """Pair interaction ``v(d)`` of the physical minimal ring distance ``|d|``.

    Families: ``free``, ``contact`` (``-depth`` at ``d = 0``),
    ``square_well`` (``-depth`` for ``|d| <= half_width``) and
    ``gaussian_well`` (``-depth * exp(-(d / width)**2)``).
    """

    family: str = "free"
    depth: float = 0.0
    width: float = 1.0

    def __post_init__(self):
        if self.family not in ("free", "contact", "square_well", "gaussian_well"):
            raise ValueError(f"unknown interaction family {self.family!r}")
        if self.width <= 0:
            raise ValueError("width must be positive")

    def values(self, d_sites: np.ndarray, delta: float) -> np.ndarray:
        d = np.abs(np.asarray(d_sites, dtype=float)) * delta
        if self.family == "free":
            return np.zeros_like(d)
        if self.family == "contact":
            return np.where(d == 0, -self.depth, 0.0)
        if self.family == "square_well":
            return np.where(d <= self.width + 1e-12 * delta, -self.depth, 0.0)
        return -self.depth * np.exp(-((d / self.width) ** 2))

    def to_dict(self) -> dict:
        return {"family": self.family, "depth": self.depth, "width": self.width}


@dataclass(frozen=True)
class LatticeSystem:
    n_sites: int
    spacing: float = 1.0
    masses: tuple[float, float] = (1.0, 1.0)
    interaction: Interaction = field(default_factory=Interaction)
    dispersion: str = "nonrelativistic"
    c: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        m = self.n_sites
        if m % 2 or not MIN_SITES <= m <= MAX_SITES:
            raise ValueError(f"n_sites must be even and in [{MIN_SITES}, {MAX_SITES}]")
        if self.spacing <= 0:
            raise ValueError("spacing must be positive")
        object.__setattr__(self, "masses", tuple(float(x) for x in self.masses))
        if len(self.masses) != 2 or min(self.masses) <= 0:
            raise ValueError("two positive masses required")
        if self.dispersion not in ("nonrelativistic", "salpeter"):
            raise ValueError("dispersion must be 'nonrelativistic' or 'salpeter'")

    @property
    def length(self) -> float:
        return self.n_sites * self.spacing

    @property
    def mode_index(self) -> np.ndarray:
        """Centred mode integer ``q`` for FFT position ``j``."""
        return centred(np.arange(self.n_sites), self.n_sites)

    @property
    def momenta(self) -> np.ndarray:
        """``p_q`` in FFT order."""
        return 2 * math.pi * self.hbar * self.mode_index / self.length

    def momentum_of(self, kappa: int) -> float:
        return 2 * math.pi * self.hbar * int(centred(kappa, self.n_sites)) / self.length

    def epsilon(self, p: np.ndarray, particle: int) -> np.ndarray:
        m = self.masses[particle]
        if self.dispersion == "nonrelativistic":
            return p**2 / (2 * m)
        rest = m * self.c**2
        return np.sqrt((p * self.c) ** 2 + rest**2) - rest

    def kinetic_column(self, particle: int) -> np.ndarray:
        """First column of the circulant one-particle kinetic matrix.

        Symmetrised so that the matrix is exactly real, symmetric and
        parity invariant in floating point.
        """
        col = np.fft.ifft(self.epsilon(self.momenta, particle)).real
        return 0.5 * (col + col[(-np.arange(self.n_sites)) % self.n_sites])

    def kinetic_matrix(self, particle: int) -> np.ndarray:
        col = self.kinetic_column(particle)
        idx = np.arange(self.n_sites)
        return col[(idx[:, None] - idx[None, :]) % self.n_sites]

    def pair_potential(self) -> np.ndarray:
        """``v`` indexed by the relative site ``r = x2 - x1 (mod M)``."""
        return self.interaction.values(centred(np.arange(self.n_sites), self.n_sites), self.spacing)


# -- full-space operators -----------------------------------------------------------


@dataclass
class LatticeHamiltonian:
    system: LatticeSystem
    matrix: sp.csr_matrix
    translation: sp.csr_matrix
    parity: sp.csr_matrix

    def commutator_norms(self) -> dict:
        h = self.matrix
        out = {}
        for name, u in (("translation", self.translation), ("parity", self.parity)):
            c = (h @ u - u @ h).tocoo()
            out[name] = float(np.max(np.abs(c.data))) if c.nnz else 0.0
        return out

    @property
    def norm(self) -> float:
        return float(abs(self.matrix).sum(axis=1).max())


def _site_permutation(m: int, mapping) -> sp.csr_matrix:
    x1, x2 = np.divmod(np.arange(m * m), m)
    y1, y2 = mapping(x1), mapping(x2)
    rows = y1 * m + y2
    return sp.csr_matrix((np.ones(m * m), (rows, np.arange(m * m))), shape=(m * m, m * m))


def build_lattice(system: LatticeSystem) -> LatticeHamiltonian:
    """Full ``M^2``-dimensional Hamiltonian plus translation and parity."""
    m = system.n_sites
    eye = sp.identity(m, format="csr")
    t1 = sp.csr_matrix(system.kinetic_matrix(0))
    t2 = sp.csr_matrix(system.kinetic_matrix(1))
    x1, x2 = np.divmod(np.arange(m * m), m)
    v = system.pair_potential()[(x2 - x1) % m]
    h = (sp.kron(t1, eye) + sp.kron(eye, t2) + sp.diags(v)).tocsr()
    return LatticeHamiltonian(
        system,
        h,
        _site_permutation(m, lambda x: (x + 1) % m),
        _site_permutation(m, lambda x: (-x) % m),
    )


def apply_hamiltonian(system: LatticeSystem, psi: np.ndarray) -> np.ndarray:
    """``H psi`` for ``psi`` of shape ``(M, M)`` (or ``(M, M, k)``)."""
    m = system.n_sites
    t1 = system.kinetic_matrix(0)
    t2 = system.kinetic_matrix(1)
    x = np.arange(m)
    v = system.pair_potential()[(x[None, :] - x[:, None]) % m]
    out = np.einsum("ab,b...->a...", t1, psi) + np.einsum("ab,xb...->xa...", t2, psi)
    return out + (v.reshape(m, m, *([1] * (psi.ndim - 2)))) * psi


def total_momentum_values(system: LatticeSystem) -> np.ndarray:
    """``P`` on the ``(q1, q2)`` FFT grid: centred value of ``q1 + q2``."""
    q = system.mode_index
    tot = centred(q[:, None] + q[None, :], system.n_sites)
    return 2 * math.pi * system.hbar * tot / system.length


def apply_function_of_P(system: LatticeSystem, fvals: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """Apply the operator with values ``fvals[q1, q2]`` (FFT grid) to ``psi[x1, x2, ...]``."""
    spec = np.fft.fft2(psi, axes=(0, 1))
    spec *= fvals.reshape(fvals.shape + (1,) * (psi.ndim - 2))
    return np.fft.ifft2(spec, axes=(0, 1))


# -- sectors ------------------------------------------------------------------------


@dataclass(frozen=True)
class SectorLabel:
    kappa: int  # centred ring index of K
    K: float
    omega: int | None  # parity, only on kappa = 0 and kappa = -M/2
    energy_index: int


@dataclass
class Sector:
    kappa: int
    K: float
    omega: int | None
    energies: np.ndarray
    vectors: np.ndarray  # relative-basis amplitudes phi[r, n]

    def label(self, n: int) -> SectorLabel:
        return SectorLabel(self.kappa, self.K, self.omega, n)


def relative_block(system: LatticeSystem, kappa: int) -> np.ndarray:
    """``<K; r'|H|K; r>`` in the relative-coordinate basis."""
    m = system.n_sites
    r = np.arange(m)
    diff = (r[None, :] - r[:, None]) % m  # r - r'
    c1 = system.kinetic_column(0)
    c2 = system.kinetic_column(1)
    phase = np.exp(-2j * math.pi * kappa * diff / m)
    block = phase * c1[diff] + c2[(-diff) % m] + np.diag(system.pair_potential())
    return 0.5 * (block + block.conj().T)


def parity_bases(m: int) -> dict[int, np.ndarray]:
    """Orthonormal columns spanning the even and odd subspaces of ``r -> -r``."""
    even, odd = [], []
    for r in range(m // 2 + 1):
        partner = (-r) % m
        e = np.zeros(m)
        if partner == r:
            e[r] = 1.0
            even.append(e)
            continue
        e[r] = e[partner] = 1 / math.sqrt(2)
        o = np.zeros(m)
        o[r], o[partner] = 1 / math.sqrt(2), -1 / math.sqrt(2)
        even.append(e)
        odd.append(o)
    return {1: np.array(even).T, -1: np.array(odd).T}


def _fix_phase(vecs: np.ndarray) -> np.ndarray:
    out = vecs.copy()
    for j in range(out.shape[1]):
        col = out[:, j]
        idx = int(np.argmax(np.abs(col) > 1e-8 * np.max(np.abs(col))))
        out[:, j] = col * (abs(col[idx]) / col[idx])
    return out


@dataclass
class SectorEigenbasis:
    system: LatticeSystem
    sectors: list[Sector]

    def sector(self, kappa: int, omega: int | None = None) -> Sector:
        kappa = int(centred(kappa, self.system.n_sites))
        for s in self.sectors:
            if s.kappa == kappa and s.omega == omega:
                return s
        raise KeyError((kappa, omega))

    def dimension(self) -> int:
        return sum(s.vectors.shape[1] for s in self.sectors)

    def embed(self, sector: Sector, columns=None) -> np.ndarray:
        """Full-space arrays ``psi[x1, x2, n]`` for the chosen eigenvectors."""
        m = self.system.n_sites
        phi = sector.vectors if columns is None else sector.vectors[:, columns]
        s = np.arange(m)
        x2 = np.arange(m)
        rel = (x2[None, :] - s[:, None]) % m
        phase = np.exp(2j * math.pi * sector.kappa * s / m) / math.sqrt(m)
        return phase[:, None, None] * phi[rel, :]

    def states(self, selection: list[tuple[int, int | None, int]]):
        """Labels and stacked full-space vectors (``M^2 x n``) for ``(kappa, omega, index)`` triples."""
        labels, cols = [], []
        for kappa, omega, idx in selection:
            sec = self.sector(kappa, omega)
            labels.append(sec.label(idx))
            cols.append(self.embed(sec, [idx])[:, :, 0].reshape(-1))
        return labels, np.array(cols).T


def block_diagonalize(system: LatticeSystem, kappas=None, resolve_parity: bool = True) -> SectorEigenbasis:
    """Diagonalise every requested momentum sector (all by default)."""
    m = system.n_sites
    if kappas is None:
        kappas = range(-m // 2, m // 2)
    pb = parity_bases(m) if resolve_parity else None
    sectors = []
    for kappa in kappas:
        kappa = int(centred(kappa, m))
        block = relative_block(system, kappa)
        big_k = system.momentum_of(kappa)
        parts = [(None, np.eye(m))]
        if resolve_parity and kappa in (0, -m // 2):
            parts = [(1, pb[1]), (-1, pb[-1])]
        for omega, q in parts:
            sub = q.conj().T @ block @ q
            try:
                vals, vecs = scipy.linalg.eigh(sub)
            except np.linalg.LinAlgError as exc:
                raise ConvergenceFailure(f"sector kappa={kappa} omega={omega}: {exc}") from exc
            sectors.append(Sector(kappa, big_k, omega, vals, _fix_phase(q @ vecs)))
    return SectorEigenbasis(system, sectors)


# -- matrix-element checks ------------------------------------------------------------


def translation_matrix_elements(basis: SectorEigenbasis, selection, d: int) -> tuple[np.ndarray, np.ndarray]:
    """``<n|U(d)|m>`` by shifting both coordinates, and the expected phases.

    ``U(d)`` moves both particles ``d`` sites forward; on sector ``K`` it
    multiplies by ``exp(-i K d delta / hbar)``.
    """
    sys_ = basis.system
    m = sys_.n_sites
    labels, vecs = basis.states(selection)
    arr = vecs.reshape(m, m, -1)
    shifted = np.roll(arr, shift=(d, d), axis=(0, 1)).reshape(m * m, -1)
    got = vecs.conj().T @ shifted
    expected = np.diag([np.exp(-1j * lab.K * d * sys_.spacing / sys_.hbar) for lab in labels])
    return got, expected


def power_series_elements(basis: SectorEigenbasis, selection, coeffs) -> np.ndarray:
    """``<n|f(P)|m>`` with ``f(P) = sum_k coeffs[k] P^k``, applying ``P`` repeatedly."""
    sys_ = basis.system
    m = sys_.n_sites
    _, vecs = basis.states(selection)
    pvals = total_momentum_values(sys_)
    term = vecs.reshape(m, m, -1).astype(complex)
    acc = np.zeros_like(term)
    for k, c in enumerate(coeffs):
        if k:
            term = apply_function_of_P(sys_, pvals, term)
        if c:
            acc = acc + c * term
    return vecs.conj().T @ acc.reshape(m * m, -1)


def p_monomial_elements(basis: SectorEigenbasis, selection, r: int) -> np.ndarray:
    """``<n|P^r|m>``."""
    if r < 1:
        raise ValueError("r must be >= 1")
    return power_series_elements(basis, selection, [0] * r + [1])


@dataclass(frozen=True)
class GaussianFilter:
    """``phi_a(P, K) = exp(-(P - K)^2 / (4 a^2)) / (2 a sqrt(pi))``."""

    a: float
    K: float = 0.0

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError("a must be positive")

    def __call__(self, p):
        return np.exp(-((np.asarray(p) - self.K) ** 2) / (4 * self.a**2)) / (2 * self.a * math.sqrt(math.pi))

    def closed_form(self, k_state: float = 0.0) -> float:
        return float(self(k_state))


def gaussian_filter_elements(basis: SectorEigenbasis, selection, filt: GaussianFilter) -> np.ndarray:
    sys_ = basis.system
    m = sys_.n_sites
    _, vecs = basis.states(selection)
    out = apply_function_of_P(sys_, filt(total_momentum_values(sys_)), vecs.reshape(m, m, -1))
    return vecs.conj().T @ out.reshape(m * m, -1)


def delta_representation_check(system: LatticeSystem, kappa: int, full_matrix: bool | None = None) -> float:
    """Max difference between two constructions of the sector projector.

    (i) spectral: sum of ``|q1, q2><q1, q2|`` over ``q1 + q2 = kappa (mod M)``;
    (ii) position formula: ``(1/M) exp(i K (x2 - x2') / hbar)`` times the
    Kronecker delta ``x1 - x1' = x2 - x2' (mod M)``.
    For small rings the full ``M^2 x M^2`` matrices are compared; otherwise the
    translation-invariant kernels over ``(x1 - x1', x2 - x2')``.
    """
    m = system.n_sites
    q = system.mode_index
    mask = (centred(q[:, None] + q[None, :] - kappa, m) == 0).astype(float)
    a = np.arange(m)
    theta = 2 * math.pi * kappa / m
    if full_matrix is None:
        full_matrix = m <= 32
    if full_matrix:
        f = np.exp(2j * math.pi * np.outer(a, a) / m) / math.sqrt(m)
        f2 = np.kron(f, f)
        spectral = (f2 * mask.reshape(-1)) @ f2.conj().T
        x1, x2 = np.divmod(np.arange(m * m), m)
        da = (x1[:, None] - x1[None, :]) % m
        db = (x2[:, None] - x2[None, :]) % m
        closed = np.where(da == db, np.exp(1j * theta * db) / m, 0.0)
        return float(np.max(np.abs(spectral - closed)))
    spectral = np.fft.ifft2(mask)
    closed = np.where(a[:, None] == a[None, :], np.exp(1j * theta * a[None, :]) / m, 0.0)
    return float(np.max(np.abs(spectral - closed)))


# -- lattice G --------------------------------------------------------------------------


def sawtooth(system: LatticeSystem) -> np.ndarray:
    """Centred single-branch coordinate, values in ``[-L/2, L/2)``; the seam is at site ``M/2``."""
    return centred(np.arange(system.n_sites), system.n_sites) * system.spacing


def single_particle_G(system: LatticeSystem) -> np.ndarray:
    """``(x p + p x) / 2`` for one particle, with ``p`` Fourier diagonal."""
    m = system.n_sites
    f = np.exp(2j * math.pi * np.outer(np.arange(m), np.arange(m)) / m) / math.sqrt(m)
    p = (f * system.momenta) @ f.conj().T
    x = np.diag(sawtooth(system))
    return 0.5 * (x @ p + p @ x)


def apply_G(system: LatticeSystem, psi: np.ndarray) -> np.ndarray:
    g = single_particle_G(system)
    return np.einsum("ab,b...->a...", g, psi) + np.einsum("ab,xb...->xa...", g, psi)


@dataclass
class GReport:
    labels: list[SectorLabel]
    energies: np.ndarray
    g: np.ndarray  # <n|G|m>
    commutator: np.ndarray  # <n|[G,H]|m>
    seam_ratio: np.ndarray  # |phi(M/2)| / max|phi| per state
    hamiltonian_norm: float

    @property
    def identity_residual(self) -> float:
        """``max |<n|[G,H]|m> - (E_m - E_n) <n|G|m>|``."""
        de = self.energies[None, :] - self.energies[:, None]
        return float(np.max(np.abs(self.commutator - de * self.g)))

    def cross_parity_max(self) -> float:
        om = np.array([lab.omega for lab in self.labels])
        mask = om[:, None] != om[None, :]
        return float(np.max(np.abs(self.g[mask]))) if mask.any() else 0.0

    def pair(self, n: int, m: int) -> complex:
        return complex(self.commutator[n, m])


def seam_ratio(basis: SectorEigenbasis, omega: int, index: int) -> float:
    """``|phi(M/2)| / max |phi|`` for a K=0 state; the relative seam sits opposite the well."""
    phi = basis.sector(0, omega).vectors[:, index]
    return float(abs(phi[basis.system.n_sites // 2]) / np.max(np.abs(phi)))


def bound_state_selection(basis: SectorEigenbasis, threshold: float = 0.0, seam_tol: float | None = None):
    """``(0, omega, index)`` triples of K=0 states below ``threshold``, ordered by energy.

    With ``seam_tol`` set, states whose seam ratio exceeds it are left out.
    """
    sel = []
    for omega in (1, -1):
        sec = basis.sector(0, omega)
        sel += [
            (0, omega, i)
            for i, e in enumerate(sec.energies)
            if e < threshold and (seam_tol is None or seam_ratio(basis, omega, i) <= seam_tol)
        ]
    sel.sort(key=lambda t: basis.sector(0, t[1]).energies[t[2]])
    return sel


def lattice_G_elements(basis: SectorEigenbasis, selection=None, seam_tol: float = 1e-6) -> GReport:
    """``<n|G|m>`` and ``<n|[G,H]|m>`` over K=0 states (bound states by default)."""
    sys_ = basis.system
    m = sys_.n_sites
    if selection is None:
        selection = bound_state_selection(basis)
    if any(k != 0 for k, _, _ in selection):
        raise ValueError("lattice G elements are defined on the K=0 sector")
    labels, vecs = basis.states(selection)
    energies = np.array([basis.sector(0, lab.omega).energies[lab.energy_index] for lab in labels])
    psi = vecs.reshape(m, m, -1)
    g_psi = apply_G(sys_, psi)
    h_psi = apply_hamiltonian(sys_, psi)
    gh = apply_G(sys_, h_psi)
    hg = apply_hamiltonian(sys_, g_psi)
    flat = lambda a: a.reshape(m * m, -1)  # noqa: E731
    g = vecs.conj().T @ flat(g_psi)
    comm = vecs.conj().T @ flat(gh - hg)
    seam = np.array([seam_ratio(basis, lab.omega, lab.energy_index) for lab in labels])
    if np.any(seam > seam_tol):
        warnings.warn(
            f"bound-state amplitude at the seam reaches {seam.max():.2e} of its maximum",
            SeamContamination,
            stacklevel=2,
        )
    return GReport(labels, energies, g, comm, seam, build_norm(sys_))


def build_norm(system: LatticeSystem) -> float:
    """Max row sum of ``H`` without assembling it."""
    c1 = np.abs(system.kinetic_column(0)).sum()
    c2 = np.abs(system.kinetic_column(1)).sum()
    return float(c1 + c2 + np.abs(system.pair_potential()).max())
