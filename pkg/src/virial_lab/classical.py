"""Classical virial laboratory: velocity-Verlet trajectories and time averages.

Particles move independently in a shared central potential.  Along a
trajectory the quantity ``G = sum r.p`` obeys ``dG/dt = 2T + sum r.F``, so
``2<T> + <r.F> = [G(tau) - G(0)] / tau`` holds for any time window and
the right side goes to zero for bounded motion.
"""

from __future__ import annotations

import csv
import json
import math
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from .potentials import Coulomb, Harmonic, PotentialSpec


class NonFiniteState(FloatingPointError):
    """Integration produced NaN/inf or fell into the Coulomb core."""


class EnergyDriftWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class ClassicalSystem:
    masses: tuple[float, ...]
    potential: PotentialSpec
    dims: int = 3
    r_min: float = 1e-6

    def __post_init__(self):
        object.__setattr__(self, "masses", tuple(float(m) for m in self.masses))
        if not self.masses or any(m <= 0 for m in self.masses):
            raise ValueError("masses must be positive")
        if self.dims not in (1, 2, 3):
            raise ValueError("dims must be 1, 2 or 3")

    @property
    def n_particles(self) -> int:
        return len(self.masses)

    @property
    def size(self) -> int:
        return self.n_particles * self.dims

    def _inv_mass(self) -> np.ndarray:
        return np.repeat(1.0 / np.asarray(self.masses), self.dims)

    def force(self, q: np.ndarray) -> np.ndarray:
        pos = q.reshape(self.n_particles, self.dims)
        return -self.potential.gradient(pos).reshape(-1)

    def kinetic(self, p: np.ndarray) -> np.ndarray:
        """Kinetic energy; ``p`` may carry leading sample axes."""
        return 0.5 * np.sum(p * p * self._inv_mass(), axis=-1)

    def radii(self, q: np.ndarray) -> np.ndarray:
        return np.linalg.norm(q.reshape(*q.shape[:-1], self.n_particles, self.dims), axis=-1)

    def potential_energy(self, q: np.ndarray) -> np.ndarray:
        return np.sum(self.potential.value(self.radii(q)), axis=-1)

    def r_dot_force(self, q: np.ndarray) -> np.ndarray:
        return -np.sum(self.potential.r_dv(self.radii(q)), axis=-1)


@dataclass(frozen=True)
class TrajectoryState:
    positions: np.ndarray
    momenta: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        q = np.array(self.positions, dtype=float).reshape(-1)
        p = np.array(self.momenta, dtype=float).reshape(-1)
        if q.shape != p.shape:
            raise ValueError("positions and momenta must have equal length")
        if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
            raise NonFiniteState("state has non-finite entries")
        object.__setattr__(self, "positions", q)
        object.__setattr__(self, "momenta", p)


@dataclass
class Trajectory:
    """Stored samples of one integration run."""

    system: ClassicalSystem
    times: np.ndarray
    positions: np.ndarray
    momenta: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def head(self, n: int) -> "Trajectory":
        return Trajectory(self.system, self.times[:n], self.positions[:n], self.momenta[:n])

    def state(self, idx: int) -> TrajectoryState:
        return TrajectoryState(self.positions[idx], self.momenta[idx], float(self.times[idx]))

    def energies(self) -> np.ndarray:
        return self.system.kinetic(self.momenta) + self.system.potential_energy(self.positions)

    def write_csv(self, path) -> None:
        n = self.system.size
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t"] + [f"q{j}" for j in range(n)] + [f"p{j}" for j in range(n)])
            for t, q, p in zip(self.times, self.positions, self.momenta):
                w.writerow([repr(float(t))] + [repr(float(v)) for v in q] + [repr(float(v)) for v in p])


def integrate(
    system: ClassicalSystem,
    state0: TrajectoryState,
    dt: float,
    steps: int,
    stride: int = 1,
    drift_bound: float = 1e-3,
) -> Trajectory:
    """Fixed-step velocity Verlet.  Every ``stride``-th state is stored, plus the last one."""
    if dt <= 0 or steps < 1 or stride < 1:
        raise ValueError("need dt > 0, steps >= 1 and stride >= 1")
    if state0.positions.size != system.size:
        raise ValueError("state size does not match the system")
    inv_m = system._inv_mass()
    q = state0.positions.copy()
    p = state0.momenta.copy()
    f = system.force(q)
    keep = list(range(0, steps + 1, stride))
    if keep[-1] != steps:
        keep.append(steps)
    times = state0.time + dt * np.asarray(keep, dtype=float)
    qs = np.empty((len(keep), q.size))
    ps = np.empty((len(keep), q.size))
    qs[0], ps[0] = q, p
    slot = 1
    half = 0.5 * dt
    check_core = system.potential.degree is not None and system.potential.degree < 0
    for step in range(1, steps + 1):
        p += half * f
        q += dt * inv_m * p
        f = system.force(q)
        p += half * f
        if check_core and np.min(system.radii(q)) < system.r_min:
            raise NonFiniteState(f"particle entered r < {system.r_min} at step {step}")
        if slot < len(keep) and keep[slot] == step:
            if not (np.all(np.isfinite(q)) and np.all(np.isfinite(p))):
                raise NonFiniteState(f"non-finite state at step {step}; reduce dt")
            qs[slot], ps[slot] = q, p
            slot += 1
    traj = Trajectory(system, times, qs, ps)
    e = traj.energies()
    scale = abs(e[0]) if e[0] != 0 else 1.0
    drift = float(np.max(np.abs(e - e[0])) / scale)
    if drift > drift_bound:
        warnings.warn(f"relative energy drift {drift:.3g} exceeds {drift_bound:g}", EnergyDriftWarning, stacklevel=2)
    return traj


@dataclass(frozen=True)
class TimeAverageReport:
    mean_T: float
    mean_virial: float
    mean_V: float
    G_start: float
    G_end: float
    tau: float
    residual: float
    energy_drift: float

    @property
    def boundedness(self) -> float:
        """``[G(tau) - G(0)] / tau``."""
        return (self.G_end - self.G_start) / self.tau

    def to_dict(self) -> dict:
        d = asdict(self)
        d["boundedness"] = self.boundedness
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _g_value(q: np.ndarray, p: np.ndarray) -> float:
    return float(np.dot(q, p))


def time_average_virial(traj: Trajectory) -> TimeAverageReport:
    """Trapezoidal time averages of T, V and r.F over the stored samples."""
    if len(traj) < 2:
        raise ValueError("trajectory needs at least two samples")
    sys_ = traj.system
    t = traj.times
    tau = float(t[-1] - t[0])
    kin = sys_.kinetic(traj.momenta)
    pot = sys_.potential_energy(traj.positions)
    rf = sys_.r_dot_force(traj.positions)
    mean_t = float(np.trapezoid(kin, t) / tau)
    mean_v = float(np.trapezoid(pot, t) / tau)
    mean_rf = float(np.trapezoid(rf, t) / tau)
    g0 = _g_value(traj.positions[0], traj.momenta[0])
    g1 = _g_value(traj.positions[-1], traj.momenta[-1])
    e = kin + pot
    scale = abs(e[0]) if e[0] != 0 else 1.0
    return TimeAverageReport(
        mean_T=mean_t,
        mean_virial=-0.5 * mean_rf,
        mean_V=mean_v,
        G_start=g0,
        G_end=g1,
        tau=tau,
        residual=2.0 * mean_t + mean_rf - (g1 - g0) / tau,
        energy_drift=float(np.max(np.abs(e - e[0])) / scale),
    )


def homogeneous_check(report: TimeAverageReport, lambda_deg: float) -> float:
    """``<T> - (lambda_deg / 2) <V>``; zero for bounded motion in a homogeneous potential."""
    return report.mean_T - 0.5 * lambda_deg * report.mean_V


# -- ready-made scenarios ------------------------------------------------------------


def harmonic_setup(k: float = 1.0, mass: float = 1.0, amplitude: float = 1.0):
    """1-D oscillator released from rest; returns (system, state, period)."""
    sys_ = ClassicalSystem((mass,), Harmonic(k), dims=1)
    state = TrajectoryState([amplitude], [0.0])
    return sys_, state, 2.0 * math.pi * math.sqrt(mass / k)


def kepler_setup(eccentricity: float = 0.5, semi_major: float = 1.0, gm: float = 1.0, mass: float = 1.0):
    """Planar Kepler orbit started at pericentre; returns (system, state, period)."""
    if not 0 <= eccentricity < 1:
        raise ValueError("bound orbits need 0 <= e < 1")
    r_p = semi_major * (1.0 - eccentricity)
    v_p = math.sqrt(gm * (1.0 + eccentricity) / r_p)
    sys_ = ClassicalSystem((mass,), Coulomb(-gm * mass), dims=2)
    state = TrajectoryState([r_p, 0.0], [0.0, mass * v_p])
    return sys_, state, 2.0 * math.pi * math.sqrt(semi_major**3 / gm)


def boundedness_pair(system: ClassicalSystem, state0: TrajectoryState, dt: float, tau: float) -> tuple[float, float]:
    """Envelope ``max_{t <= T} |G(t) - G(0)| / T`` at ``T = tau`` and ``T = 2 tau``.

    The running maximum removes the dependence on where in an orbit the
    window happens to end.  For bounded motion it halves when the window
    doubles; for escaping motion it does not.
    """
    steps = int(round(2 * tau / dt))
    mid = steps // 2
    traj = integrate(system, state0, dt, steps)
    g = np.einsum("ij,ij->i", traj.positions, traj.momenta)
    dev = np.maximum.accumulate(np.abs(g - g[0]))
    t = traj.times - traj.times[0]
    return float(dev[mid] / t[mid]), float(dev[steps] / t[steps])
