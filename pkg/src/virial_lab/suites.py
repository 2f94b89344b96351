"""Verification suites.  Each returns a list of :class:`CheckRecord`."""

from __future__ import annotations

import csv
import math
import random
from contextlib import contextmanager
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import scipy.special

from . import classical, spectral, symmetry
from .dilation import (
    GeneratorSpec,
    HamiltonianSpec,
    build_G,
    build_Lx,
    build_Ly,
    build_Lz,
    directional_derivative,
    p_monomial,
    p_monomial_commutator,
    random_polynomial,
    virial_commutator,
)
from .opalg import Kind, commutator, i_hbar, parse, scale
from .potentials import PowerLaw
from .potentials import from_dict as potential_from_dict
from .report import CheckRecord


class SuiteError(RuntimeError):
    """A module raised while computing a check; ``check_id`` names where."""

    def __init__(self, check_id: str, cause: Exception):
        super().__init__(f"[{check_id}] {type(cause).__name__}: {cause}")
        self.check_id = check_id


@contextmanager
def _annotate(check_id: str):
    try:
        yield
    except SuiteError:
        raise
    except Exception as exc:  # noqa: BLE001
        raise SuiteError(check_id, exc) from exc

# -- symbolic -----------------------------------------------------------------------


def symbolic_suite(cfg: dict) -> list[CheckRecord]:
    rng = random.Random(cfg["seed"])
    fails = {"momentum_euler": 0, "position_euler": 0, "hamiltonian": 0}
    for _ in range(cfg["cases"]):
        n = rng.randint(1, cfg["max_particles"])
        dims = rng.choice((1, 3))
        g = build_G(GeneratorSpec(n, dims))
        f = random_polynomial(rng, Kind.MOMENTUM, n, dims, cfg["max_degree"])
        v = random_polynomial(rng, Kind.POSITION, n, dims, cfg["max_degree"])
        if commutator(g, f) != scale(i_hbar(), directional_derivative(f, Kind.MOMENTUM)):
            fails["momentum_euler"] += 1
        if commutator(g, v) != -scale(i_hbar(), directional_derivative(v, Kind.POSITION)):
            fails["position_euler"] += 1
        h = HamiltonianSpec(f, v)
        if virial_commutator(h) != commutator(g, h.hamiltonian):
            fails["hamiltonian"] += 1
    inputs = dict(cfg)
    out = [
        CheckRecord("symbolic.G_f_of_p", "[G, f(p)] = i hbar p.df/dp", fails["momentum_euler"], 0, inputs),
        CheckRecord("symbolic.G_f_of_r", "[G, f(r)] = -i hbar r.df/dr", fails["position_euler"], 0, inputs),
        CheckRecord("symbolic.G_H_virial", "[G, T + V + K] = i hbar (p.dT/dp - r.dV/dr)", fails["hamiltonian"], 0, inputs),
    ]
    bad = 0
    for n in (1, 2, 3):
        spec = GeneratorSpec(n, 3)
        for r in range(1, cfg["max_p_monomial"] + 1):
            axes = [rng.randint(1, 3) for _ in range(r)]
            if p_monomial_commutator(axes, spec) != scale(i_hbar() * r, p_monomial(axes, n)):
                bad += 1
    out.append(CheckRecord("symbolic.G_P_monomial", "[G, P^r] = i hbar r P^r", bad, 0, {"max_r": cfg["max_p_monomial"]}))
    bad = 0
    for n in (1, 2, 3):
        spec = GeneratorSpec(n, 3)
        g = build_G(spec)
        bad += sum(not commutator(g, build(spec)).is_zero() for build in (build_Lx, build_Ly, build_Lz))
    out.append(CheckRecord("symbolic.G_L", "[G, L] = 0", bad, 0, {"particles": [1, 2, 3]}))
    macros = {"G": build_G(GeneratorSpec(1, 3))}
    for cid, a, b, want in (
        ("symbolic.ccr", "x[1,1]", "p[1,1]", "(i*hbar)"),
        ("symbolic.G_p", "G", "p[1,1]", "(i*hbar)*p[1,1]"),
        ("symbolic.x_x", "x[1,1]", "x[2,1]", "0"),
    ):
        got = str(commutator(parse(a, macros=macros), parse(b, macros=macros)))
        out.append(CheckRecord(cid, f"[{a}, {b}] = {want}", got, None, {"a": a, "b": b}, passed=got == want))
    return out


# -- classical ----------------------------------------------------------------------


def _quartic_setup():
    """1-D ``V = x^4`` from rest at ``x = 1``; period from the Beta integral."""
    sys_ = classical.ClassicalSystem((1.0,), PowerLaw(1.0, 4), dims=1)
    period = scipy.special.beta(0.25, 0.5) / math.sqrt(2.0)
    return sys_, classical.TrajectoryState([1.0], [0.0]), period


def classical_suite(cfg: dict, csv_dir: Path | None = None) -> list[CheckRecord]:
    tol = cfg["tolerances"]
    out = []
    scenarios = {
        "harmonic": (classical.harmonic_setup(), cfg["harmonic_steps_per_period"], 2),
        "kepler": (classical.kepler_setup(cfg["eccentricity"]), cfg["kepler_steps_per_period"], -1),
        "quartic": (_quartic_setup(), cfg["harmonic_steps_per_period"], 4),
    }
    for name, ((sys_, st, period), spp, deg) in scenarios.items():
        periods = cfg["periods"] if name != "quartic" else max(1, cfg["periods"] // 2)
        traj = classical.integrate(sys_, st, period / spp, periods * spp)
        rep = classical.time_average_virial(traj)
        e0 = float(traj.energies()[0])
        inputs = {**cfg, "scenario": name, "periods": periods, "steps_per_period": spp}
        out.append(
            CheckRecord(
                f"classical.{name}.virial",
                f"<T> = ({deg}/2) <V>",
                abs(classical.homogeneous_check(rep, deg)) / abs(e0),
                tol["virial"],
                inputs,
            )
        )
        out.append(
            CheckRecord(
                f"classical.{name}.pathwise",
                "2<T> + <r.F> = [G(tau) - G(0)] / tau",
                abs(rep.residual) / abs(e0),
                tol["pathwise"],
                inputs,
            )
        )
        if csv_dir is not None:
            traj.write_csv(csv_dir / f"trajectory_{name}.csv")
        if name == "quartic":
            continue
        d1, d2 = classical.boundedness_pair(sys_, st, period / spp, cfg["halving_tau_periods"] * period)
        ratio = d2 / d1
        out.append(
            CheckRecord(
                f"classical.{name}.halving",
                "max|G(t) - G(0)| / tau halves as tau doubles",
                ratio,
                tol["halving_slack"] / 2,
                {**inputs, "tau_periods": cfg["halving_tau_periods"]},
            )
        )
    return out


# -- spectral -----------------------------------------------------------------------


def kinetic_from_dict(d: dict):
    if d["form"] == "nonrelativistic":
        return spectral.NonRelativistic(d.get("mass", 1.0))
    return spectral.Salpeter(d.get("mass", 1.0), d.get("c", 1.0))


def _spectral_scenario(sc: dict, csv_dir: Path | None) -> list[CheckRecord]:
    grid = spectral.RadialGrid(sc["grid"]["n"], sc["grid"]["r_max"])
    kin = kinetic_from_dict(sc["kinetic"])
    pot = potential_from_dict(sc["potential"])
    tol = sc.get("tolerances", {})
    dlam = sc.get("dlam", 1e-3)
    out = []
    rows = []
    for ell in sc.get("ell", [0]):
        ham = spectral.build_hamiltonian(grid, kin, pot, ell, sc.get("method", "galerkin"))
        sol = spectral.solve(ham, sc.get("k", 1))
        for n in range(sol.k):
            st = spectral.state_report(sol, n, dlam)
            rows.append({"ell": ell, "n": n, **st})
            inputs = {**sc, "ell": ell, "state": n}
            tag = f"spectral.{sc['name']}.l{ell}.n{n}"
            if "virial" in tol:
                out.append(
                    CheckRecord(
                        f"{tag}.virial",
                        "<p.dT/dp> = <r.dV/dr>",
                        abs(st["residual"]) / abs(st["E"]),
                        tol["virial"],
                        inputs,
                    )
                )
            if "dilation" in tol:
                out.append(
                    CheckRecord(f"{tag}.dilation", "dE(lam)/dlam = 0 at lam = 1", abs(st["dilation_derivative"]), tol["dilation"], inputs)
                )
            if n == 0 and "exact_ground" in sc and "energy" in tol:
                err = abs(st["E"] - sc["exact_ground"])
                out.append(
                    CheckRecord(
                        f"{tag}.E",
                        f"ground-state energy {sc['exact_ground']:g}",
                        st["E"],
                        tol["energy"],
                        inputs,
                        passed=err <= tol["energy"],
                    )
                )
    if csv_dir is not None:
        with open(csv_dir / f"spectral_{sc['name']}.csv", "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return out


def offdiag_oracle_records(cfg: dict) -> list[CheckRecord]:
    grid = spectral.RadialGrid(cfg["n"], cfg["r_max"])
    ham = spectral.build_hamiltonian(grid, spectral.NonRelativistic(1.0), potential_from_dict({"family": "harmonic", "k": 1.0}), 0)
    pairs = [tuple(p) for p in cfg["pairs"]]
    sol = spectral.solve(ham, max(max(p) for p in pairs) + 1)
    worst = 0.0
    for n, m in pairs:
        a = spectral.offdiag_virial(sol, n, m)
        b = spectral.commutator_route(sol, n, m)
        worst = max(worst, abs(a - b) / max(abs(b), 1e-300))
    return [
        CheckRecord(
            "spectral.offdiag_oracle",
            "<n|[G,H]|m> = (E_m - E_n) <n|G|m>",
            worst,
            cfg["tolerance"],
            {**cfg, "pairs": [list(p) for p in pairs]},
        )
    ]


def spectral_suite(cfg: dict, csv_dir: Path | None = None) -> list[CheckRecord]:
    out = []
    for sc in cfg["scenarios"]:
        with _annotate(f"spectral.{sc['name']}"):
            out += _spectral_scenario(sc, csv_dir)
    with _annotate("spectral.offdiag_oracle"):
        out += offdiag_oracle_records(cfg["offdiag"])
    return out


# -- lattice ------------------------------------------------------------------------


def lattice_system(cfg: dict, m: int) -> symmetry.LatticeSystem:
    inter = cfg["interaction"]
    return symmetry.LatticeSystem(
        n_sites=m,
        spacing=cfg["length"] / m,
        masses=tuple(cfg["masses"]),
        interaction=symmetry.Interaction(inter["family"], inter.get("depth", 0.0), inter.get("width", 1.0)),
        dispersion=cfg["dispersion"],
        c=cfg["c"],
    )


# |<n|[G,H]|m>| / ||H|| below this is treated as roundoff.
ZERO_FLOOR = 1e-12


def _k0_selection(basis):
    return [(0, om, i) for om in (1, -1) for i in range(basis.sector(0, om).vectors.shape[1])]


def theorem_records(cfg: dict) -> list[CheckRecord]:
    """Cross-parity zeros, the identity gate and the refinement law for ``[G, H]``."""
    out = []
    pair_vals = {}
    for m in (cfg["M"], cfg["refined_M"]):
        sys_ = lattice_system(cfg, m)
        basis = symmetry.block_diagonalize(sys_, kappas=[0])
        # Every bound state takes part; seam contamination is warned about
        # rather than used to drop states.
        sel = symmetry.bound_state_selection(basis, 0.0)
        rep = symmetry.lattice_G_elements(basis, sel, seam_tol=cfg["seam_tolerance"])
        inputs = {**cfg, "M": m}
        out.append(CheckRecord(f"lattice.theorem.M{m}.cross_parity_G", "<n|G|m> = 0 for opposite parity", rep.cross_parity_max(), 1e-10, inputs))
        out.append(
            CheckRecord(
                f"lattice.theorem.M{m}.identity_gate",
                "<n|[G,H]|m> = (E_m - E_n) <n|G|m>",
                rep.identity_residual / rep.hamiltonian_norm,
                1e-10,
                inputs,
            )
        )
        diag = float(np.max(np.abs(np.diag(rep.commutator)))) / rep.hamiltonian_norm
        out.append(CheckRecord(f"lattice.theorem.M{m}.diagonal", "<n|[G,H]|n> = 0", diag, 1e-8, inputs))
        for a, la in enumerate(rep.labels):
            for b, lb in enumerate(rep.labels):
                if a < b and la.omega == lb.omega:
                    key = (la.omega, la.energy_index, lb.energy_index)
                    pair_vals.setdefault(key, []).append((abs(rep.commutator[a, b]), rep.hamiltonian_norm))
    pairs = {k: v for k, v in pair_vals.items() if len(v) == 2}
    if not pairs:
        out.append(CheckRecord("lattice.theorem.refinement", "within-sector [G,H] shrinks under refinement", "no bound pairs", None, cfg, passed=False))
    for (om, i, j), ((coarse, norm_c), (fine, norm_f)) in sorted(pairs.items()):
        tag = f"w{'+' if om > 0 else '-'}.{i}_{j}"
        if coarse <= ZERO_FLOOR * norm_c:
            # Vanishes to roundoff already on the coarse lattice: no decrease
            # to measure, so require that it stays at roundoff.
            out.append(
                CheckRecord(
                    f"lattice.theorem.refinement_zero.{tag}",
                    "within-sector <n|[G,H]|m> is zero at both resolutions",
                    max(coarse / norm_c, fine / norm_f),
                    ZERO_FLOOR,
                    {**cfg, "pair": [om, i, j]},
                )
            )
            continue
        ratio = coarse / fine if fine > 0 else math.inf
        out.append(
            CheckRecord(
                f"lattice.theorem.refinement.{tag}",
                "within-sector |<n|[G,H]|m>| shrinks at least 2x when M doubles",
                ratio,
                2.0,
                {**cfg, "pair": [om, i, j]},
                passed=ratio >= 2.0,
            )
        )
    return out


def lattice_suite(cfg: dict) -> list[CheckRecord]:
    m = cfg["M"]
    sys_ = lattice_system(cfg, m)
    inputs = {k: cfg[k] for k in ("M", "length", "masses", "dispersion", "c", "interaction")}
    out = []
    lat = symmetry.build_lattice(sys_)
    norms = lat.commutator_norms()
    for name, val in norms.items():
        out.append(CheckRecord(f"lattice.commute_H_{name}", f"[H, {name}] = 0", val / lat.norm, 1e-14, inputs))
    basis = symmetry.block_diagonalize(sys_)
    out.append(CheckRecord("lattice.sector_dimension", "sector dimensions sum to M^2", basis.dimension(), None, inputs, passed=basis.dimension() == m * m))
    k0 = _k0_selection(basis)
    for r in (1, 2, 3):
        val = float(np.max(np.abs(symmetry.p_monomial_elements(basis, k0, r))))
        out.append(CheckRecord(f"lattice.P_power_{r}", "<n|P^r|m> = 0 on K=0", val, 1e-12, {**inputs, "r": r}))
    # truncated cosine series cos(P) = sum (-1)^j P^(2j) / (2j)!
    coeffs = [0.0] * 9
    for j in range(5):
        coeffs[2 * j] = (-1) ** j / math.factorial(2 * j)
    fp = symmetry.power_series_elements(basis, k0, coeffs)
    out.append(
        CheckRecord("lattice.power_series", "<n|f(P)|m> = f(0) delta_nm on K=0", float(np.max(np.abs(fp - np.eye(len(k0))))), 1e-10, inputs)
    )
    worst = 0.0
    for d in (1, 5, m // 2 + 3):
        got, _ = symmetry.translation_matrix_elements(basis, k0, d)
        worst = max(worst, float(np.max(np.abs(got - np.eye(len(k0))))))
    out.append(CheckRecord("lattice.translation_invariance", "U(d)|n> = |n> on K=0", worst, 1e-10, inputs))
    scaled = []
    targets = [0.0] + [sys_.momentum_of(q) for q in (1, 3)]
    for a in cfg["gaussian_widths"]:
        err = 0.0
        for target in targets:
            filt = symmetry.GaussianFilter(a, target)
            g = symmetry.gaussian_filter_elements(basis, k0, filt)
            err = max(err, float(np.max(np.abs(g - filt.closed_form(0.0) * np.eye(len(k0))))))
            if target == 0.0:
                scaled.append(a * float(np.mean(np.diag(g).real)))
        out.append(
            CheckRecord(
                f"lattice.gaussian.a{a:g}",
                "<n|phi_a(P,K)|m> = exp(-K^2 / 4a^2) delta_nm / (2 a sqrt(pi))",
                err,
                1e-10,
                {**inputs, "a": a, "targets": targets},
            )
        )
    spread = max(scaled) - min(scaled)
    out.append(CheckRecord("lattice.gaussian.a_scaling", "a * <n|phi_a|n> constant as a -> 0", spread, 1e-10, {**inputs, "a": cfg["gaussian_widths"]}))
    worst = max(symmetry.delta_representation_check(sys_, kappa) for kappa in range(-m // 2, m // 2))
    out.append(CheckRecord("lattice.delta_representation", "two constructions of the K projector agree", worst, 1e-12, inputs))
    out += theorem_records(cfg)
    return out


# -- orchestration ------------------------------------------------------------------------

SUITES = ("symbolic", "classical", "spectral", "lattice")


def run_suites(cfg: dict, threads: int = 1, csv_dir: Path | None = None) -> list[CheckRecord]:
    selected = SUITES if cfg["suite"] == "all" else (cfg["suite"],)
    bodies = {
        "symbolic": lambda: symbolic_suite(cfg["symbolic"]),
        "classical": lambda: classical_suite(cfg["classical"], csv_dir),
        "spectral": lambda: spectral_suite(cfg["spectral"], csv_dir),
        "lattice": lambda: lattice_suite(cfg["lattice"]),
    }

    def job(name):
        with _annotate(name):
            return bodies[name]()

    jobs = {name: (lambda name=name: job(name)) for name in bodies}
    if threads <= 1:
        results = [jobs[name]() for name in selected]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(jobs[name]) for name in selected]
            results = [f.result() for f in futures]
    records = [r for block in results for r in block]
    return sorted(records, key=lambda r: r.check_id)
