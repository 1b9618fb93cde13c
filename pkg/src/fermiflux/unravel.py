"""Quantum-jump Monte Carlo unraveling of the thermal semigroup.

Trajectories are sampled exactly (no time-step discretization): between jumps
the unnormalized conditional state evolves as h(t) = e^{tG} h e^{tG*} with
G = -i H_S - (1/2) Phi(1), the next jump time solves survival(t) = u for a
uniform u through safeguarded bisection, and the jump channel (bath i, energy
quantum delta) is drawn proportionally to tr(Phi_{i,delta}^*(h)).

Channels are extracted from the explicit single-mode bath realization by
sandwiching one interaction between bath-energy eigenprojectors; an
independent route (polynomial interpolation of the counting-field-deformed
jump map in e^{alpha delta}) is used to cross-check them.

RNG: numpy's counter-based Philox generator, keyed (base_seed, trajectory
index); identical seeds reproduce trajectories bit for bit on any platform.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from . import fock
from . import superop as so
from .errors import MalformedInputError, UnsupportedModelError
from .thermal import ThermalQuasiFreeModel

CHANNEL_NORM_FLOOR = 1e-12


@dataclass(frozen=True, eq=False)
class JumpChannel:
    """Completely positive piece transferring one energy quantum to one bath."""

    bath: int
    delta: float
    superop: np.ndarray  # Schroedinger picture


def _bath_quantum(model: ThermalQuasiFreeModel, i: int) -> float:
    """The positive kappa eigenvalue of a single-mode bath."""
    b = model.baths[i]
    if b.n_modes != 1:
        raise UnsupportedModelError(
            f"bath {i} has {b.n_modes} modes; jump channels are only defined for single-mode baths"
        )
    w = np.linalg.eigvalsh(b.kappa.maj)
    return float(w.max())


def _single_bath_model(model: ThermalQuasiFreeModel, i: int) -> ThermalQuasiFreeModel:
    return ThermalQuasiFreeModel(t_s=model.t_s, kappa_s=model.kappa_s, baths=(model.baths[i],))


def _snap_delta(value: float, omega: float, tol: float = 1e-8) -> float:
    """Snap an energy difference onto the canonical sector values {-omega, 0, omega}."""
    for d in (-omega, 0.0, omega):
        if abs(value - d) < tol * max(1.0, omega):
            return d
    raise UnsupportedModelError(f"energy quantum {value} outside the single-mode sectors +-{omega}")


def _projector_channels(model: ThermalQuasiFreeModel, i: int):
    """Bath-projector route: sandwich one interaction between K_B eigenprojectors.

    On the joint (system + this bath) realization, the weak-coupling jump map
    of bath i resolves exactly into energy sectors: the Kraus operator for a
    bath transition |n> -> |m| of K_B is sqrt(p_n) <m| H_SB |n>, carrying the
    quantum delta = E_m - E_n into the bath.
    """
    sub = _single_bath_model(model, i)
    omega = _bath_quantum(model, i)
    real = fock.joint_realization(sub)
    dim_s = 2 ** real["n_system"]
    dim_b = 2 ** (real["n_total"] - real["n_system"])
    h_sb = real["h_coupling"].reshape(dim_b, dim_s, dim_b, dim_s)
    rho_b = real["rho_bath"]
    k_local = np.trace(real["k_bath"].reshape(dim_b, dim_s, dim_b, dim_s), axis1=1, axis2=3) / dim_s
    w, v = np.linalg.eigh(k_local)
    rho_diag = v.conj().T @ rho_b @ v  # diagonal in the K_B eigenbasis
    # Kraus operators of one weak interaction: sqrt(p_n) <m| H_SB |n> : S -> S
    h_eig = np.einsum("am,aibj,bn->minj", v.conj(), h_sb, v)
    channels = {}
    for n in range(dim_b):
        p = rho_diag[n, n].real
        if p < 1e-300:
            continue
        for m in range(dim_b):
            delta = _snap_delta(w[m] - w[n], omega)
            kraus = np.sqrt(p) * h_eig[m, :, n, :]
            if np.max(np.abs(kraus)) < 1e-15:
                continue
            s = so.sandwich(kraus, kraus.conj().T)
            if delta in channels:
                channels[delta] = channels[delta] + s
            else:
                channels[delta] = s
    return channels


def _kernel_channels(model: ThermalQuasiFreeModel, i: int, omega: float):
    """Interpolation route: resolve the deformed jump map in powers of e^{alpha omega}.

    The counting-field tilt multiplies the delta channel by e^{alpha delta}
    with delta in {-omega, 0, +omega}; evaluating the tilted map at three
    alphas and solving the Vandermonde system isolates the channels.
    """
    sub = _single_bath_model(model, i)
    gammas = fock.majorana_matrices(sub.n_modes)
    alphas = np.array([0.0, 0.7 / omega, -0.7 / omega])
    maps = []
    for a in alphas:
        kernel = sub.jump_kernel(0) + fock.deformed_kernel(sub, [a])
        maps.append(so.adjoint_super(fock.kernel_superop(kernel, gammas)))
    vand = np.array([[np.exp(a * d) for d in (-omega, 0.0, omega)] for a in alphas])
    coef = np.linalg.solve(vand, np.stack([m.reshape(-1) for m in maps]))
    out = {}
    for d, row in zip((-omega, 0.0, omega), coef):
        s = row.reshape(maps[0].shape)
        if np.max(np.abs(s)) > CHANNEL_NORM_FLOOR:
            out[d] = s
    return out


def extract_channels(model: ThermalQuasiFreeModel, cross_check: bool = True, tol: float = 1e-9):
    """All jump channels of the model; requires single-mode baths.

    The projector route is authoritative; with ``cross_check`` the
    interpolation route must agree to ``tol`` and the channels must sum to the
    undeformed jump map.
    """
    channels = []
    phi_total = None
    for i in range(model.n_baths):
        omega = _bath_quantum(model, i)
        by_delta = _projector_channels(model, i)
        by_delta = {d: s for d, s in by_delta.items() if np.max(np.abs(s)) > CHANNEL_NORM_FLOOR}
        if cross_check:
            alt = _kernel_channels(model, i, omega)
            keys = sorted(set(by_delta) | set(alt))
            for d in keys:
                a = by_delta.get(d, 0.0)
                b = alt.get(d, 0.0)
                err = np.max(np.abs(a - b))
                if err > tol:
                    raise UnsupportedModelError(
                        f"channel extraction routes disagree for bath {i}, delta {d}: {err:.3e}"
                    )
        for d in sorted(by_delta):
            s = by_delta[d]
            channels.append(JumpChannel(bath=i, delta=float(d), superop=s))
            phi_total = s if phi_total is None else phi_total + s
    if cross_check and channels:
        gammas = fock.majorana_matrices(model.n_modes)
        direct = np.zeros_like(phi_total)
        for i in range(model.n_baths):
            direct += so.adjoint_super(fock.kernel_superop(model.jump_kernel(i), gammas))
        err = np.max(np.abs(phi_total - direct))
        if err > tol:
            raise UnsupportedModelError(f"channel sum misses the jump map by {err:.3e}")
    return channels


# ---------------------------------------------------------------------------
# trajectory sampling
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TrajectoryRecord:
    """One sampled trajectory: ordered jumps and accumulated per-bath energy."""

    seed: int
    horizon: float
    jumps: tuple  # ((t, bath, delta), ...)
    totals: np.ndarray  # energy delivered to each bath
    log_weight: float

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)


class _SurvivalSolver:
    """Exact survival function s(t) = tr(e^{tG} h e^{tG*}) via eigendecomposition.

    With G = V diag(lam) V^{-1} and h~ = V^{-1} h V^{-dagger}, the survival is
    a finite sum of exponentials s(t) = sum_{jk} c_jk e^{t (lam_j + conj(lam_k))}
    whose coefficients are recomputed once per no-jump segment.
    """

    def __init__(self, g: np.ndarray):
        lam, v = np.linalg.eig(g)
        self.lam = lam
        self.v = v
        self.vinv = np.linalg.inv(v)
        self.mu = (lam[:, None] + lam.conj()[None, :]).reshape(-1)
        self.w = (v.conj().T @ v).T  # w[j, k] = (V^dagger V)_{kj}

    def coefficients(self, h: np.ndarray) -> np.ndarray:
        ht = self.vinv @ h @ self.vinv.conj().T
        return (self.w * ht).reshape(-1)

    def value(self, coef: np.ndarray, t: float) -> float:
        return float(np.real(coef @ np.exp(self.mu * t)))

    def evolve(self, h: np.ndarray, t: float) -> np.ndarray:
        expd = (self.v * np.exp(self.lam * t)) @ self.vinv
        return expd @ h @ expd.conj().T

    def invert(self, coef: np.ndarray, target: float, t_max: float, t_tol: float = 1e-12):
        """Smallest t in (0, t_max] with s(t) = target, or None if s stays above it.

        Bisection (s is strictly decreasing: s'(t) = -tr(Phi(1) h_t) <= 0),
        refined to t_tol, with a few Newton polishing steps at the end.
        """
        s_end = self.value(coef, t_max)
        if s_end > target:
            return None
        lo, hi = 0.0, t_max
        for _ in range(64):
            mid = 0.5 * (lo + hi)
            if self.value(coef, mid) > target:
                lo = mid
            else:
                hi = mid
            if hi - lo < t_tol:
                break
        t = 0.5 * (lo + hi)
        for _ in range(3):  # Newton polish; derivative available in closed form
            ds = float(np.real((coef * self.mu) @ np.exp(self.mu * t)))
            if ds == 0.0:
                break
            step = (self.value(coef, t) - target) / ds
            t_new = t - step
            if not lo <= t_new <= hi:
                break
            t = t_new
        return t


def no_jump_generator(model: ThermalQuasiFreeModel) -> np.ndarray:
    """G = -i H_S - (1/2) Phi(1) on the system Fock space."""
    h = fock.system_hamiltonian(model)
    phi_h = fock.phi_heisenberg(model)
    dim = h.shape[0]
    phi_one = so.unvec(phi_h @ so.vec(np.eye(dim)))
    return -1j * h - 0.5 * phi_one


@dataclass
class _SimContext:
    g: np.ndarray
    solver: _SurvivalSolver
    channels: list
    channel_mats: list  # reshaped (d, d, d, d) for fast application


def _make_context(model: ThermalQuasiFreeModel, channels=None) -> _SimContext:
    if channels is None:
        channels = extract_channels(model, cross_check=False)
    g = no_jump_generator(model)
    dim = g.shape[0]
    mats = [ch.superop.reshape(dim, dim, dim, dim) for ch in channels]
    return _SimContext(g=g, solver=_SurvivalSolver(g), channels=channels, channel_mats=mats)


def _apply_channel(mat4, h):
    return np.einsum("ijkl,kl->ij", mat4, h)


def simulate(
    model: ThermalQuasiFreeModel,
    rho0: np.ndarray,
    horizon: float,
    seed: int,
    _context: _SimContext | None = None,
) -> TrajectoryRecord:
    """Sample one trajectory of the jump process up to time ``horizon``."""
    if horizon <= 0:
        raise MalformedInputError("horizon must be positive")
    ctx = _context if _context is not None else _make_context(model)
    rng = np.random.Generator(np.random.Philox(key=np.array([seed, 0], dtype=np.uint64)))
    solver = ctx.solver
    h = np.array(rho0, dtype=complex)
    tr0 = np.trace(h).real
    if abs(tr0 - 1.0) > 1e-8:
        raise MalformedInputError("rho0 must have unit trace")
    t_now = 0.0
    jumps = []
    totals = np.zeros(model.n_baths)
    log_weight = 0.0
    n_channels = len(ctx.channels)
    if n_channels == 0:
        return TrajectoryRecord(seed=seed, horizon=horizon, jumps=(), totals=totals, log_weight=0.0)
    while True:
        coef = solver.coefficients(h)
        u = rng.random()
        dt = solver.invert(coef, u, horizon - t_now)
        if dt is None:
            # survived to the horizon; close the weight with the last segment
            log_weight += np.log(max(solver.value(coef, horizon - t_now), 1e-300))
            break
        t_now += dt
        h = solver.evolve(h, dt)  # unnormalized, trace u
        weights = np.empty(n_channels)
        for k in range(n_channels):
            weights[k] = max(np.trace(_apply_channel(ctx.channel_mats[k], h)).real, 0.0)
        total = weights.sum()
        if total <= 0.0:
            log_weight += np.log(max(u, 1e-300))
            break  # dark state: no channel can fire
        k = int(rng.choice(n_channels, p=weights / total))
        ch = ctx.channels[k]
        h = _apply_channel(ctx.channel_mats[k], h)
        norm = np.trace(h).real
        log_weight += np.log(norm)  # telescopes to tr(Psi_T^*(rho0)) with the final survival
        h = h / norm
        jumps.append((t_now, ch.bath, ch.delta))
        totals[ch.bath] += ch.delta
    return TrajectoryRecord(
        seed=seed, horizon=horizon, jumps=tuple(jumps), totals=totals, log_weight=log_weight
    )


def simulate_batch(
    model: ThermalQuasiFreeModel,
    rho0: np.ndarray,
    horizon: float,
    n_trajectories: int,
    base_seed: int = 0,
) -> list:
    """Independent trajectories with per-trajectory seeds base_seed, base_seed+1, ..."""
    if n_trajectories < 1:
        raise MalformedInputError("need at least one trajectory")
    ctx = _make_context(model)
    return [
        simulate(model, rho0, horizon, base_seed + k, _context=ctx) for k in range(n_trajectories)
    ]


def mean_rates(records) -> tuple[np.ndarray, np.ndarray]:
    """Sample mean and standard error of N_T / T across records."""
    rates = np.array([r.totals / r.horizon for r in records])
    mean = rates.mean(axis=0)
    sem = rates.std(axis=0, ddof=1) / np.sqrt(len(records))
    return mean, sem


@dataclass(frozen=True)
class CgfEstimate:
    value: float
    ci_low: float
    ci_high: float
    effective_samples: float
    reliable: bool


def empirical_cgf(
    records,
    alpha,
    bootstrap: int = 2000,
    ci_level: float = 0.99,
    min_records: int = 100,
    min_ess: float = 30.0,
    boot_seed: int = 12345,
) -> CgfEstimate:
    """(1/T) log mean exp(<alpha, N_T>) with a percentile-bootstrap confidence interval.

    The effective sample size (sum w)^2 / sum w^2 guards against estimates
    dominated by a handful of trajectories; below ``min_ess`` the estimate is
    flagged unreliable.
    """
    records = list(records)
    if len(records) < min_records:
        raise MalformedInputError(f"need at least {min_records} records, got {len(records)}")
    horizon = records[0].horizon
    alpha = np.asarray(alpha, dtype=float)
    exponents = np.array([float(alpha @ r.totals) for r in records])
    shift = exponents.max()
    w = np.exp(exponents - shift)
    n = len(w)
    value = (shift + np.log(w.mean())) / horizon
    ess = float(w.sum() ** 2 / (w**2).sum())
    rng = np.random.Generator(np.random.Philox(key=np.array([boot_seed, 1], dtype=np.uint64)))
    idx = rng.integers(0, n, size=(bootstrap, n))
    boot = (shift + np.log(w[idx].mean(axis=1))) / horizon
    lo, hi = np.quantile(boot, [(1 - ci_level) / 2, 1 - (1 - ci_level) / 2])
    return CgfEstimate(
        value=float(value),
        ci_low=float(lo),
        ci_high=float(hi),
        effective_samples=ess,
        reliable=ess >= min_ess,
    )


def records_to_csv(records, metadata: dict | None = None) -> str:
    """Per-trajectory CSV: seed, horizon, jump count, energy per bath."""
    records = list(records)
    n_baths = len(records[0].totals) if records else 0
    out = io.StringIO()
    for k, v in (metadata or {}).items():
        out.write(f"# {k}: {v}\n")
    cols = ",".join(f"N_{i}" for i in range(n_baths))
    out.write(f"seed,T,n_jumps{',' if cols else ''}{cols}\n")
    for r in records:
        vals = ",".join(f"{x:.12e}" for x in r.totals)
        out.write(f"{r.seed},{r.horizon:.12e},{r.n_jumps}{',' if vals else ''}{vals}\n")
    return out.getvalue()


def jump_log_csv(records) -> str:
    """Full jump log: one row per jump."""
    out = io.StringIO()
    out.write("seed,t,bath,delta\n")
    for r in records:
        for (t, b, d) in r.jumps:
            out.write(f"{r.seed},{t:.12e},{b},{d:.12e}\n")
    return out.getvalue()
