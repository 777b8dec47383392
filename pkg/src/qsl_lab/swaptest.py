"""Two-copy swap-test simulation and the waveplate compiler.

The measurement projects a two-qubit product state rho1 (x) rho2 onto

    |a> = |00>,  |b> = (|01> + |10>)/sqrt(2),
    |c> = (|01> - |10>)/sqrt(2),  |d> = |11>,

and the antisymmetric outcome gives the overlap, Tr(rho1 rho2) = 1 - 2 p_c.
Finite photon counts are modeled as multinomial draws over the four
outcomes.

Waveplate conventions (optical-axis angle theta from horizontal):

    HWP(theta) = -i [[cos 2t, sin 2t], [sin 2t, -cos 2t]]
    QWP(theta) = e^{-i pi/4} [[c^2 + i s^2, (1-i) s c], [(1-i) s c, s^2 + i c^2]]

Both lie in SU(2): HWP is a pi rotation and QWP a pi/2 rotation about the
axis (sin 2t, 0, cos 2t) of the Bloch sphere, which is what makes the
QWP-HWP-QWP triple universal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .dynamics import DynamicsModel, Trajectory, propagate
from .errors import InvalidDimensionError, InvalidProbabilityError, MaximallyMixedError
from .qsl import accumulate_path
from .states import MIXED_TOL


def swap_operator(dim: int) -> np.ndarray:
    """Operator exchanging the two copies: S |u>|v> = |v>|u>.

    Hermitian with S^2 = I; equals P_sym - P_antisym.
    """
    if dim < 2:
        raise InvalidDimensionError(f"need dimension >= 2, got {dim}")
    s = np.zeros((dim * dim, dim * dim))
    for i in range(dim):
        for j in range(dim):
            s[j * dim + i, i * dim + j] = 1.0
    return s


def symmetric_projector(dim: int) -> np.ndarray:
    return (np.eye(dim * dim) + swap_operator(dim)) / 2.0


def antisymmetric_projector(dim: int) -> np.ndarray:
    return (np.eye(dim * dim) - swap_operator(dim)) / 2.0


def joint_state(rho1: np.ndarray, rho2: np.ndarray) -> np.ndarray:
    """Product state rho1 (x) rho2 of the two copies."""
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape != rho2.shape:
        raise InvalidDimensionError(f"copy shapes {rho1.shape} and {rho2.shape} differ")
    return np.kron(rho1, rho2)


@lru_cache(maxsize=None)
def measurement_basis() -> np.ndarray:
    """Rows a, b, c, d of the two-qubit projective measurement.

    Row c is the antisymmetric singlet; the other three span the symmetric
    subspace.
    """
    inv = 1.0 / math.sqrt(2.0)
    basis = np.array(
        [
            [1.0, 0.0, 0.0, 0.0],
            [0.0, inv, inv, 0.0],
            [0.0, inv, -inv, 0.0],
            [0.0, 0.0, 0.0, 1.0],
        ],
        dtype=complex,
    )
    basis.setflags(write=False)
    return basis


OUTCOMES = ("a", "b", "c", "d")
ANTISYMMETRIC_INDEX = 2


def measurement_probabilities(rho1: np.ndarray, rho2: np.ndarray) -> np.ndarray:
    """Outcome probabilities (p_a, p_b, p_c, p_d) for two qubit copies."""
    rho1 = np.asarray(rho1, dtype=complex)
    rho2 = np.asarray(rho2, dtype=complex)
    if rho1.shape != (2, 2) or rho2.shape != (2, 2):
        raise InvalidDimensionError("the four-outcome measurement is defined for qubit copies")
    joint = joint_state(rho1, rho2)
    basis = measurement_basis()
    return np.einsum("xi,ij,xj->x", basis.conj(), joint, basis).real


def overlap_from_pc(p_c: float) -> float:
    """Overlap from the antisymmetric-outcome probability: 1 - 2 p_c."""
    if not -1e-12 <= p_c <= 0.5 + 1e-12:
        raise InvalidProbabilityError(f"p_c = {p_c} outside [0, 1/2]")
    return 1.0 - 2.0 * p_c


@dataclass(frozen=True)
class ShotRecord:
    """Counts over the outcomes (a, b, c, d) from ``total`` shots."""

    counts: tuple
    total: int

    def __post_init__(self):
        if sum(self.counts) != self.total:
            raise InvalidProbabilityError("counts do not sum to the shot total")


def sample_shots(probs, shots: int, rng) -> ShotRecord:
    """Multinomial draw over the four outcomes; deterministic under a seed."""
    if shots < 1:
        raise ValueError(f"need at least one shot, got {shots}")
    p = np.asarray(probs, dtype=float).ravel()
    if np.min(p) < -1e-12 or abs(p.sum() - 1.0) > 1e-9:
        raise InvalidProbabilityError(f"not a probability vector: {p}")
    p = np.clip(p, 0.0, None)
    p = p / p.sum()
    rng = np.random.default_rng(rng)
    counts = rng.multinomial(shots, p)
    return ShotRecord(counts=tuple(int(c) for c in counts), total=shots)


def estimate_overlap(record: ShotRecord) -> tuple[float, float]:
    """Overlap estimate 1 - 2 n_c/n and its binomial standard error.

    The estimate is deliberately left unclamped: values below -1 or above 1
    flag finite-statistics excursions that clamping would hide.
    """
    n = record.total
    p_hat = record.counts[ANTISYMMETRIC_INDEX] / n
    estimate = 1.0 - 2.0 * p_hat
    std_error = 2.0 * math.sqrt(p_hat * (1.0 - p_hat) / n)
    return estimate, std_error


def bloch_angle_from_overlaps(o12: float, o11: float, o22: float, dim: int = 2) -> float:
    """Bloch angle from three measured overlaps (cross term and two purities).

    Overlap estimates are taken as-is; shot noise routinely pushes the
    arccos argument past the boundary near zero angle, so the clamp here is
    silent (the bias this causes is reported through the error bars, not
    corrected).
    """
    d11 = dim * o11 - 1.0
    d22 = dim * o22 - 1.0
    if d11 <= MIXED_TOL or d22 <= MIXED_TOL:
        raise MaximallyMixedError("measured purity is at the maximally mixed point")
    arg = (dim * o12 - 1.0) / math.sqrt(d11 * d22)
    return float(np.arccos(min(1.0, max(-1.0, arg))))


def waveplate_unitary(kind: str, theta: float) -> np.ndarray:
    """Jones matrix of a half- or quarter-wave plate at axis angle ``theta``."""
    c = math.cos(2.0 * theta)
    s = math.sin(2.0 * theta)
    kind = kind.lower()
    if kind == "hwp":
        return -1j * np.array([[c, s], [s, -c]], dtype=complex)
    if kind == "qwp":
        ch = math.cos(theta)
        sh = math.sin(theta)
        mat = np.array(
            [
                [ch * ch + 1j * sh * sh, (1.0 - 1j) * sh * ch],
                [(1.0 - 1j) * sh * ch, sh * sh + 1j * ch * ch],
            ],
            dtype=complex,
        )
        return np.exp(-1j * math.pi / 4.0) * mat
    raise ValueError(f"unknown waveplate kind {kind!r}")


@dataclass(frozen=True)
class WaveplateSequence:
    """Axis angles of a QWP-HWP-QWP triple realizing a target unitary.

    ``qwp1_angle`` is the leftmost matrix factor, i.e. the plate the light
    traverses last.
    """

    qwp1_angle: float
    hwp_angle: float
    qwp2_angle: float

    def unitary(self) -> np.ndarray:
        return (
            waveplate_unitary("qwp", self.qwp1_angle)
            @ waveplate_unitary("hwp", self.hwp_angle)
            @ waveplate_unitary("qwp", self.qwp2_angle)
        )


def phase_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Frobenius distance between matrices minimized over a global phase.

    The optimal phase is applied explicitly and the difference taken
    elementwise; the closed form sqrt(|a|^2 + |b|^2 - 2 |tr|) would lose
    half the precision to cancellation.
    """
    cross = np.einsum("ij,ij->", b.conj(), a)
    phase = cross.conjugate() / abs(cross) if abs(cross) > 0 else 1.0
    return float(np.linalg.norm(phase * a - b))


def _su2_quaternion(u: np.ndarray) -> tuple[float, float, float, float]:
    """Components (x0, x1, x2, x3) of U = x0 I - i (x1 sx + x2 sy + x3 sz)."""
    x0 = (u[0, 0] + u[1, 1]).real / 2.0
    x1 = -(u[0, 1] + u[1, 0]).imag / 2.0
    x2 = (u[1, 0] - u[0, 1]).real / 2.0
    x3 = (u[1, 1] - u[0, 0]).imag / 2.0
    return x0, x1, x2, x3


def compile_su2(u: np.ndarray) -> WaveplateSequence:
    """Angles (alpha, beta, gamma) with QWP(alpha) HWP(beta) QWP(gamma) ~ U.

    Writing the target as a unit quaternion and each plate as a rotation
    about an axis in the x-z plane reduces the product to

        x0 = -cos(u) cos(w),  x2 = -sin(u) cos(w),
        x1 =  cos(v) sin(w),  x3 = -sin(v) sin(w),

    with u = (a - c)/2, v = (a + c)/2, w = b - v in doubled plate angles
    (a, b, c) = (2 alpha, 2 beta, 2 gamma).  These invert in closed form;
    a numerical polish kicks in only if the reconstruction misses 1e-10.
    """
    u_mat = np.asarray(u, dtype=complex)
    if u_mat.shape != (2, 2):
        raise ValueError(f"expected a 2x2 matrix, got shape {u_mat.shape}")
    unit_err = float(np.linalg.norm(u_mat.conj().T @ u_mat - np.eye(2)))
    if unit_err > 1e-10:
        raise ValueError(f"input is not unitary: |U^dag U - I| = {unit_err:.3e}")
    det = complex(np.linalg.det(u_mat))
    if abs(abs(det) - 1.0) > 1e-10:
        raise ValueError(f"|det U| = {abs(det):.12f}, expected 1")
    special = u_mat / np.sqrt(det)
    x0, x1, x2, x3 = _su2_quaternion(special)
    cos_w = math.hypot(x0, x2)
    sin_w = math.hypot(x1, x3)
    w = math.atan2(sin_w, cos_w)
    half_diff = math.atan2(-x2, -x0) if cos_w > 1e-15 else 0.0
    half_sum = math.atan2(-x3, x1) if sin_w > 1e-15 else 0.0
    a = half_sum + half_diff
    c = half_sum - half_diff
    b = w + half_sum
    seq = WaveplateSequence(qwp1_angle=a / 2.0, hwp_angle=b / 2.0, qwp2_angle=c / 2.0)
    if phase_distance(seq.unitary(), u_mat) > 1e-10:
        seq = _refine_sequence(seq, u_mat)
    return seq


def _refine_sequence(seq: WaveplateSequence, target: np.ndarray, iters: int = 50) -> WaveplateSequence:
    """Gauss-Newton polish of the plate angles against the phase distance."""
    angles = np.array([seq.qwp1_angle, seq.hwp_angle, seq.qwp2_angle])

    def residual(a):
        prod = WaveplateSequence(*a).unitary()
        tr = np.einsum("ij,ij->", prod.conj(), target)
        phase = tr / abs(tr) if abs(tr) > 0 else 1.0
        diff = (prod * phase - target).ravel()
        return np.concatenate([diff.real, diff.imag])

    step = 1e-7
    for _ in range(iters):
        r0 = residual(angles)
        if np.linalg.norm(r0) <= 1e-12:
            break
        jac = np.empty((r0.size, 3))
        for i in range(3):
            bumped = angles.copy()
            bumped[i] += step
            jac[:, i] = (residual(bumped) - r0) / step
        delta, *_ = np.linalg.lstsq(jac, -r0, rcond=None)
        angles = angles + delta
    return WaveplateSequence(*angles)


@dataclass(frozen=True)
class PathEstimate:
    """Swap-test reconstruction of the path length with error bars.

    ``angle_estimates[k]`` covers the step from t_k to t_{k+1};
    ``path_estimate`` is its cumulative sum with s(0) = 0, and the standard
    errors propagate to first order assuming independent shots per pair.
    """

    trajectory: Trajectory
    angle_estimates: np.ndarray
    angle_stderr: np.ndarray
    path_estimate: np.ndarray
    path_stderr: np.ndarray


def _angle_stderr(o12, o11, o22, s12, s11, s22, dim) -> float:
    """First-order error bar for the angle built from three noisy overlaps.

    Propagates the overlap errors into the arccos argument, then divides by
    sqrt(1 - x^2).  Near the clamp boundary that derivative diverges, so
    1 - x^2 is floored at the argument's own standard error; the bar then
    degrades to sqrt(sigma_arg), the fluctuation scale of an angle whose
    cosine sits within one sigma of 1.
    """
    d11 = dim * o11 - 1.0
    d22 = dim * o22 - 1.0
    x = (dim * o12 - 1.0) / math.sqrt(d11 * d22)
    dx_12 = dim / math.sqrt(d11 * d22)
    dx_11 = -x * dim / (2.0 * d11)
    dx_22 = -x * dim / (2.0 * d22)
    sigma_arg = math.sqrt((dx_12 * s12) ** 2 + (dx_11 * s11) ** 2 + (dx_22 * s22) ** 2)
    effective = max(1.0 - x * x, sigma_arg)
    if effective <= 0.0:
        return 0.0
    return sigma_arg / math.sqrt(effective)


def _measured_overlap(rho_a, rho_b, shots, rng) -> tuple[float, float]:
    probs = measurement_probabilities(rho_a, rho_b)
    record = sample_shots(probs, shots, rng)
    return estimate_overlap(record)


def simulate_path_measurement(
    model: DynamicsModel,
    rho0: np.ndarray,
    t_final: float,
    steps: int,
    shots_per_pair: int | None,
    seed: int,
) -> PathEstimate:
    """Reconstruct s(t_k) from simulated swap tests on adjacent state pairs.

    For each pair (t_k, t_{k+1}) three overlaps are measured with
    independent shot noise (cross term, then the two purities), the Bloch
    angle is formed from the estimates, and the angles accumulate into the
    path.  Each pair uses its own generator seeded from (seed, pair index),
    so results do not depend on evaluation order.

    ``shots_per_pair=None`` is the exact (infinite-shot) mode: the angle
    series reduces to the noiseless discrete path with zero error bars.
    """
    traj = accumulate_path(propagate(model, rho0, t_final, steps))
    if shots_per_pair is None:
        angles = np.diff(traj.cumulative_path)
        zeros = np.zeros_like(traj.cumulative_path)
        return PathEstimate(
            trajectory=traj,
            angle_estimates=angles,
            angle_stderr=zeros[1:],
            path_estimate=traj.cumulative_path.copy(),
            path_stderr=zeros,
        )
    if shots_per_pair < 1:
        raise ValueError(f"need at least one shot per pair, got {shots_per_pair}")
    states = traj.states
    dim = states.shape[-1]
    n_pairs = len(traj) - 1
    angles = np.empty(n_pairs)
    errors = np.empty(n_pairs)
    for k in range(n_pairs):
        rng = np.random.default_rng(np.random.SeedSequence([int(seed), k]))
        o12, s12 = _measured_overlap(states[k], states[k + 1], shots_per_pair, rng)
        o11, s11 = _measured_overlap(states[k], states[k], shots_per_pair, rng)
        o22, s22 = _measured_overlap(states[k + 1], states[k + 1], shots_per_pair, rng)
        angles[k] = bloch_angle_from_overlaps(o12, o11, o22, dim)
        errors[k] = _angle_stderr(o12, o11, o22, s12, s11, s22, dim)
    path = np.concatenate([[0.0], np.cumsum(angles)])
    path_err = np.sqrt(np.concatenate([[0.0], np.cumsum(errors**2)]))
    return PathEstimate(
        trajectory=traj,
        angle_estimates=angles,
        angle_stderr=errors,
        path_estimate=path,
        path_stderr=path_err,
    )
