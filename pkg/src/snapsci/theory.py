"""Monte Carlo lab for the convergence guarantee of unfolded GAP.

The guarantee concerns Gaussian-mask operators and stage denoisers that
project onto the range of a Lipschitz decoder covering the signal class
with distortion delta. This module computes the closed-form stage
quantities (gamma, alpha, the failure-probability bound), runs the
contraction experiment in the regime the proof assumes (orthonormal
decoders over a shared subspace, projection scale B), and measures the
concentration statistics the proof relies on: the per-pixel variables
X_i are zero mean, obey an exact boundedness inequality, and their sum
has sub-Gaussian tails.

Log conventions: every logarithm tied to quantization levels is base 2,
matching the 2^-bits grid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .denoisers import SubspaceDenoiser
from .errors import GammaOutOfRange, OutOfAlphabet, ShapeMismatch
from .operators import SciOperator
from .solvers import SolverConfig, gap_net_reconstruct
from .tensors import unvectorize


@dataclass
class TheoremParams:
    """Stage-wise parameters of the convergence statement.

    ``n`` is pixels per frame, ``B`` the channel count. Per-stage tuples
    must satisfy non-increasing distortions and non-decreasing latent
    dims; ``lam`` must leave room under every stage's 0.5 - alpha_k.
    """

    n: int
    B: int
    eta: tuple[int, ...]
    delta: tuple[float, ...]
    lipschitz: tuple[float, ...]
    zeta: float
    lam: float
    rho: float = 1.0
    bits: tuple[int, ...] | None = None

    def __post_init__(self):
        k = len(self.eta)
        if not (len(self.delta) == len(self.lipschitz) == k):
            raise ValueError("eta, delta, lipschitz must have equal length")
        if self.bits is not None and len(self.bits) != k:
            raise ValueError("bits must match the stage count")
        if not 0 < self.zeta < 1:
            raise ValueError("zeta must lie in (0, 1)")
        if any(d <= 0 for d in self.delta):
            raise ValueError("distortions must be positive")
        if list(self.delta) != sorted(self.delta, reverse=True):
            raise ValueError("distortions must be non-increasing over stages")
        if list(self.eta) != sorted(self.eta):
            raise ValueError("latent dims must be non-decreasing over stages")
        g = gamma_k(self)
        if (g >= 1.0).any():
            raise GammaOutOfRange("gamma must be < 1 for alpha to be finite")
        a = alpha_k(g, self.B)
        ceiling = 0.5 - float(a.max())
        if not 0 < self.lam < ceiling:
            raise ValueError(
                f"lam must lie in (0, {ceiling:.4g}) for these stages, got {self.lam}"
            )

    @property
    def stages(self) -> int:
        return len(self.eta)

    @property
    def nB(self) -> int:
        return self.n * self.B


def gamma_value(
    lipschitz: float, delta: float, eta: int, n_total: int, zeta: float
) -> float:
    """Direct form of the contraction seed: L * delta^zeta * sqrt(eta / nB)."""
    return float(lipschitz * delta**zeta * np.sqrt(eta / n_total))


def gamma_value_quantized(
    lipschitz: float, bits: int, eta: int, delta: float, n_total: int
) -> float:
    """Quantized form: L * 2^-bits * sqrt(eta) / (delta * sqrt(nB))."""
    return float(lipschitz * 2.0**-bits * np.sqrt(eta) / (delta * np.sqrt(n_total)))


def gamma_k(params: TheoremParams, variant: str = "theorem1") -> np.ndarray:
    """Per-stage contraction seed gamma, in either closed form."""
    eta = np.asarray(params.eta, dtype=np.float64)
    delta = np.asarray(params.delta, dtype=np.float64)
    lip = np.asarray(params.lipschitz, dtype=np.float64)
    if variant == "theorem1":
        return lip * delta**params.zeta * np.sqrt(eta / params.nB)
    if variant == "theorem2":
        if params.bits is None:
            raise ValueError("theorem2 variant needs quantization bits")
        bits = np.asarray(params.bits, dtype=np.float64)
        return lip * 2.0**-bits * np.sqrt(eta) / (delta * np.sqrt(params.nB))
    raise ValueError(f"unknown variant {variant!r}")


def alpha_k(gamma: np.ndarray | float, B: int) -> np.ndarray | float:
    """2 (1 + 2B) sqrt(gamma (1 + 1/(1-gamma))); needs 0 < gamma < 1."""
    g = np.asarray(gamma, dtype=np.float64)
    if (g <= 0).any() or (g >= 1).any():
        raise GammaOutOfRange("alpha requires 0 < gamma < 1")
    out = 2.0 * (1.0 + 2.0 * B) * np.sqrt(g * (1.0 + 1.0 / (1.0 - g)))
    return float(out) if np.isscalar(gamma) else out


def quantization_bits(delta: float, zeta: float) -> int:
    """Bits making the quantized gamma no larger than the direct one.

    ceil((1 + zeta) * log2(1/delta)): with this choice 2^-bits <=
    delta^(1+zeta), so the theorem2 gamma is <= the theorem1 gamma.
    """
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    return int(np.ceil((1.0 + zeta) * np.log2(1.0 / delta)))


def failure_probability(params: TheoremParams) -> float:
    """The guarantee's failure bound: sum of per-stage exponentials, clamped.

    Each stage contributes exp(-2 lam^2 n delta^4 (1-gamma)^4 / (4 B^2 rho^4)
    + 2 ln2 ((1-zeta) log2(1/delta) + 1) eta). Values above 1 mean the
    bound is vacuous for those parameters.
    """
    g = gamma_k(params)
    if (g >= 1.0).any():
        raise GammaOutOfRange("failure bound needs gamma < 1")
    delta = np.asarray(params.delta, dtype=np.float64)
    eta = np.asarray(params.eta, dtype=np.float64)
    exponent = (
        -2.0
        * params.lam**2
        * params.n
        * delta**4
        * (1.0 - g) ** 4
        / (4.0 * params.B**2 * params.rho**4)
        + 2.0 * np.log(2.0) * ((1.0 - params.zeta) * np.log2(1.0 / delta) + 1.0) * eta
    )
    return float(min(1.0, np.exp(exponent).sum()))


def sample_gaussian_operator(
    n_x: int, n_y: int, B: int, seed: int
) -> SciOperator:
    """Operator with i.i.d. standard normal mask entries, fixed by seed."""
    rng = np.random.default_rng(seed)
    return SciOperator(rng.standard_normal((n_x, n_y, B)))


def quantize_latent(f: np.ndarray, bits: int) -> np.ndarray:
    """Snap each entry of f in [-1, 1] to the nearest of 2^bits cell midpoints.

    Uniform mid-rise grid: cells of width 2^(1-bits) tile [-1, 1] and the
    representative is the cell midpoint, so the error is at most 2^-bits.
    """
    if bits < 1:
        raise ValueError("bits must be >= 1")
    f = np.asarray(f, dtype=np.float64)
    if (np.abs(f) > 1.0).any():
        raise OutOfAlphabet("latent entries must lie in [-1, 1]")
    levels = 2**bits
    width = 2.0 / levels
    idx = np.clip(np.floor((f + 1.0) / width), 0, levels - 1)
    return -1.0 + (idx + 0.5) * width


# ---------------------------------------------------------------------------
# concentration statistics of the proof's X_i variables

@dataclass
class XiReport:
    samples: int
    mean: float
    std_error: float
    mean_within_3se: bool
    bound_violations: int
    max_bound_ratio: float
    hoeffding_denominator: float
    tails: dict[float, tuple[float, float]]  # lam -> (empirical, bound)

    def lines(self) -> list[str]:
        out = [
            f"xi_samples={self.samples}",
            f"xi_mean={self.mean:.6e}",
            f"xi_std_error={self.std_error:.6e}",
            f"xi_mean_within_3se={self.mean_within_3se}",
            f"xi_bound_violations={self.bound_violations}",
            f"xi_max_bound_ratio={self.max_bound_ratio:.6f}",
        ]
        for lam, (emp, bound) in sorted(self.tails.items()):
            out.append(f"xi_tail_lambda_{lam:g}={emp:.6e} bound={bound:.6e}")
        return out


def xi_statistics(
    op: SciOperator,
    e_q: np.ndarray,
    e_qp: np.ndarray,
    samples: int,
    seed: int = 0,
    tail_lambdas: tuple[float, ...] = (0.1, 0.5, 1.0),
) -> XiReport:
    """Monte Carlo check of the proof's per-pixel variables.

    For fresh Gaussian masks with the template's dims, X_i couples the
    quantized error directions through the operator:
    X_i = sum_b e_bi e'_bi - (B / R_i) (sum_b D_bi e_bi)(sum_b D_bi e'_bi).
    The report carries the sample mean of sum_i X_i against its standard
    error, violations of the exact per-pixel boundedness inequality
    (Cauchy-Schwarz; must be zero), and empirical upper tails against
    exp(-2 lam^2 / (4 B^2 sum_i (sum_b e^2)(sum_b e'^2))).
    """
    n_x, n_y, B = op.shape
    n = n_x * n_y
    e_q = np.asarray(e_q, dtype=np.float64).reshape(B, n)
    e_qp = np.asarray(e_qp, dtype=np.float64).reshape(B, n)
    rng = np.random.default_rng(seed)

    direct = np.einsum("bi,bi->i", e_q, e_qp)  # sum_b e e' per pixel
    e_sq = np.einsum("bi,bi->i", e_q, e_q)
    ep_sq = np.einsum("bi,bi->i", e_qp, e_qp)
    per_pixel_bound = B * np.sqrt(e_sq) * np.sqrt(ep_sq)
    denom = 4.0 * B * B * float(np.sum(e_sq * ep_sq))

    sums = np.empty(samples)
    violations = 0
    max_ratio = 0.0
    batch = max(1, min(samples, 2_000_000 // max(1, n * B)))
    done = 0
    while done < samples:
        m = min(batch, samples - done)
        d = rng.standard_normal((m, B, n))
        r = np.einsum("sbi,sbi->si", d, d)
        p = np.einsum("sbi,bi->si", d, e_q)
        pp = np.einsum("sbi,bi->si", d, e_qp)
        x = direct[None, :] - B * p * pp / r
        sums[done : done + m] = x.sum(axis=1)
        dev = np.abs(x - direct[None, :])
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(per_pixel_bound > 0, dev / per_pixel_bound, 0.0)
        max_ratio = max(max_ratio, float(ratio.max()))
        violations += int((dev > per_pixel_bound * (1 + 1e-12) + 1e-15).sum())
        done += m

    mean = float(sums.mean())
    se = float(sums.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    tails = {}
    for lam in tail_lambdas:
        empirical = float(np.mean(sums >= lam))
        bound = float(np.exp(-2.0 * lam * lam / denom)) if denom > 0 else 0.0
        tails[lam] = (empirical, min(1.0, bound))
    return XiReport(
        samples=samples,
        mean=mean,
        std_error=se,
        mean_within_3se=abs(mean) <= 3.0 * se if se > 0 else mean == 0.0,
        bound_violations=violations,
        max_bound_ratio=max_ratio,
        hoeffding_denominator=denom,
        tails=tails,
    )


# ---------------------------------------------------------------------------
# contraction experiment

@dataclass
class ContractionReport:
    trials: int
    stages: int
    gamma: float
    alpha: float
    bound: float  # 2 (lam + alpha)
    failure_bound: float
    final_rel_errors: np.ndarray  # (trials,)
    ratios: np.ndarray  # (trials, stages) stage-to-stage error ratios
    checked: np.ndarray  # bool, same shape: theorem preconditions held
    violations: int
    checked_count: int
    monotone_fraction_after_burnin: float
    reached: float  # fraction of trials with final relative error <= target
    target: float
    error_floor: float = 1e-12  # relative; transitions below it count as flat

    @property
    def violation_fraction(self) -> float:
        return self.violations / self.checked_count if self.checked_count else 0.0

    def lines(self) -> list[str]:
        return [
            f"contraction_trials={self.trials}",
            f"contraction_stages={self.stages}",
            f"contraction_gamma={self.gamma:.6e}",
            f"contraction_alpha={self.alpha:.6f}",
            f"contraction_bound={self.bound:.6f}",
            f"contraction_failure_bound={self.failure_bound:.6e}",
            f"contraction_reached_frac={self.reached:.4f}",
            f"contraction_target={self.target:g}",
            f"contraction_median_ratio={float(np.median(self.ratios)):.6f}",
            f"contraction_violation_frac={self.violation_fraction:.6f}",
            f"contraction_monotone_frac={self.monotone_fraction_after_burnin:.6f}",
            f"contraction_worst_final={float(self.final_rel_errors.max()):.6e}",
        ]

    def ratios_csv(self) -> str:
        rows = ["trial,stage,ratio,checked"]
        for t in range(self.trials):
            for k in range(self.stages):
                rows.append(f"{t},{k + 1},{self.ratios[t, k]:.9e},{int(self.checked[t, k])}")
        return "\n".join(rows) + "\n"


def run_contraction_experiment(
    params: TheoremParams,
    trials: int,
    seed: int = 0,
    stages: int = 30,
    plane: tuple[int, int] | None = None,
    target: float = 1e-6,
) -> ContractionReport:
    """Unfolded GAP in the proof's regime, measured stage by stage.

    Each trial draws fresh Gaussian masks, a shared orthonormal decoder
    basis of the first stage's latent dim (so the true per-stage
    distortion is zero and L = 1; ``params.delta`` acts as the surrogate
    in the closed-form quantities), and a signal inside the subspace
    scaled to the amplitude bound. GAP runs with projection scale B. The
    per-stage ratio ||v(k) - x*|| / ||v(k-1) - x*|| is compared with
    2 (lam + alpha) wherever both stage errors clear the delta * sqrt(nB)
    precondition; with the exact-subspace construction the best in-range
    point is x* itself, so this error and the distance to the best
    in-range point coincide.
    """
    eta = params.eta[0]
    n_x = int(np.floor(np.sqrt(params.n)))
    if plane is not None:
        n_x, n_y = plane
    else:
        while params.n % n_x:
            n_x -= 1
        n_y = params.n // n_x
    if n_x * n_y != params.n:
        raise ShapeMismatch(f"plane {n_x}x{n_y} does not hold n={params.n} pixels")
    B = params.B
    gamma = float(gamma_k(params)[0])
    alpha = float(alpha_k(np.array([gamma]), B)[0])
    bound = 2.0 * (params.lam + alpha)
    precondition = params.delta[0] * np.sqrt(params.nB)

    seeds = np.random.SeedSequence(seed).spawn(trials)
    final_rel = np.empty(trials)
    ratios = np.full((trials, stages), np.nan)
    checked = np.zeros((trials, stages), dtype=bool)
    violations = 0
    mono_ok = 0
    mono_total = 0
    for t, ss in enumerate(seeds):
        rng = np.random.default_rng(ss)
        op = SciOperator(rng.standard_normal((n_x, n_y, B)))
        basis, _ = np.linalg.qr(rng.standard_normal((params.nB, eta)))
        xs = basis @ rng.uniform(-1.0, 1.0, eta)
        peak = np.abs(xs).max()
        if peak > 0:
            xs *= 0.5 * params.rho / peak  # saturate the amplitude bound
        truth = unvectorize(xs, (n_x, n_y, B))
        y = op.forward(truth)
        cfg = SolverConfig(
            algorithm="pnp_gap",
            stages=stages,
            denoisers=SubspaceDenoiser(basis),
            projection_scale=float(B),
        )
        _, trace = gap_net_reconstruct(op, y, cfg, truth=truth)
        errs = np.asarray(trace.error_norms)
        xs_norm = float(np.linalg.norm(xs))
        final_rel[t] = errs[-1] / xs_norm
        floor = 1e-12 * xs_norm
        prev = errs[:-1]
        ratios[t] = errs[1:] / np.maximum(prev, np.finfo(float).tiny)
        checked[t] = (errs[1:] >= precondition) & (prev >= precondition)
        # the first transition starts from H^T y, which is not a decoder
        # output, so the stage recursion does not cover it
        checked[t, 0] = False
        violations += int((ratios[t][checked[t]] > bound).sum())
        after = errs[2:]
        mono_total += len(after) - 1
        mono_ok += int((np.diff(after) <= floor).sum())
    return ContractionReport(
        trials=trials,
        stages=stages,
        gamma=gamma,
        alpha=alpha,
        bound=bound,
        failure_bound=failure_probability(params),
        final_rel_errors=final_rel,
        ratios=ratios,
        checked=checked,
        violations=violations,
        checked_count=int(checked.sum()),
        monotone_fraction_after_burnin=mono_ok / mono_total if mono_total else 1.0,
        reached=float(np.mean(final_rel <= target)),
        target=target,
    )
