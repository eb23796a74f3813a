# This source code is licensed under the MIT license found in the
# LICENSE file in the root directory of this source tree.

r"""
Maximum likelihood estimation of the correlation model from any of the
cohort log-likelihoods, with standard errors, Wald tests and likelihood ratio
tests between the nested FCM, CCM and NCM models.

The optimizer is run from a grid of starting points. Each run is a
Newton-Raphson iteration with step halving, falling back to a steepest ascent
step whenever the Hessian is not negative definite. A quasi-Newton path
(``method="bfgs"``) is available; its result is polished with Newton steps so
both paths stop at the same gradient tolerance.
"""

import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, optimize
from tqdm import tqdm

from ispdcorr.distributions.specfun import chi2_sf, erfc, norm_cdf
from ispdcorr.errors import ConvergenceError, DegenerateError, DomainError, InputError
from ispdcorr.models.cohort import Cohort
from ispdcorr.models.corrmodel import ModelKind, ModelTheta
from ispdcorr.models.likelihoods import Evaluation, LogLikelihood, make_likelihood

DEFAULT_ALPHA_STARTS: Tuple[float, ...] = (0.0, 1.0, 2.0, 3.0, 4.0, 5.0)
DEFAULT_BETA_STARTS: Tuple[float, ...] = (-0.02, -0.01, -0.005, 0.0)

# A nested fit may beat the full one by this much before it is an error.
LRT_SLACK: float = 1e-6

# Relative loglik decrease tolerated by the line search.
LOGLIK_NOISE: float = 1e-13

METHODS = ("newton", "bfgs")


def _default_starts() -> List[Tuple[float, float]]:
    return [(a, b) for a in DEFAULT_ALPHA_STARTS for b in DEFAULT_BETA_STARTS]


@dataclass
class FitConfig:
    r"""
    Settings of the multi-start optimizer.

    Args:
        starts: ``(alpha, beta)`` starting points. CCM runs use the distinct
            alpha values only.
        gtol: Threshold on the max-norm of the free score.
        ftol: Threshold on the relative loglik change of the last step. A run
            converges only when a step meets both thresholds.
        max_iter: Newton iterations per start.
        max_halvings: Step halvings tried before a run gives up.
        method: ``"newton"`` or ``"bfgs"``.
        verbose: Show a progress bar over starting points.
    """

    starts: List[Tuple[float, float]] = field(default_factory=_default_starts)
    gtol: float = 1e-8
    ftol: float = 1e-12
    max_iter: int = 200
    max_halvings: int = 40
    method: str = "newton"
    verbose: bool = False

    def __post_init__(self):
        if not self.gtol > 0 or not self.ftol > 0:
            raise DomainError(
                f"Tolerances must be positive, got gtol={self.gtol}, ftol={self.ftol}"
            )
        if len(self.starts) == 0:
            raise DomainError("FitConfig needs at least one starting point")
        if self.max_iter < 1 or self.max_halvings < 1:
            raise DomainError("max_iter and max_halvings must be at least 1")
        if self.method not in METHODS:
            raise DomainError(f"Unknown optimizer '{self.method}', use {METHODS}")
        self.starts = [(float(a), float(b)) for a, b in self.starts]

    @staticmethod
    def parse_starts(text: str) -> List[Tuple[float, float]]:
        r"""Parse ``"A1,A2,...:B1,B2,..."`` into the grid of all ``(A, B)`` pairs."""
        try:
            alphas, betas = text.split(":")
            alphas = [float(a) for a in alphas.split(",")]
            betas = [float(b) for b in betas.split(",")]
        except ValueError:
            raise InputError(f"Expected starts as 'A1,A2,...:B1,B2,...', got '{text}'")

        if not all(np.isfinite(alphas + betas)):
            raise InputError(f"Starting values must be finite, got '{text}'")
        return [(a, b) for a in alphas for b in betas]


class StartDiagnostic(NamedTuple):
    index: int
    start: Tuple[float, ...]
    theta: Tuple[float, ...]
    loglik: float
    grad_norm: float
    iterations: int
    converged: bool
    message: str


@dataclass(frozen=True)
class FitResult:
    r"""
    Outcome of one model fit. ``std_errors`` has one entry per free
    parameter (two for FCM, one for CCM, none for NCM) and ``hessian`` is the
    full 2x2 Hessian of the log-likelihood at ``theta_hat``.
    """

    kind: ModelKind
    theta_hat: ModelTheta
    loglik: float
    hessian: np.ndarray
    std_errors: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = True
    negative_definite: bool = True
    grad_norm: float = 0.0
    iterations: int = 0
    n_starts_used: int = 0
    mode: str = ""
    n_depts: int = 0
    floored: Tuple[str, ...] = ()
    diagnostics: Tuple[StartDiagnostic, ...] = ()

    def se(self, param: str) -> float:
        index = {"alpha": 0, "beta": 1}.get(param)
        if index is None:
            raise DomainError(f"Unknown parameter '{param}', choose 'alpha' or 'beta'")
        if index >= self.std_errors.size:
            raise DomainError(f"No standard error for '{param}' under {self.kind.name}")
        return float(self.std_errors[index])


class WaldTest(NamedTuple):
    stat: float
    p_value: float


class LrtResult(NamedTuple):
    stat: float
    df: int
    p_value: float


def _free_view(kind: ModelKind):
    r"""Maps between free parameter vectors and full ``(alpha, beta)`` pairs."""
    n_free = kind.free_params

    def to_theta(x: np.ndarray) -> ModelTheta:
        full = np.zeros(2)
        full[:n_free] = x
        return kind.constrain(ModelTheta(float(full[0]), float(full[1])))

    def restrict(score: np.ndarray, hessian: np.ndarray):
        return score[:n_free], hessian[:n_free, :n_free]

    return to_theta, restrict


def _is_negative_definite(hessian: np.ndarray) -> bool:
    if hessian.size == 0:
        return True
    try:
        np.linalg.cholesky(-hessian)
    except np.linalg.LinAlgError:
        return False
    return True


def _newton(
    lik: LogLikelihood, kind: ModelKind, x0: np.ndarray, cfg: FitConfig, index: int
) -> Tuple[StartDiagnostic, Evaluation]:
    to_theta, restrict = _free_view(kind)
    x = np.array(x0, dtype=np.float64)
    ev = lik.evaluate(to_theta(x))

    message = "iteration limit reached"
    steps, converged = 0, False
    for _ in range(cfg.max_iter):
        g, h = restrict(ev.score, ev.hessian)
        if _is_negative_definite(h):
            step = linalg.solve(-h, g, assume_a="pos")
        else:
            # Steepest ascent, at most unit length.
            step = g / max(1.0, float(np.linalg.norm(g)))

        # Changes below rounding noise of the loglik count as no decrease.
        floor = ev.loglik - LOGLIK_NOISE * (1.0 + abs(ev.loglik))
        t, accepted = 1.0, None
        for _ in range(cfg.max_halvings):
            candidate = x + t * step
            ev_new = lik.evaluate(to_theta(candidate))
            if np.isfinite(ev_new.loglik) and ev_new.loglik >= floor:
                accepted = candidate
                break
            t *= 0.5

        if accepted is None:
            message = "line search failed"
            break

        change = abs(ev_new.loglik - ev.loglik) / (1.0 + abs(ev.loglik))
        x, ev = accepted, ev_new
        steps += 1

        g, _ = restrict(ev.score, ev.hessian)
        if change < cfg.ftol and np.max(np.abs(g)) < cfg.gtol:
            message = "gradient and loglik tolerances reached"
            converged = True
            break

    g, _ = restrict(ev.score, ev.hessian)
    grad_norm = float(np.max(np.abs(g)))
    diag = StartDiagnostic(
        index,
        tuple(float(v) for v in x0),
        tuple(float(v) for v in x),
        float(ev.loglik),
        grad_norm,
        steps,
        converged,
        message,
    )
    return diag, ev


def _bfgs(
    lik: LogLikelihood, kind: ModelKind, x0: np.ndarray, cfg: FitConfig, index: int
) -> Tuple[StartDiagnostic, Evaluation]:
    to_theta, restrict = _free_view(kind)

    def objective(x):
        ev = lik.evaluate(to_theta(x))
        g, _ = restrict(ev.score, ev.hessian)
        if not np.isfinite(ev.loglik):
            return np.inf, np.zeros_like(x)
        return -ev.loglik, -g

    res = optimize.minimize(
        objective,
        np.asarray(x0, dtype=np.float64),
        jac=True,
        method="BFGS",
        options={"gtol": 1e-6, "maxiter": cfg.max_iter},
    )
    diag, ev = _newton(lik, kind, res.x, cfg, index)
    diag = diag._replace(
        start=tuple(float(v) for v in x0), iterations=diag.iterations + int(res.nit)
    )
    return diag, ev


def _starts_for(
    kind: ModelKind, cfg: FitConfig, extra: Sequence[Tuple[float, float]] = ()
):
    starts = list(cfg.starts) + [tuple(s) for s in extra]
    if kind is ModelKind.CCM:
        # Distinct alphas, in order of first appearance.
        return [np.array([a]) for a in dict.fromkeys(a for a, _ in starts)]
    return [np.array(s, dtype=np.float64) for s in starts]


def std_errors_from_hessian(hessian: np.ndarray) -> np.ndarray:
    r"""Square roots of the diagonal of the inverse negative Hessian."""
    hessian = np.atleast_2d(np.asarray(hessian, dtype=np.float64))
    if hessian.size == 0:
        return np.zeros(0)
    if not _is_negative_definite(hessian):
        raise DegenerateError("Hessian is not negative definite: no standard errors")
    covariance = linalg.inv(-hessian)
    return np.sqrt(np.diag(covariance))


def std_errors(result: FitResult) -> np.ndarray:
    if not result.converged:
        raise DegenerateError("Standard errors need a converged fit")
    n_free = result.kind.free_params
    return std_errors_from_hessian(result.hessian[:n_free, :n_free])


def fit_likelihood(
    lik: LogLikelihood,
    kind: ModelKind = ModelKind.FCM,
    cfg: Optional[FitConfig] = None,
    extra_starts: Sequence[Tuple[float, float]] = (),
) -> FitResult:
    r"""
    Maximize ``lik`` under the constraints of ``kind``. The winner is the
    converged run with the highest loglik; ties go to the earliest start.
    Raises :class:`ConvergenceError` with per-start diagnostics when no run
    converges.
    """
    cfg = cfg or FitConfig()
    n_depts = len(lik.cohort)

    if kind is ModelKind.NCM:
        ev = lik.evaluate(ModelTheta(0.0, 0.0))
        return FitResult(
            kind=kind,
            theta_hat=ModelTheta(0.0, 0.0),
            loglik=ev.loglik,
            hessian=ev.hessian,
            mode=lik.mode,
            n_depts=n_depts,
            floored=ev.floored,
        )

    runner = _newton if cfg.method == "newton" else _bfgs
    starts = _starts_for(kind, cfg, extra_starts)
    to_theta, _ = _free_view(kind)

    best: Optional[Tuple[StartDiagnostic, Evaluation]] = None
    diagnostics: List[StartDiagnostic] = []
    progress = tqdm(starts, desc=f"{kind.name} starts", disable=not cfg.verbose)
    for index, x0 in enumerate(progress):
        diag, ev = runner(lik, kind, x0, cfg, index)
        diagnostics.append(diag)
        if diag.converged and (best is None or diag.loglik > best[0].loglik):
            best = (diag, ev)

    if best is None:
        raise ConvergenceError(
            f"{kind.name} fit did not converge from any of {len(starts)} starts",
            diagnostics,
        )

    diag, ev = best
    n_free = kind.free_params
    negative_definite = _is_negative_definite(ev.hessian[:n_free, :n_free])
    result = FitResult(
        kind=kind,
        theta_hat=to_theta(np.array(diag.theta)),
        loglik=diag.loglik,
        hessian=ev.hessian,
        std_errors=np.full(n_free, np.nan),
        converged=True,
        negative_definite=negative_definite,
        grad_norm=diag.grad_norm,
        iterations=diag.iterations,
        n_starts_used=len(starts),
        mode=lik.mode,
        n_depts=n_depts,
        floored=ev.floored,
        diagnostics=tuple(diagnostics),
    )
    if negative_definite:
        result = replace(result, std_errors=std_errors(result))
    return result


def fit(
    cohort: Cohort,
    kind: ModelKind = ModelKind.FCM,
    mode: str = "micro",
    cfg: Optional[FitConfig] = None,
) -> FitResult:
    return fit_likelihood(make_likelihood(cohort, mode), kind, cfg)


def wald_test(
    result: FitResult,
    param: str = "beta",
    null_value: float = 0.0,
    alternative: str = "two-sided",
) -> WaldTest:
    r"""
    Wald test of ``param == null_value``. ``alternative`` is ``"two-sided"``,
    ``"less"`` (param below the null) or ``"greater"``.
    """
    se = result.se(param)
    if not se > 0:
        raise DegenerateError(f"Standard error of '{param}' is not positive: {se}")

    estimate = result.theta_hat.alpha if param == "alpha" else result.theta_hat.beta
    z = (estimate - null_value) / se

    if alternative == "two-sided":
        p_value = erfc(abs(z) / math.sqrt(2.0))
    elif alternative == "less":
        p_value = norm_cdf(z)
    elif alternative == "greater":
        p_value = norm_cdf(-z)
    else:
        raise DomainError(f"Unknown alternative '{alternative}'")
    return WaldTest(float(z), float(p_value))


def lrt(full: FitResult, nested: FitResult) -> LrtResult:
    df = full.kind.free_params - nested.kind.free_params
    if df < 1:
        raise DomainError(f"{nested.kind.name} is not nested in {full.kind.name}")

    stat = 2.0 * (full.loglik - nested.loglik)
    if stat < -LRT_SLACK:
        raise ConvergenceError(
            f"{nested.kind.name} loglik {nested.loglik:.6f} exceeds {full.kind.name} "
            f"loglik {full.loglik:.6f}; the {full.kind.name} fit is not a maximum"
        )
    stat = max(stat, 0.0)
    return LrtResult(stat, df, float(chi2_sf(stat, df)))


@dataclass(frozen=True)
class NestedFits:
    fits: Dict[ModelKind, FitResult]
    lrt_fcm_ncm: LrtResult
    lrt_fcm_ccm: LrtResult
    lrt_ccm_ncm: LrtResult


def fit_nested(lik: LogLikelihood, cfg: Optional[FitConfig] = None) -> NestedFits:
    r"""
    Fit NCM, CCM and FCM on the same likelihood. The CCM optimum is added as
    a starting point of the FCM search so that the FCM loglik is never below
    the CCM one.
    """
    ncm = fit_likelihood(lik, ModelKind.NCM, cfg)
    ccm = fit_likelihood(lik, ModelKind.CCM, cfg, extra_starts=[(0.0, 0.0)])
    fcm = fit_likelihood(lik, ModelKind.FCM, cfg, extra_starts=[tuple(ccm.theta_hat)])

    return NestedFits(
        fits={ModelKind.NCM: ncm, ModelKind.CCM: ccm, ModelKind.FCM: fcm},
        lrt_fcm_ncm=lrt(fcm, ncm),
        lrt_fcm_ccm=lrt(fcm, ccm),
        lrt_ccm_ncm=lrt(ccm, ncm),
    )
