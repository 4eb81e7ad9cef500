"""Focusing optimization, single-source MUSIC, clean-up and clustering.

One localization round runs T independent descents of the trace-ratio
objective, one per canonical start q0 = e_j, localizes each nearly rank-one
combination with a single-source MUSIC scan, rejects outcomes whose final
objective exceeds the threshold Gamma = (1 + 4K/SNR^2)^2, and averages the
surviving positions cluster by cluster.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateCombinationError
from .hankel import HankelStack, combine, focus_value_and_gradient
from .validation import check_positive, check_positive_int, check_window

_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

# line-search and curvature guards for the quasi-Newton descent
_WOLFE_C1 = 1e-4
_WOLFE_C2 = 0.9
_MAX_BRACKET = 30
_MAX_ZOOM = 40
_GRAD_TOL = 1e-14
_STALL_TOL = 1e-16
_STALL_LIMIT = 3
_CURVATURE_GUARD = 1e-12
_MAX_RESTARTS = 3
_MAX_ESCAPES = 8
_HESS_FD_STEP = 1e-7
_NEG_EIG_TOL = 1e-12


@dataclass(frozen=True)
class FocusOutcome:
    """One multi-start result: final coefficients, objective, position."""

    q_final: np.ndarray
    f_value: float
    position: float
    start_index: int


@dataclass(frozen=True)
class RecoveredSupport:
    """Sorted, strictly increasing recovered source positions."""

    positions: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float).ravel()
        if pos.size > 1 and not np.all(np.diff(pos) > 0):
            raise ValueError("support positions must be strictly increasing")
        object.__setattr__(self, "positions", pos)

    @property
    def count(self) -> int:
        return self.positions.size

    def __len__(self) -> int:
        return self.positions.size

    def __iter__(self):
        return iter(self.positions)


@dataclass(frozen=True)
class CleanupConfig:
    """Acceptance threshold inputs for one localization round.

    ``snr`` is the per-round signal-to-noise proxy (amplitude scale over
    effective noise level); ``k_half`` the sampling half-count of the rows
    the stack was built from. ``gamma_override`` replaces the derived
    threshold when set.
    """

    snr: float
    k_half: int
    cluster_radius: float
    gamma_override: float | None = None

    def __post_init__(self):
        check_positive(self.snr, "snr", allow_inf=True)
        check_positive_int(self.k_half, "k_half")
        check_positive(self.cluster_radius, "cluster_radius")

    @property
    def gamma(self) -> float:
        if self.gamma_override is not None:
            return self.gamma_override
        return gamma_threshold(self.snr, self.k_half)


def gamma_threshold(snr: float, k_half: int) -> float:
    """Clean-up acceptance bound (1 + 4K (1/SNR)^2)^2."""
    check_positive(snr, "snr", allow_inf=True)
    check_positive_int(k_half, "k_half")
    if math.isinf(snr):
        return 1.0
    return (1.0 + 4.0 * k_half / (snr * snr)) ** 2


def _zoom(phi, f0, slope0, a_lo, f_lo, g_lo, a_hi, f_hi):
    """Shrink a bracketing interval until the strong Wolfe conditions hold.

    Plain bisection; the objective is cheap enough that interpolation buys
    nothing. Falls back on the sufficient-decrease endpoint when the
    curvature condition cannot be met inside the bracket.
    """
    for _ in range(_MAX_ZOOM):
        a = 0.5 * (a_lo + a_hi)
        fa, ga, da = phi(a)
        if fa > f0 + _WOLFE_C1 * a * slope0 or fa >= f_lo:
            a_hi, f_hi = a, fa
        else:
            if abs(da) <= -_WOLFE_C2 * slope0:
                return a, fa, ga
            if da * (a_hi - a_lo) >= 0.0:
                a_hi, f_hi = a_lo, f_lo
            a_lo, f_lo, g_lo = a, fa, ga
        if abs(a_hi - a_lo) <= 1e-20 * max(1.0, a_lo):
            break
    if a_lo > 0.0 and g_lo is not None:
        return a_lo, f_lo, g_lo
    return None, None, None


def _wolfe_search(eval_at, q, d, f0, g0, slope0):
    """Strong Wolfe line search (bracketing stage, then zoom).

    Returns (alpha, f, grad) at an acceptable step, or (None, None, None)
    when no decrease can be found along d.
    """

    def phi(a):
        fv, gv = eval_at(q + a * d)
        dv = math.inf if gv is None else float(gv @ d)
        return fv, gv, dv

    a_prev, f_prev, g_prev = 0.0, f0, g0
    a = 1.0
    for i in range(_MAX_BRACKET):
        fa, ga, da = phi(a)
        if fa > f0 + _WOLFE_C1 * a * slope0 or (i > 0 and fa >= f_prev):
            return _zoom(phi, f0, slope0, a_prev, f_prev, g_prev, a, fa)
        if abs(da) <= -_WOLFE_C2 * slope0:
            return a, fa, ga
        if da >= 0.0:
            return _zoom(phi, f0, slope0, a, fa, ga, a_prev, f_prev)
        a_prev, f_prev, g_prev = a, fa, ga
        a *= 2.0
    return None, None, None


def optimize_focus(stack: HankelStack, q0, eps: float, max_iters: int = 500):
    """Drive the trace-ratio objective toward 1 from a single start.

    BFGS on the inverse Hessian with the analytic gradient and a strong
    Wolfe line search; the objective's floor near a rank-one combination is
    an extremely flat valley, and sufficient-decrease-only searches stall
    orders of magnitude above it. Stops as soon as f < 1 + eps, when the
    gradient vanishes, after repeated relative stalls below 1e-16, or after
    ``max_iters`` accepted steps; always returns the best visited point. A
    degenerate start is retried up to 3 times from deterministic small
    perturbations; if every retry is degenerate the start is reported
    failed as (q0, inf).

    Returns (q, f) with q unit-norm and its largest component positive.
    """
    check_positive(eps, "eps")
    max_iters = check_positive_int(max_iters, "max_iters")
    q_init = np.asarray(q0, dtype=float).copy()
    if q_init.shape != (stack.t_count,):
        raise ValueError(
            f"q0 must have length {stack.t_count}, got shape {q_init.shape}"
        )

    rng = np.random.default_rng(0x1FF)
    scale = float(np.linalg.norm(q_init)) or 1.0
    q = q_init
    f = g = None
    for attempt in range(_MAX_RESTARTS + 1):
        norm = float(np.linalg.norm(q))
        if norm > 0:
            cand = q / norm
            try:
                f, g = focus_value_and_gradient(stack, cand)
                q = cand
                break
            except DegenerateCombinationError:
                pass
        if attempt == _MAX_RESTARTS:
            return q_init, math.inf
        q = q_init + 1e-6 * scale * rng.standard_normal(q_init.size)

    t_count = q.size
    best_q, best_f = q.copy(), f
    target = 1.0 + eps

    def eval_at(point):
        try:
            return focus_value_and_gradient(stack, point)
        except DegenerateCombinationError:
            return math.inf, None

    def descend(q, f, g):
        nonlocal best_q, best_f
        h_inv = np.eye(t_count)
        stalls = 0
        for _ in range(max_iters):
            if best_f < target:
                break
            if float(np.max(np.abs(g))) <= _GRAD_TOL:
                break
            d = -h_inv @ g
            slope = float(g @ d)
            if slope >= 0.0:
                # curvature estimate lost its positive-definiteness; reset
                h_inv = np.eye(t_count)
                d = -g
                slope = float(g @ d)

            alpha, f_new, g_new = _wolfe_search(eval_at, q, d, f, g, slope)
            if alpha is None:
                if not np.array_equal(h_inv, np.eye(t_count)):
                    # retry the steepest-descent direction before giving up
                    h_inv = np.eye(t_count)
                    continue
                break

            s = alpha * d
            y_vec = g_new - g
            q = q + s
            if f_new < best_f:
                best_f, best_q = f_new, q.copy()
            if abs(f - f_new) <= _STALL_TOL * max(1.0, abs(f)):
                stalls += 1
            else:
                stalls = 0
            sty = float(s @ y_vec)
            if sty > _CURVATURE_GUARD * np.linalg.norm(s) * np.linalg.norm(y_vec):
                rho = 1.0 / sty
                v = np.eye(t_count) - rho * np.outer(s, y_vec)
                h_inv = v @ h_inv @ v.T + rho * np.outer(s, s)
            f, g = f_new, g_new
            if stalls >= _STALL_LIMIT:
                break

    descend(q, f, g)
    # The basin floor is a nearly flat valley of almost-rank-one blends
    # whose downhill exits are negative-curvature directions far below the
    # gradient scale; first-order steps cannot find them. Walk out along
    # the most negative Hessian eigenvector until the curvature is gone or
    # the step stops paying.
    for _ in range(_MAX_ESCAPES):
        if best_f < target:
            break
        step = _negative_curvature_step(stack, best_q, best_f, eval_at)
        if step is None:
            break
        q, f, g = step
        if f < best_f:
            best_f, best_q = f, q.copy()
        descend(q, f, g)

    norm = float(np.linalg.norm(best_q))
    if norm > 0:
        best_q = best_q / norm
        lead = int(np.argmax(np.abs(best_q)))
        if best_q[lead] < 0:
            best_q = -best_q
    return best_q, best_f


def _negative_curvature_step(stack, q, f, eval_at):
    """Downhill move along the most negative Hessian eigendirection.

    The Hessian comes from central differences of the analytic gradient.
    Returns (q_new, f_new, g_new) strictly below f, or None when the point
    has no usable negative curvature or no decrease is found.
    """
    n = q.size
    scale = max(1.0, float(np.linalg.norm(q)))
    step = _HESS_FD_STEP * scale
    hess = np.empty((n, n))
    for i in range(n):
        probe = np.zeros(n)
        probe[i] = step
        _, g_plus = eval_at(q + probe)
        _, g_minus = eval_at(q - probe)
        if g_plus is None or g_minus is None:
            return None
        hess[:, i] = (g_plus - g_minus) / (2.0 * step)
    eigvals, eigvecs = np.linalg.eigh(0.5 * (hess + hess.T))
    if eigvals[0] >= -_NEG_EIG_TOL * max(1.0, float(np.abs(eigvals).max())):
        return None
    direction = eigvecs[:, 0]
    for sign in (1.0, -1.0):
        alpha = scale
        for _ in range(60):
            cand = q + sign * alpha * direction
            f_cand, g_cand = eval_at(cand)
            if f_cand < f:
                return cand, f_cand, g_cand
            alpha *= 0.5
    return None


def _golden_max(fun, a: float, b: float, tol: float) -> float:
    """Golden-section maximization of a unimodal function on [a, b]."""
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    while b - a > tol:
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
    return 0.5 * (a + b)


def default_coarse_points(window, m: int, spacing: float) -> int:
    """Grid size giving ~2048 points per resolution length pi/aperture."""
    lo, hi = window
    aperture = max((m - 1) * spacing, spacing)
    return max(64, int(math.ceil(2048.0 * (hi - lo) * aperture / math.pi)))


def music_localize_single(h, spacing: float, window, coarse_points=None) -> float:
    """Position of the single dominant source encoded by a Hankel matrix.

    Takes the top left singular vector u of h and maximizes the imaging
    function J(y) = |phi(y)| / |(I - u u*) phi(y)| with steering vector
    phi(y)_i = e^{i y i spacing}. Since |phi(y)|^2 = m, maximizing J is
    equivalent to maximizing the correlation |u* phi(y)|, which stays finite
    even when the matrix is exactly rank one; the scan works on the
    correlation. Coarse grid argmax, then golden-section refinement to
    1e-10 of the window width.

    The window must fit inside one aliasing period 2*pi/spacing.
    """
    h = np.asarray(h, dtype=np.complex128)
    lo, hi = check_window(window)
    check_positive(spacing, "spacing")
    if hi - lo > 2.0 * math.pi / spacing:
        raise ValueError("window exceeds one aliasing period of the grid")
    if not np.linalg.norm(h) > 0:
        raise DegenerateCombinationError("cannot localize a rank-0 matrix")

    u = np.linalg.svd(h)[0][:, 0]
    m = h.shape[0]
    if coarse_points is None:
        coarse_points = default_coarse_points((lo, hi), m, spacing)
    phases = np.arange(m) * spacing
    u_conj = u.conj()

    grid = np.linspace(lo, hi, int(coarse_points))
    corr = np.abs(np.exp(1j * np.outer(grid, phases)) @ u_conj)
    k = int(np.argmax(corr))
    a = grid[max(k - 1, 0)]
    b = grid[min(k + 1, grid.size - 1)]

    def corr_at(y):
        return abs(np.exp(1j * y * phases) @ u_conj)

    y = _golden_max(corr_at, a, b, tol=1e-10 * (hi - lo))

    # Golden section compares nearly equal function values near the peak and
    # bottoms out around sqrt(machine eps); polish with Newton on the
    # stationarity condition d|u* phi|^2/dy = 2 Re(conj(c) c') = 0.
    step_cap = max(b - a, 1e-12 * (hi - lo))
    for _ in range(6):
        e = np.exp(1j * y * phases)
        c = u_conj @ e
        c1 = u_conj @ (1j * phases * e)
        c2 = u_conj @ (-(phases * phases) * e)
        slope = (np.conj(c) * c1).real
        curv = abs(c1) ** 2 + (np.conj(c) * c2).real
        if curv >= 0:
            break
        delta = -slope / curv
        if abs(delta) > step_cap:
            break
        y = min(max(y + delta, lo), hi)
        if abs(delta) <= 1e-15 * max(1.0, abs(y)):
            break
    return float(y)


def clean_up(outcomes, gamma: float):
    """Keep the outcomes whose final objective is at most gamma."""
    if gamma < 1.0:
        raise ValueError(f"gamma must be >= 1, got {gamma}")
    return [o for o in outcomes if o.f_value <= gamma]


def cluster_average(positions, radius: float) -> RecoveredSupport:
    """Single-linkage clustering: split sorted positions at gaps > radius.

    Returns the per-cluster arithmetic means. Adjacent means are separated
    by more than radius because each mean lies inside its cluster's span.
    """
    check_positive(radius, "radius")
    pos = np.sort(np.asarray(positions, dtype=float).ravel())
    if pos.size == 0:
        return RecoveredSupport(np.empty(0))
    cuts = np.nonzero(np.diff(pos) > radius)[0] + 1
    means = np.array([grp.mean() for grp in np.split(pos, cuts)])
    return RecoveredSupport(means)


def focus_and_localize(stack: HankelStack, cfg: CleanupConfig, eps: float,
                       window, coarse_points=None, max_iters: int = 500):
    """One full focusing round over all T canonical starts.

    For j = 1..T starts the descent at the j-th identity column, localizes
    the resulting combination, thresholds at cfg.gamma and averages the
    survivors into clusters of radius cfg.cluster_radius. Starts whose
    optimization failed carry f = inf and are always rejected.

    Returns (support, outcomes) with outcomes in start order.
    """
    outcomes = []
    for j in range(stack.t_count):
        q0 = np.zeros(stack.t_count)
        q0[j] = 1.0
        q, f = optimize_focus(stack, q0, eps, max_iters)
        if math.isfinite(f):
            pos = music_localize_single(combine(stack, q), stack.spacing,
                                        window, coarse_points)
        else:
            pos = math.nan
        outcomes.append(FocusOutcome(q, f, pos, j))
    kept = clean_up(outcomes, cfg.gamma)
    support = cluster_average([o.position for o in kept], cfg.cluster_radius)
    return support, outcomes
