"""Annihilating filters for removing already-recovered sources.

A filter built on positions y_hat places unit-circle roots e^{i y_hat h}
(h the sampling step) so that the corresponding tones are zeroed exactly,
at the cost of shrinking each row by the filter degree and attenuating
every surviving source by the complex factor A_j. Filters are used only
for removal here; estimating roots from data is the localizer's job.
"""

from __future__ import annotations

import numbers
from dataclasses import dataclass

import numpy as np

from .errors import FilterTooLongError
from .validation import check_positive

__all__ = [
    "AnnihilatingFilter",
    "FilteredMeasurementSet",
    "build_filter",
    "apply_filter",
    "attenuation_factor",
]


def _step_of(grid) -> float:
    # accept a SamplingGrid or a bare sampling step
    if isinstance(grid, numbers.Real):
        return check_positive(grid, "grid_step")
    return check_positive(grid.spacing, "grid.spacing")


def _positions_of(support) -> np.ndarray:
    pos = getattr(support, "positions", support)
    pos = np.asarray(pos, dtype=float).ravel()
    if pos.size == 0:
        raise ValueError("support must contain at least one position")
    return pos


@dataclass(frozen=True)
class AnnihilatingFilter:
    """Filter coefficients with their generating roots.

    ``coeffs`` is the iterated convolution of the degree-one factors
    (1, -e^{i y_hat grid_step}), one per entry of ``roots``; the stencil
    sum_l coeffs[P-l] row[s+l] (= the valid part of a direct convolution)
    annihilates every tone at a root. Monic by construction, and
    sum |coeffs| <= 2^P.
    """

    coeffs: np.ndarray
    roots: np.ndarray
    grid_step: float

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=np.complex128).ravel()
        roots = np.asarray(self.roots, dtype=float).ravel()
        if coeffs.size != roots.size + 1:
            raise ValueError(
                f"degree {coeffs.size - 1} does not match {roots.size} roots"
            )
        check_positive(self.grid_step, "grid_step")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "roots", roots)

    @property
    def degree(self) -> int:
        return self.coeffs.size - 1


@dataclass(frozen=True)
class FilteredMeasurementSet:
    """Rows after filtering: T x (original length - degree)."""

    data: np.ndarray
    grid: object
    degree: int

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.complex128)
        if data.ndim != 2:
            raise ValueError(f"data must be 2-D, got {data.ndim}-D")
        if self.degree < 0:
            raise ValueError(f"degree must be >= 0, got {self.degree}")
        expected = self.grid.nodes.size - self.degree
        if data.shape[1] != expected:
            raise ValueError(
                f"rows have {data.shape[1]} samples, expected "
                f"{self.grid.nodes.size} - {self.degree} = {expected}"
            )
        object.__setattr__(self, "data", data)


def build_filter(support, grid) -> AnnihilatingFilter:
    """Filter whose roots sit at e^{i y_hat h} for every recovered y_hat.

    ``support`` may be a RecoveredSupport or any position sequence
    (repeated positions give a multiple root); ``grid`` a SamplingGrid or
    the bare step h.
    """
    step = _step_of(grid)
    pos = _positions_of(support)
    coeffs = np.atleast_1d(np.poly(np.exp(1j * pos * step)))
    return AnnihilatingFilter(coeffs=coeffs, roots=pos, grid_step=step)


def apply_filter(y_row, filt: AnnihilatingFilter) -> np.ndarray:
    """Boundary-free filtered measurements, length reduced by the degree.

    Accepts one row or a T-row batch; each output sample is the filter
    stencil across degree+1 consecutive input samples, so tones at filter
    roots cancel exactly and no padded boundary samples appear.
    """
    rows = np.asarray(y_row, dtype=np.complex128)
    squeeze = rows.ndim == 1
    rows = np.atleast_2d(rows)
    if rows.ndim != 2:
        raise ValueError(f"y_row must be 1-D or 2-D, got {rows.ndim}-D")
    if filt.degree >= rows.shape[1]:
        raise FilterTooLongError(
            f"filter degree {filt.degree} requires rows longer than "
            f"{filt.degree}, got {rows.shape[1]}"
        )
    out = np.stack([np.convolve(r, filt.coeffs, mode="valid") for r in rows])
    return out[0] if squeeze else out


def attenuation_factor(y: float, support, grid) -> complex:
    """Complex amplitude multiplier on a surviving source at y.

    A = prod_p (e^{i y h} - e^{i y_hat_p h}); magnitude approximately
    h^P * prod |y - y_hat_p| when all separations are small against 1/h.
    """
    step = _step_of(grid)
    pos = _positions_of(support)
    return complex(np.prod(np.exp(1j * y * step) - np.exp(1j * pos * step)))
