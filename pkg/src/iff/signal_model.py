"""Source / measurement model for multi-illumination line spectral data.

A collection of point sources sum_j a_j * delta(y_j) is observed through T
unknown illumination patterns; each measurement row samples the band-limited
Fourier transform of the illuminated sources on the symmetric grid
w_k = (k/K) * Omega, k = -K..K, plus bounded noise:

    Y[t, k] = sum_j L[t, j] * a_j * exp(i y_j w_k) + W[t, k],  |W| < sigma.

Everything is deterministic given explicit integer seeds.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientMeasurementsError
from .validation import check_measurement_matrix, check_positive, check_positive_int


@dataclass(frozen=True)
class SamplingGrid:
    """Symmetric frequency grid w_k = k * (omega / k_half), k = -K..K."""

    omega: float
    k_half: int

    def __post_init__(self):
        check_positive(self.omega, "omega")
        check_positive_int(self.k_half, "k_half")

    @property
    def spacing(self) -> float:
        return self.omega / self.k_half

    @property
    def n_nodes(self) -> int:
        return 2 * self.k_half + 1

    @property
    def nodes(self) -> np.ndarray:
        # k * (omega/K) keeps w_{-k} == -w_k exact in floating point
        return np.arange(-self.k_half, self.k_half + 1) * self.spacing

    @property
    def rayleigh(self) -> float:
        """Classical resolution scale pi / omega."""
        return math.pi / self.omega


def make_grid(omega: float, k_half: int) -> SamplingGrid:
    """Build the sampling grid for cutoff ``omega`` and half-count ``k_half``."""
    return SamplingGrid(omega, k_half)


@dataclass(frozen=True)
class SourceModel:
    """Ground-truth point sources: real positions with complex amplitudes."""

    positions: np.ndarray
    amplitudes: np.ndarray

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        amp = np.asarray(self.amplitudes, dtype=np.complex128)
        if pos.ndim != 1 or pos.size < 1:
            raise ValueError("positions must be a non-empty 1-D array")
        if amp.shape != pos.shape:
            raise ValueError("amplitudes must match positions in length")
        if np.unique(pos).size != pos.size:
            raise ValueError("source positions must be pairwise distinct")
        object.__setattr__(self, "positions", pos)
        object.__setattr__(self, "amplitudes", amp)

    @property
    def n(self) -> int:
        return self.positions.size

    @property
    def separation(self) -> float:
        """Minimum pairwise distance tau (inf for a single source)."""
        if self.n == 1:
            return math.inf
        gaps = np.diff(np.sort(self.positions))
        return float(gaps.min())

    def in_theory_region(self, grid: SamplingGrid) -> bool:
        """Whether all sources lie in [-pi/(2 omega), pi/(2 omega)]."""
        half = math.pi / (2.0 * grid.omega)
        return bool(np.all(np.abs(self.positions) <= half))


@dataclass(frozen=True)
class IlluminationSpec:
    """I.i.d. law for illumination matrix entries, with T patterns."""

    kind: str
    t_count: int
    lo: float = 0.0
    hi: float = 0.0
    mean_: float = 0.0
    var_: float = 0.0

    @classmethod
    def uniform(cls, lo: float, hi: float, t_count: int) -> "IlluminationSpec":
        if not hi > lo:
            raise ValueError(f"uniform law needs hi > lo, got [{lo}, {hi}]")
        return cls("uniform", check_positive_int(t_count, "t_count"), lo=lo, hi=hi)

    @classmethod
    def gaussian(cls, mean: float, var: float, t_count: int) -> "IlluminationSpec":
        check_positive(var, "var")
        return cls("gaussian", check_positive_int(t_count, "t_count"),
                   mean_=mean, var_=var)

    @property
    def mean(self) -> float:
        if self.kind == "uniform":
            return 0.5 * (self.lo + self.hi)
        return self.mean_

    @property
    def variance(self) -> float:
        if self.kind == "uniform":
            return (self.hi - self.lo) ** 2 / 12.0
        return self.var_


def draw_illumination(spec: IlluminationSpec, n: int, seed: int) -> np.ndarray:
    """Draw a T x n illumination matrix with i.i.d. entries from ``spec``.

    Requires at least as many patterns as sources (T >= n).
    """
    n = check_positive_int(n, "n")
    if spec.t_count < n:
        raise InsufficientMeasurementsError(
            f"need t_count >= n measurements, got T={spec.t_count} < n={n}"
        )
    rng = np.random.default_rng(seed)
    if spec.kind == "uniform":
        return rng.uniform(spec.lo, spec.hi, size=(spec.t_count, n))
    if spec.kind == "gaussian":
        return rng.normal(spec.mean_, math.sqrt(spec.var_), size=(spec.t_count, n))
    raise ValueError(f"unknown illumination kind {spec.kind!r}")


@dataclass(frozen=True)
class NoiseSpec:
    """Bounded noise: every entry has modulus strictly below ``sigma``."""

    sigma: float
    seed: int = 0

    def __post_init__(self):
        check_positive(self.sigma, "sigma", strict=False)


def draw_noise(spec: NoiseSpec, t_count: int, grid: SamplingGrid) -> np.ndarray:
    """Draw a T x (2K+1) bounded noise matrix.

    Real and imaginary parts are i.i.d. uniform on (-sigma/sqrt(2),
    sigma/sqrt(2)), so |W| < sigma holds by construction. sigma = 0 yields
    the zero matrix.
    """
    t_count = check_positive_int(t_count, "t_count")
    shape = (t_count, grid.n_nodes)
    if spec.sigma == 0.0:
        return np.zeros(shape, dtype=np.complex128)
    rng = np.random.default_rng(spec.seed)
    half = spec.sigma / math.sqrt(2.0)
    re = rng.uniform(-half, half, size=shape)
    im = rng.uniform(-half, half, size=shape)
    return re + 1j * im


def vandermonde(support, grid: SamplingGrid) -> np.ndarray:
    """(2K+1) x m matrix with column p = exp(i * support[p] * w_k), k = -K..K."""
    support = np.atleast_1d(np.asarray(support, dtype=float))
    if support.size == 0:
        raise ValueError("support must be non-empty")
    return np.exp(1j * np.outer(grid.nodes, support))


def synthesize(sources: SourceModel, illumination: np.ndarray,
               grid: SamplingGrid) -> "MeasurementSet":
    """Noiseless measurements Y = L diag(a) E on the grid."""
    L = np.asarray(illumination, dtype=float)
    if L.ndim != 2 or L.shape[1] != sources.n:
        raise ValueError(
            f"illumination must be T x n with n={sources.n}, got {L.shape}"
        )
    if not np.all(np.isfinite(L)):
        raise ValueError("illumination matrix contains non-finite entries")
    E = np.exp(1j * np.outer(sources.positions, grid.nodes))
    data = (L * sources.amplitudes[np.newaxis, :]) @ E
    return MeasurementSet(data=data, grid=grid)


def snr_of(sources: SourceModel, sigma: float) -> float:
    """Signal-to-noise ratio min_j |a_j| / sigma (inf when sigma = 0)."""
    check_positive(sigma, "sigma", strict=False)
    m_min = float(np.abs(sources.amplitudes).min())
    if sigma == 0.0:
        return math.inf
    return m_min / sigma


def focusing_gain(illumination: np.ndarray, j: int) -> float:
    """Residual norm of column j against the span of the other columns.

    This is the effective amplitude scale that a perfectly focused
    combination puts on source j; with i.i.d. pattern entries its squared
    mean is at least (T - n + 1) * variance.
    """
    L = np.asarray(illumination, dtype=float)
    t_count, n = L.shape
    alpha = L[:, j]
    others = np.delete(L, j, axis=1)
    if others.shape[1] == 0:
        return float(np.linalg.norm(alpha))
    coef, *_ = np.linalg.lstsq(others, alpha, rcond=None)
    return float(np.linalg.norm(alpha - others @ coef))


@dataclass(frozen=True)
class MeasurementSet:
    """T x (2K+1) complex samples on a shared grid."""

    data: np.ndarray
    grid: SamplingGrid

    def __post_init__(self):
        data = check_measurement_matrix(self.data, "data")
        if data.shape[1] != self.grid.n_nodes:
            raise ValueError(
                f"data has {data.shape[1]} columns but grid has "
                f"{self.grid.n_nodes} nodes"
            )
        object.__setattr__(self, "data", data)

    @property
    def t_count(self) -> int:
        return self.data.shape[0]

    def with_noise(self, spec: NoiseSpec) -> "MeasurementSet":
        noise = draw_noise(spec, self.t_count, self.grid)
        return MeasurementSet(self.data + noise, self.grid)


# ---------------------------------------------------------------------------
# scenario JSON schema and measurement dumps
# ---------------------------------------------------------------------------

def scenario_to_dict(grid: SamplingGrid, sources: SourceModel,
                     illumination: IlluminationSpec, sigma: float,
                     seed: int) -> dict:
    """Serialize a synthetic scenario to the JSON schema."""
    if illumination.kind == "uniform":
        illum = {"kind": "uniform", "lo": illumination.lo,
                 "hi": illumination.hi, "t_count": illumination.t_count}
    else:
        illum = {"kind": "gaussian", "mean": illumination.mean_,
                 "var": illumination.var_, "t_count": illumination.t_count}
    return {
        "omega": grid.omega,
        "k_half": grid.k_half,
        "sources": [
            {"y": float(y), "re": float(a.real), "im": float(a.imag)}
            for y, a in zip(sources.positions, sources.amplitudes)
        ],
        "illumination": illum,
        "sigma": sigma,
        "seed": seed,
    }


def scenario_from_dict(doc: dict):
    """Parse the scenario schema into model objects.

    Returns (grid, sources, illumination_spec, sigma, seed).
    """
    grid = make_grid(float(doc["omega"]), int(doc["k_half"]))
    entries = doc["sources"]
    sources = SourceModel(
        positions=np.array([s["y"] for s in entries], dtype=float),
        amplitudes=np.array(
            [complex(s.get("re", 0.0), s.get("im", 0.0)) for s in entries]
        ),
    )
    illum_doc = doc["illumination"]
    kind = illum_doc["kind"]
    t_count = int(illum_doc["t_count"])
    if kind == "uniform":
        spec = IlluminationSpec.uniform(float(illum_doc["lo"]),
                                        float(illum_doc["hi"]), t_count)
    elif kind == "gaussian":
        spec = IlluminationSpec.gaussian(float(illum_doc["mean"]),
                                         float(illum_doc["var"]), t_count)
    else:
        raise ValueError(f"unknown illumination kind {kind!r}")
    sigma = check_positive(float(doc["sigma"]), "sigma", strict=False)
    return grid, sources, spec, sigma, int(doc["seed"])


def load_scenario(path):
    with open(path, "r", encoding="utf-8") as fh:
        return scenario_from_dict(json.load(fh))


def save_scenario(path, doc: dict):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def synthesize_scenario(grid: SamplingGrid, sources: SourceModel,
                        illumination: IlluminationSpec, sigma: float,
                        seed: int):
    """Draw illumination and noise from a single seed and synthesize data.

    The seed is split into independent (illumination, noise) child seeds so
    that the same scenario always produces the same measurements.

    Returns (measurements, illumination_matrix).
    """
    illum_seed, noise_seed = np.random.SeedSequence(seed).spawn(2)
    L = draw_illumination(illumination, sources.n,
                          seed=illum_seed.generate_state(1)[0])
    clean = synthesize(sources, L, grid)
    noisy = clean.with_noise(NoiseSpec(sigma, seed=noise_seed.generate_state(1)[0]))
    return noisy, L


def dump_measurements_csv(path, measurements: MeasurementSet):
    """Write measurements as CSV rows ``t,k,re,im``."""
    k_half = measurements.grid.k_half
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t", "k", "re", "im"])
        for t in range(measurements.t_count):
            row = measurements.data[t]
            for idx, k in enumerate(range(-k_half, k_half + 1)):
                # repr of builtin float gives shortest round-trip decimal
                writer.writerow([t, k, repr(float(row[idx].real)),
                                 repr(float(row[idx].imag))])
