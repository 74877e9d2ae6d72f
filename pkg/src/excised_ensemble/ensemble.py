"""Rejection sampling of the excised ensemble and empirical statistics:
first-eigenvalue and one-level histograms, CDFs, and the mean-CDF-distance
error measure used to compare distributions.
"""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError
from .haar import eigenphases_batch, log_char_poly_batch, max_log_char_poly, sample_so2n_batch

__all__ = [
    "ExcisionSpec",
    "SampleSummary",
    "Histogram",
    "sample_excised",
    "first_eigenvalue_distribution",
    "empirical_one_level_density",
    "cdf_distance",
    "write_histogram_csv",
    "read_histogram_csv",
    "summary_json_dict",
]

_ACCEPTANCE_PROBE = 100_000


@dataclass(frozen=True)
class ExcisionSpec:
    """Matrix half-size N and natural-log cutoff X defining the excised ensemble."""

    n_pairs: int
    log_cutoff: float

    def __post_init__(self):
        if self.n_pairs < 1:
            raise DomainError("n_pairs must be >= 1")
        if self.log_cutoff >= max_log_char_poly(self.n_pairs):
            raise DomainError("log_cutoff >= 2N log 2: the excised ensemble is empty")


@dataclass(frozen=True)
class SampleSummary:
    total_drawn: int
    accepted: int
    acceptance_rate: float
    mean_first_phase: float


@dataclass(frozen=True)
class Histogram:
    """Binned statistic with a fixed normalization mode.

    `counts` are raw per-bin counts; `values()` renders them in the requested
    mode.  In pdf mode the rendered density integrates to `total_mass`
    (1 for probability densities, N for one-level densities).
    `scale_factor` records the horizontal rescaling applied to the samples
    before binning.
    """

    bin_edges: np.ndarray
    counts: np.ndarray
    mode: str = "counts"
    scale_factor: float = 1.0
    total_mass: float = 1.0

    def __post_init__(self):
        if len(self.counts) != len(self.bin_edges) - 1:
            raise DomainError("need len(counts) == len(bin_edges) - 1")
        if np.any(np.diff(self.bin_edges) <= 0):
            raise DomainError("bin edges must be strictly ascending")
        if self.mode not in ("counts", "pdf", "cdf"):
            raise DomainError(f"unknown histogram mode {self.mode!r}")
        if np.any(self.counts < 0):
            raise DomainError("counts must be nonnegative")

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.bin_edges)

    def values(self) -> np.ndarray:
        total = self.counts.sum()
        if self.mode == "counts":
            return self.counts.astype(float)
        if total == 0:
            raise DomainError("empty histogram has no normalized values")
        if self.mode == "pdf":
            return self.total_mass * self.counts / (total * self.widths)
        return np.cumsum(self.counts) / total

    def with_mode(self, mode: str) -> "Histogram":
        return replace(self, mode=mode)

    def merge(self, other: "Histogram") -> "Histogram":
        """Commutative merge of partial counts (same binning required)."""
        if not np.array_equal(self.bin_edges, other.bin_edges) or self.mode != other.mode:
            raise DomainError("histograms must share binning and mode to merge")
        return replace(self, counts=self.counts + other.counts)

    def cdf_at(self, x) -> np.ndarray:
        """Empirical CDF, piecewise linear between bin edges."""
        total = self.counts.sum()
        if total == 0:
            raise DomainError("empty histogram has no CDF")
        cum = np.concatenate([[0.0], np.cumsum(self.counts)]) / total
        return np.interp(np.asarray(x, dtype=float), self.bin_edges, cum, left=0.0, right=1.0)

    @property
    def support(self) -> tuple:
        nonzero = np.nonzero(self.counts)[0]
        if len(nonzero) == 0:
            raise DomainError("empty histogram has no support")
        return float(self.bin_edges[nonzero[0]]), float(self.bin_edges[nonzero[-1] + 1])


def default_bin_edges(n_bins: int = 100, upper: float = np.pi, scale: float = 1.0) -> np.ndarray:
    """Default binning: `n_bins` equal bins over [0, upper * scale]."""
    return np.linspace(0.0, upper * scale, n_bins + 1)


def _as_phase_matrix(stream) -> np.ndarray:
    phases = np.asarray(stream, dtype=float)
    if phases.ndim == 1:
        phases = phases[None, :]
    if phases.size == 0:
        raise DomainError("empty spectrum stream")
    return phases


def _sample_excised_single(spec: ExcisionSpec, count: int, rng, batch_size: int, min_acceptance: float):
    accepted = []
    n_accepted = 0
    total = 0
    rate_guess = 1.0
    while n_accepted < count:
        need = count - n_accepted
        batch = int(min(batch_size, max(np.ceil(1.1 * need / rate_guess), 256)))
        mats = sample_so2n_batch(spec.n_pairs, batch, rng)
        phases = eigenphases_batch(mats)
        keep = log_char_poly_batch(phases) >= spec.log_cutoff
        hits = np.nonzero(keep)[0]
        if len(hits) >= need:
            # stop at the draw yielding the final acceptance, so the reported
            # acceptance rate is a sequential estimate
            last = hits[need - 1]
            total += int(last) + 1
            accepted.append(phases[hits[:need]])
            n_accepted += need
            break
        total += batch
        if len(hits):
            accepted.append(phases[hits])
            n_accepted += len(hits)
        rate_guess = max(n_accepted / total, min_acceptance, 1e-9)
        if total >= _ACCEPTANCE_PROBE and n_accepted / total < min_acceptance:
            raise DomainError(
                f"projected acceptance rate {n_accepted / total:.2e} below floor {min_acceptance:.0e} "
                f"after {total} draws (N={spec.n_pairs}, log_cutoff={spec.log_cutoff:g})"
            )
    spectra = np.concatenate(accepted, axis=0)
    return spectra, total


def sample_excised(
    spec: ExcisionSpec,
    count: int,
    seed,
    batch_size: int = 50_000,
    min_acceptance: float = 1e-6,
    workers: int = 1,
):
    """Exactly `count` accepted eigenphase spectra of the excised ensemble.

    Rejection sampling: Haar SO(2N) matrices are drawn and those with
    log Lambda_A(1, N) < X discarded.  With `workers` > 1 the draw is split
    across independently seeded substreams (spawned from `seed`), so results
    are deterministic for fixed (seed, workers) and independent of scheduling.

    Returns (spectra, summary): spectra has shape (count, N), rows sorted.
    """
    if count < 1:
        raise DomainError("count must be >= 1")
    seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    workers = max(1, int(workers))
    shares = [count // workers + (1 if i < count % workers else 0) for i in range(workers)]
    rngs = [np.random.default_rng(s) for s in seq.spawn(workers)]
    if workers == 1:
        parts = [_sample_excised_single(spec, count, rngs[0], batch_size, min_acceptance)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_sample_excised_single, spec, share, rng, batch_size, min_acceptance)
                for share, rng in zip(shares, rngs)
                if share > 0
            ]
            parts = [f.result() for f in futures]
    spectra = np.concatenate([p[0] for p in parts], axis=0)
    total = sum(p[1] for p in parts)
    summary = SampleSummary(
        total_drawn=int(total),
        accepted=int(len(spectra)),
        acceptance_rate=len(spectra) / total,
        mean_first_phase=float(np.mean(spectra[:, 0])),
    )
    return spectra, summary


def first_eigenvalue_distribution(stream, bin_edges, scale: float = 1.0) -> Histogram:
    """Probability density histogram of the smallest eigenphase, with samples
    multiplied by `scale` (mean-matching rescale) before binning."""
    phases = _as_phase_matrix(stream)
    firsts = phases.min(axis=1) * scale
    counts, _ = np.histogram(firsts, bins=bin_edges)
    return Histogram(np.asarray(bin_edges, float), counts, mode="pdf", scale_factor=scale, total_mass=1.0)


def empirical_one_level_density(stream, bin_edges) -> Histogram:
    """Histogram over all phases of all spectra, normalized so that the
    pdf-mode density integrates to N (one-level density convention)."""
    phases = _as_phase_matrix(stream)
    counts, _ = np.histogram(phases.ravel(), bins=bin_edges)
    return Histogram(
        np.asarray(bin_edges, float),
        counts,
        mode="pdf",
        scale_factor=1.0,
        total_mass=float(phases.shape[1]),
    )


def cdf_distance(a: Histogram, b: Histogram, grid=None, n_grid: int = 64) -> float:
    """Mean of |CDF_a - CDF_b| over a grid of evenly spaced points.

    The default grid spans the support of `b` (the reference data) with
    `n_grid` points.  Raises DomainError when the supports are disjoint.
    """
    lo_a, hi_a = a.support
    lo_b, hi_b = b.support
    if hi_a <= lo_b or hi_b <= lo_a:
        raise DomainError("histogram supports are disjoint")
    if grid is None:
        grid = np.linspace(lo_b, hi_b, n_grid)
    grid = np.asarray(grid, dtype=float)
    return float(np.mean(np.abs(a.cdf_at(grid) - b.cdf_at(grid))))


def write_histogram_csv(hist: Histogram, path) -> None:
    """CSV rows bin_left,bin_right,value in the histogram's mode."""
    values = hist.values()
    with open(path, "w", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_left", "bin_right", "value"])
        for left, right, val in zip(hist.bin_edges[:-1], hist.bin_edges[1:], values):
            writer.writerow([repr(float(left)), repr(float(right)), repr(float(val))])


def read_histogram_csv(path, mode: str = "pdf") -> Histogram:
    """Rebuild a histogram from a bin_left,bin_right,value CSV.

    Values are interpreted as densities when mode='pdf' and as raw counts
    when mode='counts'; either way they are stored as (scaled) counts, which
    is all the CDF machinery needs.
    """
    lefts, rights, vals = [], [], []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            lefts.append(float(row["bin_left"]))
            rights.append(float(row["bin_right"]))
            vals.append(float(row["value"]))
    if not lefts:
        raise DomainError(f"no histogram rows in {path}")
    edges = np.asarray(lefts + [rights[-1]], dtype=float)
    vals = np.asarray(vals, dtype=float)
    counts = vals * np.diff(edges) if mode == "pdf" else vals
    return Histogram(edges, counts, mode="pdf")


def summary_json_dict(summary: SampleSummary, spec: ExcisionSpec, seed) -> dict:
    return {
        "total_drawn": summary.total_drawn,
        "accepted": summary.accepted,
        "acceptance_rate": summary.acceptance_rate,
        "mean_first_phase": summary.mean_first_phase,
        "seed": seed,
        "n_pairs": spec.n_pairs,
        "log_cutoff": spec.log_cutoff,
    }


def write_summary_json(summary: SampleSummary, spec: ExcisionSpec, seed, path) -> None:
    with open(path, "w", newline="\n") as fh:
        json.dump(summary_json_dict(summary, spec, seed), fh, indent=2, sort_keys=True)
        fh.write("\n")
