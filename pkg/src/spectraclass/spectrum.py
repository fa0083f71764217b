"""Spectrum data model: ingestion, normalization and windowed peak lookup."""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Optional

from .errors import CannotNormalize, DomainError, EmptySpectrum, ParseError

FULL_SCALE = 100.0


@dataclass(frozen=True)
class IonTarget:
    """A target ion: chemical symbol plus its m/z."""

    symbol: str
    mz: float

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("ion symbol must be non-empty")
        if self.mz <= 0:
            raise DomainError(f"ion m/z must be positive, got {self.mz}")


@dataclass(frozen=True)
class Spectrum:
    """One acquisition spot: relative abundance versus m/z.

    Points are strictly sorted ascending by m/z with no duplicates;
    abundances are non-negative. Instances are immutable, so they are
    safe to share across parallel classification workers.
    """

    points: tuple
    id: str = ""
    position: Optional[tuple] = None

    def __post_init__(self):
        pts = tuple((float(mz), float(ab)) for mz, ab in self.points)
        if not pts:
            raise EmptySpectrum("spectrum has no points")
        for i, (mz, ab) in enumerate(pts):
            if ab < 0:
                raise DomainError(f"negative abundance {ab} at m/z {mz}")
            if mz <= 0:
                raise DomainError(f"non-positive m/z {mz}")
            if i > 0 and mz <= pts[i - 1][0]:
                raise DomainError("points must be strictly sorted by m/z")
        object.__setattr__(self, "points", pts)

    @cached_property
    def mzs(self):
        return [p[0] for p in self.points]

    @cached_property
    def max_abundance(self):
        return max(p[1] for p in self.points)


def parse_spectrum(source, format="csv", id="", position=None) -> Spectrum:
    """Parse a peak list from text.

    ``csv`` expects ``mz,abundance`` per line; ``msp-like`` expects two
    whitespace-separated columns. Blank lines and ``#`` comments are
    skipped. Duplicate m/z rows merge keeping the maximum abundance.
    """
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str):
        text = source
    else:
        text = "\n".join(source)
    if format not in ("csv", "msp-like"):
        raise ValueError(f"unknown spectrum format {format!r}")

    rows: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",") if format == "csv" else line.split()
        if len(parts) != 2:
            raise ParseError(f"expected 2 fields, got {len(parts)}", line=lineno)
        try:
            mz = float(parts[0])
            ab = float(parts[1])
        except ValueError:
            raise ParseError(f"non-numeric field in {line!r}", line=lineno) from None
        if ab < 0:
            raise DomainError(f"negative abundance on line {lineno}")
        if mz <= 0:
            raise DomainError(f"non-positive m/z on line {lineno}")
        rows[mz] = max(rows.get(mz, 0.0), ab)
    if not rows:
        raise EmptySpectrum("no peaks in input")
    return Spectrum(tuple(sorted(rows.items())), id=id, position=position)


def serialize_spectrum(s: Spectrum) -> str:
    """Render a spectrum back to the csv peak-list format (lossless)."""
    return "\n".join(f"{mz!r},{ab!r}" for mz, ab in s.points) + "\n"


def normalize(s: Spectrum, excluded: Iterable[IonTarget] = (), eps: float = 0.2) -> Spectrum:
    """Rescale so the highest peak outside the excluded ions reads 100.

    Every point is multiplied by the same factor, so excluded peaks keep
    their relative size and may land above 100. Used to discount the
    anomalously strong potassium signal before classification.
    """
    excluded = list(excluded)

    def is_excluded(mz):
        return any(abs(mz - ion.mz) <= eps for ion in excluded)

    ref = 0.0
    have_candidate = False
    for mz, ab in s.points:
        if not is_excluded(mz):
            have_candidate = True
            ref = max(ref, ab)
    if not have_candidate:
        raise CannotNormalize("all points fall within excluded ion windows")
    if ref == 0.0:
        raise CannotNormalize("all non-excluded abundances are zero")
    factor = FULL_SCALE / ref
    if not math.isfinite(factor):
        raise CannotNormalize(f"reference abundance {ref} yields a non-finite scale factor")
    pts = tuple((mz, ab * factor) for mz, ab in s.points)
    return Spectrum(pts, id=s.id, position=s.position)


def peak_abundance(s: Spectrum, chi: IonTarget, eps: float) -> float:
    """Maximum abundance within the closed window [chi.mz - eps, chi.mz + eps].

    An empty window yields 0, not an error.
    """
    if eps < 0:
        raise DomainError("eps must be non-negative")
    lo = bisect_left(s.mzs, chi.mz - eps)
    hi = bisect_right(s.mzs, chi.mz + eps)
    if lo >= hi:
        return 0.0
    return max(ab for _, ab in s.points[lo:hi])
