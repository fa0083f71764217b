"""Shared fixtures: synthetic basalt-like spectra built from ion abundances."""

import pytest

from spectraclass.rulebase import builtin_basalt
from spectraclass.spectrum import Spectrum

# m/z of a filler peak outside every rule window; pinned at 100 so the
# synthetic spectra are already on the relative-abundance scale.
FILLER_MZ = 200.0

ION_MZ = {
    "Mg": 24.312,
    "Al": 26.982,
    "Ca": 39.95,
    "Ti": 47.95,
    "Mn": 54.938,
    "Fe": 55.954,
    "K": 38.963,
}


def make_spectrum(abundances, id="", position=None, filler=100.0):
    """Spectrum from {ion symbol or m/z: abundance}; adds a filler base peak."""
    points = {}
    if filler is not None:
        points[FILLER_MZ] = filler
    for key, ab in abundances.items():
        mz = ION_MZ[key] if isinstance(key, str) else float(key)
        points[mz] = ab
    return Spectrum(tuple(sorted(points.items())), id=id, position=position)


def spectrum_csv(abundances, filler=100.0):
    s = make_spectrum(abundances, filler=filler)
    return "".join(f"{mz},{ab}\n" for mz, ab in s.points)


@pytest.fixture
def basalt():
    return builtin_basalt()
