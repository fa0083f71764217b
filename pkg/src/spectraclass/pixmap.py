"""Binary PPM (P6) rendering of classification and membership maps."""

from __future__ import annotations

from .spatial import ClassificationMap, SampleGrid

# Fixed palette for the basalt classes; UNK renders black.
BASALT_PALETTE = {
    "ILM": (200, 40, 40),
    "AGT": (60, 160, 60),
    "PLG": (70, 110, 220),
    "OLV": (170, 150, 40),
    "UNK": (0, 0, 0),
}

_FALLBACK = (128, 128, 128)


def write_ppm(stream, width: int, height: int, pixels) -> None:
    """Write a P6 pixmap; ``pixels`` is a row-major list of RGB triples."""
    if len(pixels) != width * height:
        raise ValueError(f"expected {width * height} pixels, got {len(pixels)}")
    stream.write(f"P6\n{width} {height}\n255\n".encode("ascii"))
    stream.write(bytes(v for px in pixels for v in px))


def render_class_map(cmap: ClassificationMap, palette=None):
    """One pixel per spot, colored by hard label."""
    pal = dict(BASALT_PALETTE)
    if palette:
        pal.update(palette)
    return [pal.get(cell.label, _FALLBACK) for cell in cmap.cells]


def render_membership_map(grid: SampleGrid, gamma: str):
    """Grayscale view of one class's membership, 0 -> black, 1 -> white."""
    pixels = []
    for spot in grid.spots:
        v = min(max(spot.membership[gamma], 0.0), 1.0)
        g = round(v * 255)
        pixels.append((g, g, g))
    return pixels


def load_palette(text: str):
    """Parse palette lines `CODE R G B`; `#` starts a comment."""
    pal = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 4:
            raise ValueError(f"palette line {lineno}: expected 'CODE R G B'")
        code, *rgb = parts
        try:
            r, g, b = (int(v) for v in rgb)
        except ValueError:
            raise ValueError(f"palette line {lineno}: non-integer channel") from None
        if not all(0 <= v <= 255 for v in (r, g, b)):
            raise ValueError(f"palette line {lineno}: channel out of range")
        pal[code] = (r, g, b)
    return pal
