"""Per-site grid dumps: CSV tables for any dimension, P6 images for 2D.

Pixel color encodes the local species mix: pure A is red, pure B blue,
an exact A/B tie white, an empty site black, and intermediate mixes
interpolate linearly between those anchors.  For a 2D lattice with
sides [W, H], pixel (row y, column x) is site x + W*y.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .lattice import SimState


@dataclass(frozen=True)
class Snapshot:
    """Coarse per-site values captured at one instant."""

    time: float
    sides: tuple[int, ...]
    n_a: np.ndarray
    n_b: np.ndarray


def snapshot(state: SimState) -> Snapshot:
    return Snapshot(time=state.time, sides=state.lattice.sides,
                    n_a=state.n_a.copy(), n_b=state.n_b.copy())


def mix_colors(n_a: np.ndarray, n_b: np.ndarray) -> np.ndarray:
    """RGB (uint8) for per-site counts, shape (sites, 3)."""
    total = n_a + n_b
    frac_a = np.divide(n_a, total, out=np.zeros(len(n_a)), where=total > 0)
    rgb = np.zeros((len(n_a), 3), dtype=np.float64)
    hi = frac_a >= 0.5
    lo = ~hi
    # white -> red as the A excess grows
    t_hi = (frac_a - 0.5) * 2.0
    rgb[hi, 0] = 255.0
    rgb[hi, 1] = rgb[hi, 2] = 255.0 * (1.0 - t_hi[hi])
    # blue -> white as A catches up
    t_lo = frac_a * 2.0
    rgb[lo, 2] = 255.0
    rgb[lo, 0] = rgb[lo, 1] = 255.0 * t_lo[lo]
    rgb[total == 0] = 0.0
    return np.rint(rgb).astype(np.uint8)


def to_ppm(snap: Snapshot) -> bytes:
    """Binary P6 pixmap, one pixel per site, row-major."""
    if len(snap.sides) != 2:
        raise ValidationError("P6 image output needs a 2-d lattice")
    w, h = snap.sides
    rgb = mix_colors(snap.n_a, snap.n_b).reshape(h, w, 3)
    header = f"P6\n{w} {h}\n255\n".encode()
    return header + rgb.tobytes()


def to_site_csv(snap: Snapshot) -> str:
    """Raw per-site table: x[,y[,z]],n_A,n_B."""
    dim = len(snap.sides)
    cols = ["x", "y", "z"][:dim]
    buf = io.StringIO()
    buf.write(",".join(cols) + ",n_A,n_B\n")
    coords = np.unravel_index(np.arange(len(snap.n_a)), snap.sides, order="F")
    for i in range(len(snap.n_a)):
        pos = ",".join(str(int(coords[ax][i])) for ax in range(dim))
        buf.write(f"{pos},{snap.n_a[i]},{snap.n_b[i]}\n")
    return buf.getvalue()


def write_ppm(path, snap: Snapshot):
    with open(path, "wb") as fh:
        fh.write(to_ppm(snap))


def write_site_csv(path, snap: Snapshot):
    with open(path, "w") as fh:
        fh.write(to_site_csv(snap))
