"""Permeability dataset ingestion and synthetic stand-ins.

The reservoir benchmark layers are 60 x 220 grids of scalar
permeabilities; the data file is a plain whitespace-separated stream in
x-fastest order (x, then y, then layer), with the x-component block
first when all three tensor components are present.  The dataset itself
is not redistributed here; a synthetic channelized generator provides a
qualitatively similar field for self-contained runs.
"""

import numpy as np

from .errors import ParseError

LAYER_NX = 60
LAYER_NY = 220
LAYER_CELLS = LAYER_NX * LAYER_NY
N_LAYERS = 85


def ingest_spe10(path, layer):
    """Scalar permeability of one layer (1-based index), x-component.

    Accepts either the full three-component file or any truncated
    x-component stream that still covers the requested layer.
    """
    if layer < 1 or layer > N_LAYERS:
        raise ParseError(f"layer {layer} out of range 1..{N_LAYERS}")
    values = []
    needed = LAYER_CELLS * layer
    with open(path) as fh:
        for line in fh:
            for tok in line.split():
                try:
                    values.append(float(tok))
                except ValueError as exc:
                    raise ParseError(
                        f"non-numeric token {tok!r} in {path}") from exc
            if len(values) >= needed:
                break
    if len(values) < needed:
        raise ParseError(
            f"{path} holds {len(values)} values; layer {layer} needs "
            f"{needed}")
    field = np.asarray(values[LAYER_CELLS * (layer - 1):LAYER_CELLS * layer])
    if np.any(field <= 0):
        raise ParseError("non-positive permeability in dataset")
    return field


def field_span(field):
    """Orders of magnitude covered by a permeability field."""
    return float(np.log10(field.max() / field.min()))


def synthetic_channel_field(seed=2024, n_channels=5, contrast=1e4,
                            nx=LAYER_NX, ny=LAYER_NY, corr_len=3.0,
                            background_decades=4.5):
    """Channelized permeability field for dataset-free runs.

    A spatially correlated lognormal background, optionally crossed by a
    few meandering high-permeability channels two to three cells wide
    running along the long (y) axis.  The span covers several orders of
    magnitude like the original layers.
    """
    from scipy.ndimage import gaussian_filter

    rng = np.random.default_rng(seed)
    noise = rng.normal(0.0, 1.0, size=(ny, nx))
    logk = gaussian_filter(noise, corr_len, mode="nearest")
    logk *= (background_decades / 2.0) / (3.0 * logk.std())
    for c in range(n_channels):
        x = rng.uniform(6, nx - 6)
        width = int(rng.integers(2, 4))
        for j in range(ny):
            x += rng.normal(0.0, 0.35)
            x = float(np.clip(x, 2, nx - 3))
            i0 = int(round(x))
            for i in range(max(0, i0 - width // 2),
                           min(nx, i0 + (width + 1) // 2)):
                logk[j, i] = np.log10(contrast) + rng.normal(0.0, 0.25)
    return 10.0 ** logk.reshape(-1)
