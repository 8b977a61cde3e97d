"""Seeded sample-point generation for the numeric verification lanes.

Defaults follow the library-wide convention: 100 points, uniform in the box of
half-width 1 around the origin, seed 42, and rejection of points that come
within 1e-3 of any declared singular locus.
"""

from __future__ import annotations

import numpy as np

from .errors import PrerequisiteError

DEFAULT_SAMPLES = 100
DEFAULT_SEED = 42
DEFAULT_BOX = 1.0
SINGULAR_MARGIN = 1e-3


def sample_points(
    nvars: int,
    samples: int = DEFAULT_SAMPLES,
    seed: int = DEFAULT_SEED,
    box: float = DEFAULT_BOX,
    center=None,
    avoid=(),
    margin: float = SINGULAR_MARGIN,
):
    """Return ``samples`` points as float lists.  ``avoid`` is an iterable of
    scalar fields treated as singular loci: a candidate is rejected when any
    of them evaluates within ``margin`` of zero."""
    rng = np.random.default_rng(seed)
    if center is None:
        center = np.zeros(nvars)
    else:
        center = np.asarray(center, dtype=float)
    pts = []
    tries = 0
    limit = max(1000, samples * 200)
    while len(pts) < samples:
        if tries >= limit:
            raise PrerequisiteError(
                f"could not find {samples} sample points clear of the declared "
                f"singular loci after {tries} draws"
            )
        x = center + rng.uniform(-box, box, nvars)
        tries += 1
        xs = [float(v) for v in x]
        if any(abs(float(f.eval(xs))) < margin for f in avoid):
            continue
        pts.append(xs)
    return pts
