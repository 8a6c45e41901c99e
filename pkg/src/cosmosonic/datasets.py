"""Synthetic catalogs for demos and tests (the survey data is not bundled)."""

import numpy as np

from .catalog_io import GalaxyRecord


def make_galaxy_catalog(n=500, seed=0, outlier_fraction=0.03):
    """Random records shaped loosely like a spectroscopic galaxy survey.

    Most rows pass the quality and bias cuts; roughly ``outlier_fraction``
    of them get a mass, SFR or magnitude beyond the clip thresholds.
    """
    rng = np.random.default_rng(seed)
    age = rng.uniform(6.0, 13.0, n)
    # Older look-back, brighter survivors: mimics a flux-limited sample.
    tl = 13.8 - age
    mag = rng.normal(-22.0 - 0.25 * tl, 0.6, n)
    mag = np.minimum(mag, -21.0)
    mass = rng.normal(10.3 + 0.05 * tl, 0.35, n)
    sfr = np.exp(rng.normal(0.5 + 0.3 * tl, 1.2, n))
    ra = rng.uniform(149.6, 150.6, n)
    dec = rng.uniform(1.7, 2.7, n)
    z = 0.1 + 0.12 * tl + rng.normal(0, 0.01, n)

    kinds = rng.random(n)
    pick = rng.random(n) < outlier_fraction
    mass = np.where(pick & (kinds < 0.15), rng.uniform(8.5, 9.2, n), mass)
    mass = np.where(pick & (kinds >= 0.15) & (kinds < 0.2), rng.uniform(11.6, 12.0, n), mass)
    sfr = np.where(pick & (kinds >= 0.2) & (kinds < 0.55), rng.uniform(0.001, 0.09, n), sfr)
    sfr = np.where(pick & (kinds >= 0.55) & (kinds < 0.9), rng.uniform(80.0, 300.0, n), sfr)
    mag = np.where(pick & (kinds >= 0.9), rng.uniform(-25.5, -24.3, n), mag)
    # Keep non-picked rows strictly inside every clip range.
    mass = np.where(pick, mass, np.clip(mass, 9.3, 11.5))
    sfr = np.where(pick, sfr, np.clip(sfr, 0.11, 75.0))
    mag = np.where(pick, mag, np.maximum(mag, -24.1))

    return [
        GalaxyRecord(
            id=f"syn{i:06d}",
            stellar_mass=float(mass[i]),
            sfr=float(sfr[i]),
            redshift=float(max(z[i], 0.0)),
            age=float(age[i]),
            abs_magnitude=float(mag[i]),
            right_ascension=float(ra[i]),
            declination=float(dec[i]),
        )
        for i in range(n)
    ]
