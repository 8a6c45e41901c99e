import io

import numpy as np
import pytest

from cosmosonic.catalog_io import GalaxyRecord
from cosmosonic.preprocess import OutlierFlag, ProcessedGalaxy

HEADER = "id,stellar_mass,sfr,redshift,age,abs_magnitude,right_ascension,declination\n"


def csv_bytes(*rows, header=HEADER):
    return io.BytesIO((header + "".join(r + "\n" for r in rows)).encode("utf-8"))


def record(id="g", mass=10.0, sfr=1.0, z=0.5, age=9.0, mag=-22.0, ra=150.0, dec=2.0):
    return GalaxyRecord(id, mass, sfr, z, age, mag, ra, dec)


def galaxy(id="g", mass=0.5, sfr=0.5, bright=0.5, ra=0.5, tl=0.5, flag=OutlierFlag.NONE):
    return ProcessedGalaxy(id, mass, sfr, bright, ra, tl, flag)


def spectrum(x, sr, n_fft=None):
    """Magnitude spectrum (Hann window) and its frequency axis."""
    n_fft = n_fft or len(x)
    seg = np.asarray(x[:n_fft])
    if seg.size < n_fft:
        seg = np.pad(seg, (0, n_fft - seg.size))
    mag = np.abs(np.fft.rfft(seg * np.hanning(n_fft)))
    return np.fft.rfftfreq(n_fft, 1.0 / sr), mag


@pytest.fixture
def sr():
    return 44100


# One line per acceptance criterion, printed after the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
