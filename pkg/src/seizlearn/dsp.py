"""Bandpass IIR filtering for the alpha, beta and gamma EEG bands.

Each band is a sixth-order elliptic design run as a cascade of three
Direct Form I second-order sections.  Direct Form I keeps every internal
node bounded by the input/output registers, so the fixed-point path can
narrow once per section without internal overflow.

The reference coefficients shipped below already lie on the Q6.10 grid:
they were produced offline by a quantization-aware search around a scipy
elliptic prototype (tools/design_filterbank.py).  The float and fixed
backends therefore run identical coefficient values and differ only in
per-sample rounding.  ``verify_filter_bank`` re-measures passband ripple
and stopband attenuation and fails loudly if a coefficient set (or its
re-quantization) misses the >=20 dB stopband requirement or goes unstable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Sequence, Tuple

import numpy as np

from . import fixedpoint as fp

BAND_NAMES = ("alpha", "beta", "gamma")
BAND_EDGES_HZ: Dict[str, Tuple[float, float]] = {
    "alpha": (8.0, 16.0),
    "beta": (16.0, 32.0),
    "gamma": (32.0, 96.0),
}

STOPBAND_MIN_ATTEN_DB = 20.0
# Stopband convention: the stopband ends at 0.5x the lower passband edge and
# resumes at 1.5x the upper edge, clamped just below Nyquist for wide bands.
STOPBAND_LO_FACTOR = 0.5
STOPBAND_HI_FACTOR = 1.5
STOPBAND_NYQUIST_CLAMP = 0.98
DC_MARGIN_HZ = 0.05
RIPPLE_SLACK_DB = 0.1


@dataclass(frozen=True)
class BiquadCoeffs:
    """One second-order section, denominator normalized (a0 = 1)."""

    b0: float
    b1: float
    b2: float
    a1: float
    a2: float

    def is_stable(self) -> bool:
        # stability triangle for 1 + a1 z^-1 + a2 z^-2
        return abs(self.a2) < 1.0 and abs(self.a1) < 1.0 + self.a2

    def raw(self) -> Tuple[int, int, int, int, int]:
        """Coefficients quantized to Q6.10 raw integers."""
        return tuple(fp.from_real(c) for c in (self.b0, self.b1, self.b2, self.a1, self.a2))

    def quantized(self) -> "BiquadCoeffs":
        return BiquadCoeffs(*(r / fp.ONE for r in self.raw()))


@dataclass
class BiquadState:
    """Direct Form I delay registers (previous two inputs and outputs)."""

    x1: float = 0.0
    x2: float = 0.0
    y1: float = 0.0
    y2: float = 0.0

    def reset(self) -> None:
        self.x1 = self.x2 = self.y1 = self.y2 = 0.0


@dataclass(frozen=True)
class BandDesign:
    """A shipped band design: edges, declared ripple, on-grid sections."""

    edges: Tuple[float, float]
    ripple_db: float
    sections_raw: Tuple[Tuple[int, int, int, int, int], ...]

    @property
    def sections(self) -> Tuple[BiquadCoeffs, ...]:
        return tuple(BiquadCoeffs(*(r / fp.ONE for r in sec)) for sec in self.sections_raw)

    @classmethod
    def from_sections(cls, edges, ripple_db, sections: Iterable[Sequence[float]]) -> "BandDesign":
        raw = tuple(tuple(fp.from_real(float(c)) for c in sec) for sec in sections)
        return cls(tuple(edges), float(ripple_db), raw)


# Reference designs (generated by tools/design_filterbank.py).  Raw integers
# are Q6.10 (value = raw / 1024); tuple order is b0, b1, b2, a1, a2.
REFERENCE_DESIGNS: Dict[float, Dict[str, BandDesign]] = {
    1000.0: {
        "alpha": BandDesign(
            edges=(8.0, 16.0), ripple_db=1.7,
            sections_raw=(
                (326, 0, -326, -1999, 981),
                (165, -326, 165, -2012, 1003),
                (163, -326, 163, -2035, 1013),
            )),
        "beta": BandDesign(
            edges=(16.0, 32.0), ripple_db=0.7,
            sections_raw=(
                (349, 0, -349, -1959, 953),
                (182, -349, 182, -1969, 988),
                (175, -349, 175, -2022, 1007),
            )),
        "gamma": BandDesign(
            edges=(32.0, 96.0), ripple_db=0.4,
            sections_raw=(
                (436, 0, -436, -1657, 724),
                (436, -415, 436, -1473, 840),
                (219, -436, 219, -1973, 974),
            )),
    },
    256.0: {
        "alpha": BandDesign(
            edges=(8.0, 16.0), ripple_db=0.4,
            sections_raw=(
                (395, 0, -395, -1832, 878),
                (238, -395, 238, -1808, 946),
                (199, -395, 199, -1978, 987),
            )),
        "beta": BandDesign(
            edges=(16.0, 32.0), ripple_db=0.4,
            sections_raw=(
                (417, 0, -417, -1512, 750),
                (417, -348, 417, -1306, 881),
                (215, -417, 215, -1845, 951),
            )),
        "gamma": BandDesign(
            edges=(32.0, 96.0), ripple_db=0.4,
            sections_raw=(
                (1063, 0, -1063, 0, 20),
                (560, 1063, 560, 1512, 812),
                (560, -1063, 560, -1512, 812),
            )),
    },
}


def default_filter_bank(fs: float) -> Dict[str, BandDesign]:
    """Return the shipped reference designs for a supported sampling rate."""
    for rate, designs in REFERENCE_DESIGNS.items():
        if abs(fs - rate) < 1e-6:
            return dict(designs)
    supported = ", ".join(f"{r:g}" for r in REFERENCE_DESIGNS)
    raise ValueError(
        f"no reference filter bank for fs={fs:g} Hz (shipped: {supported}); "
        "design one offline with tools/design_filterbank.py")


class BandpassFilter:
    """A three-section cascade processing one stream, float or fixed."""

    def __init__(self, band: str, fs: float, sections: Sequence[BiquadCoeffs],
                 fixed: bool = False):
        if len(sections) != 3:
            raise ValueError(f"expected 3 second-order sections, got {len(sections)}")
        self.band = band
        self.fs = float(fs)
        self.sections = tuple(sections)
        self.fixed = fixed
        if fixed:
            self._raw = [sec.raw() for sec in sections]
            self._state_raw = [[0, 0, 0, 0] for _ in sections]  # x1, x2, y1, y2
        self._state = [BiquadState() for _ in sections]

    @classmethod
    def from_design(cls, band: str, fs: float, design: BandDesign,
                    fixed: bool = False) -> "BandpassFilter":
        return cls(band, fs, design.sections, fixed=fixed)

    def reset(self) -> None:
        for st in self._state:
            st.reset()
        if self.fixed:
            for st in self._state_raw:
                st[0] = st[1] = st[2] = st[3] = 0

    def process_sample(self, x):
        """Advance the cascade by one sample and return the output.

        Float mode takes and returns float; fixed mode takes and returns a
        Q6.10 raw int, narrowing the wide accumulator once per section.
        """
        if self.fixed:
            v = x
            for coeffs, st in zip(self._raw, self._state_raw):
                b0, b1, b2, a1, a2 = coeffs
                acc = b0 * v + b1 * st[0] + b2 * st[1] - a1 * st[2] - a2 * st[3]
                y = fp.sat(fp.round_shift(acc, fp.FRAC_BITS))
                st[1] = st[0]
                st[0] = v
                st[3] = st[2]
                st[2] = y
                v = y
            return v
        v = float(x)
        for coeffs, st in zip(self.sections, self._state):
            y = (coeffs.b0 * v + coeffs.b1 * st.x1 + coeffs.b2 * st.x2
                 - coeffs.a1 * st.y1 - coeffs.a2 * st.y2)
            st.x2 = st.x1
            st.x1 = v
            st.y2 = st.y1
            st.y1 = y
            v = y
        return v

    def process(self, xs) -> np.ndarray:
        """Convenience loop over a 1-D signal (state advances)."""
        out = np.empty(len(xs), dtype=np.int64 if self.fixed else np.float64)
        for i, x in enumerate(xs):
            out[i] = self.process_sample(int(x) if self.fixed else float(x))
        return out


def frequency_response(sections: Sequence[BiquadCoeffs], f, fs: float):
    """Analytic cascade magnitude in dB at frequency/frequencies ``f``.

    Raises if any frequency lies outside [0, fs/2].
    """
    freqs = np.atleast_1d(np.asarray(f, dtype=float))
    if np.any(freqs < 0) or np.any(freqs > fs / 2 + 1e-9):
        raise ValueError("frequency outside [0, fs/2]")
    z = np.exp(2j * np.pi * freqs / fs)
    h = np.ones_like(z, dtype=complex)
    for sec in sections:
        h *= ((sec.b0 + sec.b1 / z + sec.b2 / z**2)
              / (1.0 + sec.a1 / z + sec.a2 / z**2))
    mag = 20.0 * np.log10(np.maximum(np.abs(h), 1e-300))
    return float(mag[0]) if np.isscalar(f) else mag


@dataclass
class BandReport:
    band: str
    edges: Tuple[float, float]
    stopband_edges: Tuple[float, float]
    passband_ripple_db: float
    ripple_limit_db: float
    stopband_max_db: float
    stable: bool
    quantized_stable: bool
    quantized_stopband_max_db: float
    passed: bool = False

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{self.band:5s} [{self.edges[0]:g}-{self.edges[1]:g} Hz] "
                f"ripple {self.passband_ripple_db:+.2f} dB (limit {self.ripple_limit_db:.2f}), "
                f"stopband {self.stopband_max_db:+.1f} dB, "
                f"quantized stopband {self.quantized_stopband_max_db:+.1f} dB: {status}")


@dataclass
class FilterBankReport:
    fs: float
    bands: Dict[str, BandReport] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return bool(self.bands) and all(b.passed for b in self.bands.values())

    def summary(self) -> str:
        lines = [f"filter bank @ fs={self.fs:g} Hz: {'PASS' if self.passed else 'FAIL'}"]
        lines += ["  " + b.summary() for b in self.bands.values()]
        return "\n".join(lines)


def _stopband_grids(lo: float, hi: float, fs: float):
    nyq = fs / 2.0
    sb_lo = STOPBAND_LO_FACTOR * lo
    sb_hi = min(STOPBAND_HI_FACTOR * hi, STOPBAND_NYQUIST_CLAMP * nyq)
    grid = np.concatenate([
        np.linspace(DC_MARGIN_HZ, sb_lo, 120),
        np.linspace(sb_hi, 0.999 * nyq, 150),
    ])
    return (sb_lo, sb_hi), grid


def verify_band(band: str, design: BandDesign, fs: float) -> BandReport:
    lo, hi = design.edges
    sections = design.sections
    (sb_lo, sb_hi), stop_grid = _stopband_grids(lo, hi, fs)
    pass_grid = np.linspace(lo, hi, 300)

    pb = frequency_response(sections, pass_grid, fs)
    sb = frequency_response(sections, stop_grid, fs)
    ripple = float(np.max(np.abs(pb)))
    stop_max = float(np.max(sb))
    stable = all(sec.is_stable() for sec in sections)

    qsections = [sec.quantized() for sec in sections]
    q_stable = all(sec.is_stable() for sec in qsections)
    q_stop = float(np.max(frequency_response(qsections, stop_grid, fs))) if q_stable else 0.0

    report = BandReport(
        band=band,
        edges=(lo, hi),
        stopband_edges=(sb_lo, sb_hi),
        passband_ripple_db=ripple,
        ripple_limit_db=design.ripple_db + RIPPLE_SLACK_DB,
        stopband_max_db=stop_max,
        stable=stable,
        quantized_stable=q_stable,
        quantized_stopband_max_db=q_stop,
    )
    report.passed = (
        stable
        and q_stable
        and ripple <= report.ripple_limit_db
        and stop_max <= -STOPBAND_MIN_ATTEN_DB
        and q_stop <= -STOPBAND_MIN_ATTEN_DB
    )
    return report


def verify_filter_bank(designs: Mapping[str, BandDesign], fs: float) -> FilterBankReport:
    """Measure ripple and stopband attenuation for every band in a bank."""
    report = FilterBankReport(fs=float(fs))
    for band, design in designs.items():
        report.bands[band] = verify_band(band, design, fs)
    return report
