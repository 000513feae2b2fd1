"""Synthesis of the composite received frame: wideband ZP-OFDM interferer,
sparse narrowband uplink signal, multipath channel, and noise.

Conventions used throughout the package:

* DFT/IDFT are unitary (``1/sqrt(P)`` both ways), so frequency/time
  transforms preserve energy exactly.
* Subcarrier indices in the data model are 1-based (``1..P``); arrays are
  stored 0-based and converted at the boundary.
* One frame carries a single OFDM symbol: an N-point block followed by a
  length-v zero pad, so the frame length is ``P = N + v``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Resource-unit formats of the narrowband uplink: 1, 3, 6 or 12 contiguous
# subcarriers per allocation.
ALLOWED_SPARSITIES = (1, 3, 6, 12)

# Channels whose frequency response dips below this fraction of its peak are
# rejected as numerically non-invertible (the preprocessing divides by the
# channel eigenvalues).
EIGENVALUE_FLOOR_RATIO = 1e-6

_SQRT2 = np.sqrt(2.0)


class UnsupportedRuFormatError(ValueError):
    """Requested sparsity is not one of the allowed resource-unit sizes."""


class DegenerateChannelError(RuntimeError):
    """Channel generator kept producing near-singular frequency responses."""


def dft(x: np.ndarray) -> np.ndarray:
    """Unitary DFT."""
    return np.fft.fft(x, norm="ortho")


def idft(x: np.ndarray) -> np.ndarray:
    """Unitary inverse DFT."""
    return np.fft.ifft(x, norm="ortho")


@dataclass(frozen=True)
class SystemDims:
    """Frame geometry: N-point OFDM block, v-sample zero pad, channel memory L."""

    n_subcarriers: int
    zp_len: int
    cir_len: int

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be positive")
        if self.zp_len < 1:
            raise ValueError("zp_len must be at least 1 (no measurement rows otherwise)")
        if self.cir_len < 0:
            raise ValueError("cir_len must be non-negative")
        if self.cir_len + 1 > self.frame_len:
            raise ValueError("cir_len + 1 must fit inside one frame")

    @property
    def frame_len(self) -> int:
        return self.n_subcarriers + self.zp_len


@dataclass(frozen=True, eq=False)
class CirChannel:
    """Unit-energy channel impulse response, taps h(0)..h(L)."""

    taps: np.ndarray

    def __post_init__(self):
        taps = np.asarray(self.taps, dtype=np.complex128)
        object.__setattr__(self, "taps", taps)
        if taps.ndim != 1 or taps.size < 1:
            raise ValueError("taps must be a non-empty vector")
        if taps[0] == 0:
            raise ValueError("leading tap h(0) must be nonzero")
        energy = float(np.sum(np.abs(taps) ** 2))
        if abs(energy - 1.0) > 1e-12:
            raise ValueError(f"taps must have unit energy, got {energy!r}")

    @property
    def cir_len(self) -> int:
        return self.taps.size - 1


@dataclass(frozen=True, eq=False)
class LteSymbol:
    """Frequency-domain payload of the wideband interferer, one QPSK point per subcarrier."""

    freq_symbols: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "freq_symbols", np.asarray(self.freq_symbols, dtype=np.complex128)
        )


@dataclass(frozen=True, eq=False)
class NbIotSignal:
    """Sparse frequency-domain narrowband signal.

    ``support`` lists the occupied subcarriers (1-based) in circular order
    starting at ``start``; ``freq_vector`` is nonzero exactly on the support.
    """

    freq_vector: np.ndarray
    support: tuple
    sparsity: int
    start: int
    end: int
    payload_bits: np.ndarray
    gain: float = 1.0

    def __post_init__(self):
        object.__setattr__(
            self, "freq_vector", np.asarray(self.freq_vector, dtype=np.complex128)
        )
        object.__setattr__(
            self, "payload_bits", np.asarray(self.payload_bits, dtype=np.int8)
        )
        if len(self.support) != self.sparsity:
            raise ValueError("support size must equal sparsity")


@dataclass(frozen=True, eq=False)
class ReceivedFrame:
    """Time-domain samples observed at the base station plus ground truth for scoring."""

    time_samples: np.ndarray
    noise_var: float
    nb_truth: NbIotSignal
    lte_truth: LteSymbol | None = None
    cir_truth: CirChannel | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "time_samples", np.asarray(self.time_samples, dtype=np.complex128)
        )


@dataclass(frozen=True)
class PowerReport:
    """Per-subcarrier powers of both signals and the resulting SNR/SIR in dB."""

    p_nb: float
    p_lte: float
    noise_var: float
    snr_db: float
    sir_db: float


def gen_lte_symbol(rng: np.random.Generator, dims: SystemDims) -> LteSymbol:
    """Draw N i.i.d. uniform QPSK points, unit power each."""
    pts = rng.integers(0, 2, size=(dims.n_subcarriers, 2))
    sym = ((1 - 2 * pts[:, 0]) + 1j * (1 - 2 * pts[:, 1])) / _SQRT2
    return LteSymbol(sym)


def qpsk_modulate(bits: np.ndarray) -> np.ndarray:
    """Map bit pairs (b0, b1) to Gray-coded QPSK points; b0 drives Re, b1 drives Im."""
    bits = np.asarray(bits).reshape(-1, 2)
    return ((1 - 2 * bits[:, 0]) + 1j * (1 - 2 * bits[:, 1])) / _SQRT2


def qpsk_decide(symbols: np.ndarray) -> np.ndarray:
    """Hard QPSK decision, inverse of :func:`qpsk_modulate`."""
    symbols = np.asarray(symbols)
    bits = np.empty((symbols.size, 2), dtype=np.int8)
    bits[:, 0] = symbols.real < 0
    bits[:, 1] = symbols.imag < 0
    return bits.reshape(-1)


def gen_nbiot_signal(
    rng: np.random.Generator,
    dims: SystemDims,
    sparsity: int,
    start: int | str = "random",
    gain: float = 1.0,
) -> NbIotSignal:
    """Place a contiguous block of QPSK-modulated subcarriers into a length-P frame.

    The block begins at ``start`` (1-based) and wraps circularly past P.
    ``start="random"`` draws the position uniformly.
    """
    if sparsity not in ALLOWED_SPARSITIES:
        raise UnsupportedRuFormatError(
            f"unsupported RU format: sparsity {sparsity} not in {ALLOWED_SPARSITIES}"
        )
    p = dims.frame_len
    if start == "random":
        start = int(rng.integers(1, p + 1))
    else:
        start = int(start)
        if not 1 <= start <= p:
            raise ValueError(f"start must lie in 1..{p}")
    support = tuple(((start - 1 + k) % p) + 1 for k in range(sparsity))
    bits = rng.integers(0, 2, size=2 * sparsity).astype(np.int8)
    amps = gain * qpsk_modulate(bits)
    vec = np.zeros(p, dtype=np.complex128)
    vec[np.array(support) - 1] = amps
    return NbIotSignal(
        freq_vector=vec,
        support=support,
        sparsity=sparsity,
        start=start,
        end=support[-1],
        payload_bits=bits,
        gain=float(gain),
    )


def _channel_spectrum(taps: np.ndarray, frame_len: int) -> np.ndarray:
    """Length-P eigenvalue vector of the circulant channel matrix."""
    first_col = np.zeros(frame_len, dtype=np.complex128)
    first_col[: taps.size] = taps
    return np.fft.fft(first_col)


def draw_cir(
    rng: np.random.Generator,
    dims: SystemDims,
    profile: float | None = None,
    max_attempts: int = 100,
) -> CirChannel:
    """Draw a unit-energy multipath channel with exponential power-delay profile.

    Taps are i.i.d. circular complex Gaussian shaped by ``exp(-l / profile)``
    (default decay constant L/3). Draws whose frequency response has a bin
    below the invertibility floor are rejected and retried.
    """
    n_taps = dims.cir_len + 1
    if profile is None:
        profile = max(dims.cir_len / 3.0, 1e-12)
    weights = np.exp(-0.5 * np.arange(n_taps) / profile)  # amplitude shaping
    for _ in range(max_attempts):
        raw = (rng.standard_normal(n_taps) + 1j * rng.standard_normal(n_taps)) / _SQRT2
        taps = raw * weights
        if taps[0] == 0:
            continue
        taps = taps / np.linalg.norm(taps)
        spectrum = np.abs(_channel_spectrum(taps, dims.frame_len))
        if spectrum.min() >= EIGENVALUE_FLOOR_RATIO * spectrum.max():
            return CirChannel(taps)
    raise DegenerateChannelError(
        f"channel generator degenerate: {max_attempts} near-singular draws in a row"
    )


def zero_pad_block(lte: LteSymbol, dims: SystemDims) -> np.ndarray:
    """Time-domain ZP-OFDM symbol: N-point unitary IDFT of the payload plus v zeros."""
    block = idft(lte.freq_symbols)
    return np.concatenate([block, np.zeros(dims.zp_len, dtype=np.complex128)])


def apply_channel(
    lte: LteSymbol, cir: CirChannel, dims: SystemDims, method: str = "fft"
) -> np.ndarray:
    """Propagate the zero-padded interferer symbol through the multipath channel.

    Thanks to the trailing zero pad the linear channel acts as a circulant
    matrix over the whole frame, so ``method="fft"`` (circular convolution)
    and ``method="toeplitz"`` (explicit matrix product) agree to 1e-10.
    """
    if lte.freq_symbols.size != dims.n_subcarriers:
        raise ValueError("LTE symbol length does not match dims")
    if cir.cir_len != dims.cir_len:
        raise ValueError("channel length does not match dims")
    padded = zero_pad_block(lte, dims)
    p = dims.frame_len
    first_col = np.zeros(p, dtype=np.complex128)
    first_col[: cir.taps.size] = cir.taps
    if method == "fft":
        return np.fft.ifft(np.fft.fft(padded) * np.fft.fft(first_col))
    if method == "toeplitz":
        idx = (np.arange(p)[:, None] - np.arange(p)[None, :]) % p
        return first_col[idx] @ padded
    raise ValueError(f"unknown method {method!r}")


def compose_received(
    lte_time: np.ndarray,
    nb: NbIotSignal,
    noise_var: float,
    rng: np.random.Generator,
    lte_truth: LteSymbol | None = None,
    cir_truth: CirChannel | None = None,
) -> ReceivedFrame:
    """Superimpose interferer, narrowband signal and circular complex Gaussian noise."""
    if noise_var < 0:
        raise ValueError("noise variance must be non-negative")
    lte_time = np.asarray(lte_time, dtype=np.complex128)
    if lte_time.size != nb.freq_vector.size:
        raise ValueError("length mismatch between interferer frame and NB vector")
    p = lte_time.size
    noise = np.sqrt(noise_var / 2.0) * (
        rng.standard_normal(p) + 1j * rng.standard_normal(p)
    )
    y = lte_time + idft(nb.freq_vector) + noise
    return ReceivedFrame(
        time_samples=y,
        noise_var=float(noise_var),
        nb_truth=nb,
        lte_truth=lte_truth,
        cir_truth=cir_truth,
    )


def power_report(
    nb_time: np.ndarray,
    lte_time: np.ndarray,
    noise_var: float,
    dims: SystemDims,
    sparsity: int,
) -> PowerReport:
    """Per-subcarrier received powers and dB ratios; zero denominators give +inf."""
    nb_time = np.asarray(nb_time)
    lte_time = np.asarray(lte_time)
    e_nb = float(np.vdot(nb_time, nb_time).real)
    e_lte = float(np.vdot(lte_time, lte_time).real)
    p_nb = e_nb / sparsity if sparsity > 0 else np.inf
    p_lte = e_lte / dims.n_subcarriers
    snr_db = 10 * np.log10(p_nb / noise_var) if noise_var > 0 else np.inf
    sir_db = 10 * np.log10(p_nb / p_lte) if p_lte > 0 else np.inf
    return PowerReport(
        p_nb=p_nb,
        p_lte=p_lte,
        noise_var=float(noise_var),
        snr_db=float(snr_db),
        sir_db=float(sir_db),
    )


def calibrate(
    target_snr_db: float,
    target_sir_db: float,
    dims: SystemDims,
    sparsity: int,
    lte_time: np.ndarray | None,
) -> tuple[float, float]:
    """Choose the narrowband gain g and noise variance hitting the dB targets.

    ``lte_time`` is the realized interferer frame the targets are measured
    against; pass None (or target_sir_db=inf) for an interference-free setup.
    A unit-gain narrowband signal has per-subcarrier power exactly 1, so the
    calibration is closed-form: g^2 = P_LTE * 10^(SIR/10), sigma^2 = g^2 / 10^(SNR/10).
    """
    if lte_time is None or np.isinf(target_sir_db):
        p_nb = 1.0
    else:
        lte_time = np.asarray(lte_time)
        p_lte = float(np.vdot(lte_time, lte_time).real) / dims.n_subcarriers
        p_nb = p_lte * 10.0 ** (target_sir_db / 10.0)
    gain = float(np.sqrt(p_nb))
    noise_var = 0.0 if np.isinf(target_snr_db) else p_nb / 10.0 ** (target_snr_db / 10.0)
    return gain, float(noise_var)
