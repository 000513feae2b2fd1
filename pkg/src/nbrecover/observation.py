"""Receiver preprocessing: diagonalize the circulant channel, invert it in
frequency, and keep only the zero-pad rows. The wideband interferer lives in
the first N rows of the zero-padded symbol, so the surviving v rows observe
only the narrowband signal plus colored noise:

    y2 = W ynb + W n_freq,   W = [0 I_v] . F^H . diag(eigen)^-1   (v x P)

The channel response is assumed known at the receiver.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .waveform import (
    EIGENVALUE_FLOOR_RATIO,
    CirChannel,
    LteSymbol,
    ReceivedFrame,
    SystemDims,
    dft,
    zero_pad_block,
    _channel_spectrum,
)


class SingularChannelBinError(ValueError):
    """A channel frequency bin is too close to zero to invert."""

    def __init__(self, bin_index: int, magnitude: float):
        self.bin_index = bin_index  # 1-based
        self.magnitude = magnitude
        super().__init__(
            f"singular channel bin {bin_index}: |eigenvalue| = {magnitude:.3e}"
        )


@dataclass(frozen=True, eq=False)
class ChannelEigenvalues:
    """Diagonal of the circulant channel's spectral decomposition H = F^H diag(d) F."""

    diag: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "diag", np.asarray(self.diag, dtype=np.complex128))


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """Dense v x P measurement operator produced by the preprocessing chain.

    ``eigen`` is None for synthetic matrices built directly in tests or
    benchmarks; matrices built from a channel always carry their eigenvalues.
    """

    w: np.ndarray
    eigen: ChannelEigenvalues | None = None

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.complex128)
        object.__setattr__(self, "w", w)
        if w.ndim != 2:
            raise ValueError("observation matrix must be 2-D")
        norms = np.linalg.norm(w, axis=0)
        if not np.all(norms > 0):
            raise ValueError("observation matrix has a zero column")
        object.__setattr__(self, "col_norms", norms)
        object.__setattr__(self, "frob_norm", float(np.linalg.norm(w)))

    @property
    def n_measurements(self) -> int:
        return self.w.shape[0]

    @property
    def frame_len(self) -> int:
        return self.w.shape[1]


def channel_eigenvalues(cir: CirChannel, dims: SystemDims) -> ChannelEigenvalues:
    """Eigenvalues of the circulant channel matrix over one frame.

    Raises :class:`SingularChannelBinError` if any bin falls below the
    invertibility floor relative to the strongest bin.
    """
    diag = _channel_spectrum(cir.taps, dims.frame_len)
    mags = np.abs(diag)
    floor = EIGENVALUE_FLOOR_RATIO * mags.max()
    bad = np.nonzero(mags < floor)[0]
    if bad.size:
        i = int(bad[0])
        raise SingularChannelBinError(i + 1, float(mags[i]))
    return ChannelEigenvalues(diag)


def build_observation(eigen: ChannelEigenvalues, dims: SystemDims) -> ObservationMatrix:
    """Materialize W: the last v rows of the unitary IDFT matrix, column i scaled by 1/eigen(i)."""
    p = dims.frame_len
    if eigen.diag.size != p:
        raise ValueError("eigenvalue vector length does not match dims")
    rows = np.arange(dims.n_subcarriers, p)
    cols = np.arange(p)
    idft_rows = np.exp(2j * np.pi * np.outer(rows, cols) / p) / np.sqrt(p)
    w = idft_rows / eigen.diag[None, :]
    return ObservationMatrix(w=w, eigen=eigen)


def to_frequency(frame: ReceivedFrame) -> np.ndarray:
    """Unitary DFT of the received time-domain frame."""
    return dft(frame.time_samples)


def measure(obs: ObservationMatrix, y_freq: np.ndarray) -> np.ndarray:
    """Project the frequency-domain frame onto the zero-pad rows: y2 = W y_freq."""
    y_freq = np.asarray(y_freq)
    if y_freq.shape != (obs.frame_len,):
        raise ValueError(
            f"expected frequency vector of length {obs.frame_len}, got {y_freq.shape}"
        )
    return obs.w @ y_freq


def lte_frequency_component(
    eigen: ChannelEigenvalues, lte: LteSymbol, dims: SystemDims
) -> np.ndarray:
    """Frequency-domain image of the interferer after the channel, diag(d) . DFT(zero-padded symbol).

    This is exactly the component that :func:`measure` annihilates.
    """
    return eigen.diag * dft(zero_pad_block(lte, dims))
