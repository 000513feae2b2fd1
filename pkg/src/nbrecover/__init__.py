"""Sparse narrowband signal recovery under wideband ZP-OFDM interference."""

from . import baselines, harness, observation, recovery, waveform  # noqa: F401
