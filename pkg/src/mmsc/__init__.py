"""Atoms coupled to a fiber-ring resonator: spectra, fits and photon statistics."""

from mmsc.model import (
    EnsembleParams,
    ResonatorParams,
    Spectrum,
    od_to_gn,
    gn_to_od,
    ring_transmission,
)

__all__ = [
    "EnsembleParams",
    "ResonatorParams",
    "Spectrum",
    "od_to_gn",
    "gn_to_od",
    "ring_transmission",
]
