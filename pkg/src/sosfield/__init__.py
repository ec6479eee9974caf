"""Spatially consistent correlated random fields from sums of sinusoids.

Fit sinusoid frequencies to an arbitrary isotropic autocorrelation function,
then evaluate correlated Gaussian (or uniform) values at any 3-D position,
or at transmitter/receiver position pairs for links with both ends mobile.
"""

from .acf import AcfSamples, InvalidAcfError, exponential_acf, gauss_exp_acf, sample_acf
from .estimators import CorrelatedField, DualMobilityField, SOSFitter
from .fitter import DirectionSet, FitConfig, SinusoidSet, ase, fit, make_directions, refine
from .generator import (
    CorrelatedProcess,
    DualMobilityProcess,
    acf_of,
    bind_phases,
    bind_phases_dual,
    evaluate3,
    evaluate6,
    rescale,
    to_uniform,
)
from .io import load_process, load_table, save_process, save_table

__version__ = "0.1.0"

__all__ = [
    "AcfSamples",
    "CorrelatedField",
    "CorrelatedProcess",
    "DirectionSet",
    "DualMobilityField",
    "DualMobilityProcess",
    "FitConfig",
    "InvalidAcfError",
    "SOSFitter",
    "SinusoidSet",
    "acf_of",
    "ase",
    "bind_phases",
    "bind_phases_dual",
    "evaluate3",
    "evaluate6",
    "exponential_acf",
    "fit",
    "gauss_exp_acf",
    "load_process",
    "load_table",
    "make_directions",
    "refine",
    "rescale",
    "sample_acf",
    "save_process",
    "save_table",
    "to_uniform",
]
