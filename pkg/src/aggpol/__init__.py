"""Stochastic and fractional models of polarization in cell aggregates.

Modules
-------
media
    Frequency-domain homogenization: polarizabilities, susceptibilities,
    effective conductivity and impedance.
pearson
    Stationary Pearson IV law of the membrane polarization and the map
    between its shape parameters and the SDE noise parameters.
dynamics
    Integer-order moment equations driven through the field closure.
fractional
    Caputo-order moment equations, Mittag-Leffler step responses.
langevin
    Monte Carlo ensembles of the polarization SDE.
spectro
    Pulse experiments and DFT impedance spectra.
cli
    Command-line front end.
"""

__version__ = "0.1.0"

from .errors import AggpolError, ConfigError, NumericalError  # noqa: E402

__all__ = ["__version__", "AggpolError", "ConfigError", "NumericalError"]
