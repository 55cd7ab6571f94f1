"""Capacity bounds for diamond relay networks with conferencing relays.

Modules
-------
info_measures
    Entropy, mutual information and total correlation of discrete joints.
gaussian_model
    Covariance assembly and log-det information for the Gaussian MAC.
bounds_two_relay, bounds_three_relay
    Closed-form and optimized lower/upper/cut-set bounds.
fme
    Exact Fourier-Motzkin projection of rational inequality systems.
mc_typicality
    Monte Carlo checks of the covering, packing and codebook-size lemmas.
"""

__version__ = "0.1.0"
