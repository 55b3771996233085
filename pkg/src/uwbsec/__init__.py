"""Desk-scale secure-ranging simulator and attack-detection toolkit.

Simulates double-sided two-way ranging over reciprocal indoor multipath
channels, a distance-reduction attacker that injects an overpowered random
timestamp sequence, and a countermeasure in which both sides exchange
quantized autoencoder fingerprints of their channel estimates and compare
them by Hamming distance.
"""

__version__ = "0.1.0"

from . import (attack, autoencoder, channel, detector, errors, frames, harness,
               io, ranging)

__all__ = [
    "__version__",
    "attack",
    "autoencoder",
    "channel",
    "detector",
    "errors",
    "frames",
    "harness",
    "io",
    "ranging",
]
