"""Mobile anomalous-diffusive molecular communication channel.

Analytic first-hitting-time densities for a 1-D channel whose transmitter and
receiver diffuse alongside the molecule, a particle simulator to check them, and
a timing-modulated erasure channel built on the resulting hitting probabilities.
"""

__version__ = "0.1.0"
