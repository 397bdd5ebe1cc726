"""Thermometry of a bosonic mode through cross-Kerr and dispersive probes.

Library units are SI with angular frequencies in rad/s; the CLI and the
``from_hz`` constructors take ordinary frequencies in Hz.
"""

__version__ = "0.1.0"
