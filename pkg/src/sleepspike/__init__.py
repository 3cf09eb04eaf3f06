"""Sleep-spike nonce-leakage laboratory for ECDSA.

Instrumented constant-shape scalar multiplication, a two-component
power-spike simulator, measurement-side trace analysis, and
lattice-based private-key recovery from partially known nonces.
"""

from ._backend import BACKEND as active_backend_name

__version__ = "0.1.0"
__all__ = ["active_backend_name", "__version__"]
