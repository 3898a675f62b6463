"""Max-Weight multiplexing of network-slice bandwidth demands."""

from slicemux.kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
