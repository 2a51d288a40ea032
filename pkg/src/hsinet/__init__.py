"""Spectral-spatial classifier for hyperspectral image cubes.

A numpy implementation of a hybrid 3D/2D convolutional network with
hand-derived backpropagation, plus the surrounding pipeline: PCA spectral
reduction, labeled patch extraction, stratified splitting, Adam training,
accuracy/kappa evaluation, and classification-map rendering.

Submodules are imported lazily so that the command-line entry point can
configure BLAS threading environment variables before numpy loads.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "cli",
    "errors",
    "formats",
    "layers",
    "metrics",
    "model",
    "optim",
    "pipeline",
    "synthetic",
    "tensor",
)

__all__ = list(_SUBMODULES)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(set(globals()) | set(_SUBMODULES))
