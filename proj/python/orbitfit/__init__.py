"""Python bindings for orbitfit.

Configs and models cross the boundary as JSON strings; point clouds as
float64 arrays of shape (n, d).
"""

import json

from ._core import (
    dudley_bound as _dudley_bound,
    evaluate,
    fit as _fit,
    generate as _generate,
    massart_bound,
    reconstruct,
    run_cli,
    theorem2_certificate,
    version,
)

__version__ = version()


def _text(obj):
    return obj if isinstance(obj, str) else json.dumps(obj)


def generate(config, seed=0):
    return _generate(_text(config), seed)


def fit(points, model, train=None, seed=0):
    return _fit(points, _text(model), _text(train or {}), seed)


def dudley_bound(cls, n, options=None):
    return json.loads(_dudley_bound(_text(cls), n, _text(options or {})))


__all__ = [
    "dudley_bound",
    "evaluate",
    "fit",
    "generate",
    "massart_bound",
    "reconstruct",
    "run_cli",
    "theorem2_certificate",
    "version",
]
