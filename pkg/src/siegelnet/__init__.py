"""Discriminative neural networks on Siegel spaces.

Subpackages: matfun (matrix-function kernel), siegel/spd (geometry), gyro
(quotient operations), layers (MLR heads and FC layers), diff (gradients and
training), models (classifier assembly), data (experiment pipelines and
serialization), selfcheck (property suites), cli (experiment harness).
"""

from . import errors

__all__ = ["errors"]
__version__ = "0.1.0"
