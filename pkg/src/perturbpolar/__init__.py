"""Polar codes with perturbation-enhanced SC/SCL decoding."""

__version__ = "0.1.0"

from .errors import ConfigurationError, DomainError  # noqa: E402
from .polar_core import (CodeConfig, CrcSpec, bit_reversal_permute, crc_check,  # noqa: E402
                         crc_encode, encode, generator_matrix)
