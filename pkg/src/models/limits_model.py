"""
limits_model.py: Enumeration caps shared by the exhaustive searches.
Operations that would exceed a cap raise TooLargeToEnumerate instead of truncating.
"""
from dataclasses import dataclass


@dataclass(frozen=True)
class Limits:
    """
    Caps on exhaustive enumeration.
    max_codewords bounds q^k, max_challenges bounds gamma and max_enumerate bounds the
    size of any other enumerated space (full challenge vector spaces, codebook cells).
    """
    max_codewords: int = 2**20
    max_challenges: int = 2**24
    max_enumerate: int = 2**24


DEFAULT_LIMITS = Limits()
