import numpy as np
from rich.console import Console

_console = Console(stderr=True, highlight=False)
_verbose = True


def set_verbosity(enabled):
    global _verbose
    _verbose = bool(enabled)


def Logger(content):
    """
    Log a line to stderr; stdout is kept for command results.
    Args:
        content: text to print
    """
    if _verbose:
        _console.print(content)


def make_rng(seed):
    """
    Seeded generator used everywhere randomness is needed.
    Args:
        seed: 64-bit integer seed
    Returns:
        numpy Generator on the PCG64 bit generator
    """
    return np.random.Generator(np.random.PCG64(seed))


RNG_ALGORITHM = 'numpy.PCG64'
