"""ravenlab: a self-contained Raven-style visual reasoning laboratory.

Layers, bottom to top:

    puzzles   symbolic instances (rules, panels, generator, dataset files)
    oracle    exact solver used to certify every generated instance
    render    deterministic rasterizer, symbolic panel -> uint8 image
    autograd  small reverse-mode engine on float64 numpy arrays
    model     multi-granularity modular network built on autograd
    harness   training loop, evaluation, generalization experiments
"""

__version__ = "0.1.0"

from . import errors
from .puzzles import Config, Puzzle, generate_puzzle
from .oracle import solve

__all__ = ["errors", "Config", "Puzzle", "generate_puzzle", "solve", "__version__"]
