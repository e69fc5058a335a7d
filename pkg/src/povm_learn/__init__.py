"""PAC learning of POVM hypothesis classes, simulated at desk scale."""

__version__ = "0.1.0"
