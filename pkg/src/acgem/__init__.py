"""Design and simulation toolkit for an AC-Stark-gradient echo memory in cold Rb-87."""

__version__ = "0.1.0"
