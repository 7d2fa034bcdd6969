"""Tree automata, definable set systems and VC-density bounds for CMSO."""

__version__ = "0.1.0"
