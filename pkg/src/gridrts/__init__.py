"""gridrts: a deterministic 1v1 grid RTS with a centralized-control RL stack."""

__version__ = "0.1.0"
