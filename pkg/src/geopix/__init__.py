"""geopix: generation, oracles, rasterization, extraction and evaluation
for three hard geometric problems posed in pixel space."""

__version__ = "0.1.0"
