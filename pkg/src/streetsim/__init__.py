"""Offline street-graph simulator with place detection, VQA and navigation benchmarks."""
__version__ = "0.1.0"
