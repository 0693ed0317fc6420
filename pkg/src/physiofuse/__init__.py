"""Pairwise physiological-signal descriptors for fatigue classification.

Pipeline: ingest -> preprocess -> segmentation -> features -> dataset ->
models -> metrics -> explain, orchestrated by :mod:`physiofuse.cli`.
"""
__version__ = "0.1.0"
