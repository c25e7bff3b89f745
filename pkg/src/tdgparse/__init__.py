"""Temporal dependency graph toolkit for news documents.

Builds temporal dependency graphs by ranking candidate reference
timexes/events for every mention and decoding a cycle-free graph. Ships a
compact trainable scorer with a discourse-profiling distillation mode,
partitioned evaluation, a synthetic corpus generator, and distributional
analyses of reference mentions across discourse content types.
"""

__version__ = "0.1.0"
