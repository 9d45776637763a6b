"""
Provenance anomaly ranking toolkit.

Turns audit-event provenance into Boolean behavioural contexts, scores
every process with pattern-based anomaly detectors (AVF, FPOF, OD, OC3,
CompreX) and measures how well attacks are ranked.
"""

__version__ = "1.0.0"
