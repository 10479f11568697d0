"""Tutoring engine for linear and exponential extrapolation tasks.

The package diagnoses a student's final answer by matching it against
enumerated computation traces (correct and buggy solution steps, with
optional rate truncation), routes errors to matching subtasks, gates the
feedback a session may show, tunes parameter banks for unambiguous
diagnosis, and codes event logs into units of analysis.
"""

__version__ = "0.1.0"
