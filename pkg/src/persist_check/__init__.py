"""
persist-check - Executable semantics and proof-outline checker for persistent x86.

This package provides:
- An operational semantics over a message-list memory with per-thread views
- Exhaustive exploration, crash-reachable NVMs and crash-invariant checking
- View-based assertions and validity checking of proof outlines
- Falsification testing of the proof-rule catalogue
- A litmus file format with a bundled corpus
"""

__version__ = "0.1.0"
