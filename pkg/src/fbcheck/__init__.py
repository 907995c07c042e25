"""Executable semantics and bounded checking for PLC function block diagrams.

Submodules: :mod:`time_core` (ticks, schedules, filtered signals),
:mod:`timing_ops` (Held_For and timers), :mod:`tables` and :mod:`blocks`
(condition tables and function blocks), :mod:`netlist` (diagram composition and
simulation), :mod:`subsystems` (Trip Sealed-In, Pushbutton), :mod:`verifier`
(exhaustive checks and shrinking), :mod:`suites` and :mod:`cli`.
"""

__version__ = "0.1.0"
