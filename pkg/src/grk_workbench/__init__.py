"""Workbench for block-restricted (partial) Grover search.

Modules: ``reduced_model`` (3-dimensional dynamics), ``full_space`` (2**n
statevector check), ``grk_parameters`` (closed-form iteration counts),
``sequence_search`` (exhaustive word search), ``control`` (continuum PMP
extremals), ``extremal_optimizer`` (minimum-time arc schedules) and ``cli``.
"""
from .reduced_model import DatabaseGeometry, Letter, OperatorWord, apply_word, make_geometry

__all__ = ["DatabaseGeometry", "Letter", "OperatorWord", "apply_word", "make_geometry"]
