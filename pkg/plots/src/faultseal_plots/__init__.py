"""Figure generation for simulator outputs.

Figures are pure views of the documented CSV/JSON schemas produced by the
simulator runs; nothing here imports or recomputes solver code.
"""

__version__ = "0.1.0"
