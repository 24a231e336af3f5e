"""Engine for composing data visualizations with real-world scene imagery
under a narrative intent: chart proposal and rendering, scene perception,
design mapping, tool-call execution, evaluation, and animated composition.
"""

__version__ = "0.1.0"
