"""Figure regeneration from dqcbench CSV files.

Reads the versioned sweep CSVs and renders publication-style figures.
Strictly file-consuming: no simulation package is imported and no physics
is recomputed; every plotted quantity is a column of the CSV or plain
arithmetic on columns.
"""

__version__ = "0.1.0"
