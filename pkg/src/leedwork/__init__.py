"""leedwork: offline-capable green-building certification workbench.

Ingests project data and documents, orchestrates credit analysis, energy
simulation, and location assessment, and generates verified draft
compliance reports against a credit-chunked knowledge base.
"""

__version__ = "0.1.0"
