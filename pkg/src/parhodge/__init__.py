"""parhodge: alcove arithmetic, relative degrees, stability verdicts and the
Higgs bundle / local system dictionary for parabolic G-Higgs bundles."""

__version__ = "0.1.0"
