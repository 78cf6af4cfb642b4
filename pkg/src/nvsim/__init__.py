"""Cavity-coupled NV spin ensemble simulator.

Cumulant dynamics, dressed-state spectra, Fano interference and DC
magnetometry sensitivity maps, plus a CLI that writes plot-ready CSV.
"""
__version__ = "0.1.0"
