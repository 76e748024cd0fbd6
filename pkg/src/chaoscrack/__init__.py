"""Cryptanalysis workbench for a compound-chaos image cipher."""
