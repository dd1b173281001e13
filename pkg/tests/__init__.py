"""
Test package for the QROM advice lab.

Unit tests live under ``tests/unit``, one module per library module.
"""
