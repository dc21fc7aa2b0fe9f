"""
Test fixtures package for slitforge

This package contains the λ-specs and parameter packs shared by the tests.
"""
