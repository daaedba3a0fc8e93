"""Molecule generation with explicit multi-step synthesis routes.

The package is organised around a synthesis DAG: a directed acyclic graph
whose nodes are molecules and whose edges run from reactants into the
product they form.  Routes are built, serialized into action sequences,
decoded by an autoregressive model, and optimised against scalar
objectives.
"""

__version__ = "0.1.0"
