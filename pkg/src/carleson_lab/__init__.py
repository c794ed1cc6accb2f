"""carleson-lab: verification lab for axiomatic Carleson operators on finite
doubling metric measure spaces.

The package builds grid and tile structures over a finite space, runs the
forest/antichain decomposition of the tile set, evaluates the modulated
singular-integral operators, and verifies every finitely checkable axiom
and lemma-level inequality, emitting machine-readable reports and
phase-plane diagrams.
"""

__version__ = "0.1.0"
