"""Sub-Riemannian geometry of hypersurfaces in the Heisenberg group."""
