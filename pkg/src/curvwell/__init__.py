"""Numerical lab for second-order double-well phase-transition energies.

Modules:
  potential     -- double-well potentials and the quadratic-growth check
  field_core    -- uniform-grid fields, stencils, quadrature, serialization
  energy        -- the scaled/unscaled energies and their exact gradients
  optimizer     -- limited-memory quasi-Newton descent over nodal values
  profile       -- optimal transition profiles and boundary-layer infima
  inequalities  -- Rayleigh-quotient estimates and interpolation checks
  lab_cli       -- experiment harness: sweeps, scaling tables, reports
"""

__version__ = "0.1.0"
