"""Heegner points on X0(36), cube-sum certificates, and height/L-value checks.

The package is organized bottom-up:

  core        precision context, complex AGM, rational recognition
  eisenstein  arithmetic of Z[omega] and the cubic residue symbol
  quadforms   binary quadratic forms, class groups, form <-> ideal
  x36         cusps, the normalizer translation table, local U-membership
  ellcurve    y^2 = x^3 + k: group law, torsion, a_p, periods, heights
  lseries     L(s) and L'(s) at s=1 with conductor/sign validation
  heegner     CM points, Galois orbits, chi-weighted divisors, recognition
  local       ramified-torus coset sums, characters, order intersections
  gz          end-to-end height identity checks and cube-sum certificates
  cli         the `cubesum` command
"""

__version__ = "0.1.0"
