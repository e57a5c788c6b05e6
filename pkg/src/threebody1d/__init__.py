"""Three particles on a line with finite repulsive pair potentials.

Modules
-------
pair        1D scattering for one pair potential
geometry    Jacobi frames and frame rotations
grid        grids, spectral parameters, kernels, snapshots
operators   free resolvent, single inversions, momentum-space kernels
schwartz    alternating Schwartz inversion and its series
split       rank-two singular split of products
holder      weighted Hölder norm estimator
fits        singularity exponent fits
probe       limiting-absorption probe
systems     free, one-potential and three-potential back-ends
experiments batch experiments and replay
cli         command-line front end
"""
__version__ = "0.1.0"
