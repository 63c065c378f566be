"""Corrective source term hybrid modeling for 1D unsteady heat diffusion.

Modules
-------
mms         manufactured solutions, grids, alpha-sets
fvm         implicit Euler finite volumes, predictor, corrective source, corrected step
neural      numpy MLP, backprop, Adam, normalization, checkpoints
datagen     one-step training examples and the dataset file format
training    minibatch training with early stopping
evaluation  PBM/DDM/HAM rollouts, relative l2 errors, CSV/SVG reports
config, cli experiment configuration and the ``costa`` command
"""

__version__ = "0.1.0"
