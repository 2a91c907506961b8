"""PEMID - prediction-error identification of state-space models with noise models."""

import jax

# All rollouts and optimizers work in float64.
jax.config.update("jax_enable_x64", True)

__version__ = "0.1.0"
__author__ = "pemid developers"
