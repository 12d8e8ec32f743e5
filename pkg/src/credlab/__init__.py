"""credlab: adaptive nonparametric Bayesian credible sets in the Gaussian
white-noise sequence model, with a Monte Carlo harness for coverage,
credibility and posterior-independence experiments."""

from . import credsets, dirichlethist, gaussprior, harness, seqmodel, slabspike

__all__ = ["credsets", "dirichlethist", "gaussprior", "harness", "seqmodel",
           "slabspike"]

__version__ = "0.1.0"
