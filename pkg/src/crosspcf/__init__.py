## crosspcf — second order conditional composite likelihood for multivariate LGCPs. ⚘

__version__ = "0.1-dev"
