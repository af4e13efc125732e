"""annotriage: uncertainty triage, label cleaning, and Bayesian ensembling
for annotation workflows."""

__version__ = "0.1.0"
