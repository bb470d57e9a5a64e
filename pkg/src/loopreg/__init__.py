"""Rescale-square regularization of loops in the punctured plane."""
