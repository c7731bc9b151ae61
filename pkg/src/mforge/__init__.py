"""Jacobi multipliers, Lagrangians and non-local symmetries for x'' = F(x, x')."""
