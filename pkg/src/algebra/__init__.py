# Exact algebra: scalars, generalised polynomials, bracket indices, x k maps
