# Numerical engines
