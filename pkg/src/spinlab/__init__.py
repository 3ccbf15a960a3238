"""Free-fermion and exact-diagonalisation tools for quantum spin chains."""
