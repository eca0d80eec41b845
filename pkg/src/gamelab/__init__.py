"""gamelab: a numerical laboratory for learning in games.

Three instruments share one bimatrix core: exact rational Nash
enumeration with counting-law checks, coupled replicator learning
dynamics with Hamiltonian and chaos diagnostics, and the minority game
with its volatility transition.
"""

__version__ = "0.1.0"
