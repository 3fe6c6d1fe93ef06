"""fockscope: numerical checks for truncated Fock-space spectral analysis.

Library layout
--------------
multiindex      sparse multiindex calculus
grids           momentum grids and single-particle vectors
localization    mollifier generators, Gram-Schmidt families, the T operator
qm              square-integrability checks for translated wavefunctions
fock            truncated symmetric Fock space, energy bounds
weyl            Weyl/Wick algebra, coincidence forms, stress-energy check
infrared        spectral densities and infrared-order estimation
phase_space     rank-one expansions, nuclear p-norms, collective norms
epsilon_content packing counts and covering bounds
scattering      Klein-Gordon wavepackets and asymptotic-state checks
cli             experiment runner (``fockscope run``/``fockscope list``)
"""

__version__ = "0.1.0"
