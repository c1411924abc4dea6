"""Simulation laboratory for ordered jump ensembles.

Independent continuous-time walks conditioned never to collide, the
harmonic and superharmonic weights that drive that conditioning, samplers
for the conditioned law (rejection and interacting particles), coupled
eigenvalue diffusions, and the edge rescalings that connect the walks to
random-matrix statistics.  Everything is exactly reproducible from a seed,
including under multi-worker execution and sharded runs.
"""

__version__ = "0.1.0"
