"""Conditional GFlowNets on enumerable hypergrids.

A laboratory for controllable multi-objective generation: preference- and
goal-conditioned trajectory-balance training over hypergrid environments
with sculptable objective landscapes, exact brute-force oracles, a metric
suite (IGD, PC-ent, Avg-PCC, goal-reaching accuracy), experiment
orchestration, and an HTTP inference service.
"""

__version__ = "0.1.0"
