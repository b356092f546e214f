"""Heisenberg-limited Hamiltonian learning with static single-qubit fields."""
