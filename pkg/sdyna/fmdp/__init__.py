"""Factored MDP problems, simulation and the ground-MDP oracle"""
