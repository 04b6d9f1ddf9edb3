"""SDYNA agents and baselines"""
