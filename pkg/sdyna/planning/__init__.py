"""Structured dynamic programming over decision trees"""
