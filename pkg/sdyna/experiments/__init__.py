"""Evaluation metrics and experiment orchestration"""
