"""Common utilities for dimer hysteresis runs"""
