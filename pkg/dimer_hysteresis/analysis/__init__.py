"""Experiments that combine the quantum, phase space and classical layers"""
