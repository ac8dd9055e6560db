"""Exact N-particle dynamics of the dimer in the Fock basis"""
