"""SU(2) coherent states, Husimi grids and their entropies"""
