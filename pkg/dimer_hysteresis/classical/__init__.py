"""Mean-field flow, classical ensembles and separatrix geometry"""
