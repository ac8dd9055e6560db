"""Physical parameters, the sweep schedule and the phase space charts"""
