"""Command line front end for running, scanning and rendering sweeps"""
