"""Lie algebra data, ribbon graphs, connections, Poisson brackets and the Ruijsenaars leaf"""
