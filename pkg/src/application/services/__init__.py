"""
Application services for identity dataset cleaning.

Embedding, match-graph filtering, triplet training, metrics, the iterative
pipeline and the synthetic benchmark generator.
"""
