"""Decision trees: the shared representation and its incremental learner"""
