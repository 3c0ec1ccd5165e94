from src.modeling.fit_graph import fit_graph

__all__ = ["fit_graph"]
