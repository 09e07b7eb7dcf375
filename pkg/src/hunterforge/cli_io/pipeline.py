from __future__ import annotations
from itertools import product
from typing import Callable, Dict, Hashable, Iterable, List, Optional
import logging

import networkx as nx

logger = logging.getLogger(__name__)


class StageGraph(object):
    """Directed acyclic graph of pipeline stages

    A stage may start once every stage it depends on is complete.
    """

    def __init__(self):
        self._graph = nx.DiGraph()

    def add_stage(self, stage: Hashable, action: Optional[Callable] = None, dependencies: Iterable[Hashable] = None):
        """Add a stage and the stages it waits for

        :param stage: stage name
        :type stage: Hashable
        :param action: called with no arguments when the stage runs; returns an exit code
        :type action: Callable, optional
        :param dependencies: stages that must complete first
        :type dependencies: Iterable[Hashable], optional
        :raises ValueError: if the new edges close a cycle
        """
        self._graph.add_node(stage, complete=False, action=action)
        if dependencies is None:
            return

        for d in dependencies:
            if d not in self._graph.nodes:
                self._graph.add_node(d, complete=False, action=None)

        edges = list(product(dependencies, [stage]))
        self._graph.add_edges_from(edges)
        if not nx.is_directed_acyclic_graph(self._graph):
            self._graph.remove_edges_from(edges)
            raise ValueError(f"stage '{stage}' would close a dependency cycle")

    def __contains__(self, stage) -> bool:
        return stage in self._graph.nodes

    def __len__(self) -> int:
        return self._graph.number_of_nodes()

    def set_complete(self, stage):
        nx.set_node_attributes(self._graph, {stage: {"complete": True}})

    def is_complete(self, stage) -> bool:
        return self._graph.nodes[stage]["complete"]

    def can_start(self, stage) -> bool:
        return all(self.is_complete(p) for p in self._graph.predecessors(stage))

    def reset(self):
        nx.set_node_attributes(self._graph, False, "complete")

    def order(self) -> List[Hashable]:
        """Stages in dependency order, ties broken by name"""
        return list(nx.lexicographical_topological_sort(self._graph, key=str))

    def run(self) -> Dict[Hashable, int]:
        """Run every stage in dependency order

        A stage whose action returns exit code 1 stops the run; stages that
        depend on it are not started.

        :return: exit code per stage that ran
        :rtype: Dict[Hashable, int]
        """
        codes = {}
        for stage in self.order():
            if not self.can_start(stage):
                logger.warning("stage %s skipped, a dependency did not complete", stage)
                continue
            action = self._graph.nodes[stage]["action"]
            logger.info("running stage %s", stage)
            code = int(action()) if action is not None else 0
            codes[stage] = code
            if code == 1:
                logger.error("stage %s failed", stage)
                break
            self.set_complete(stage)
        return codes

    def draw(self, show=True):
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots()
        for k, layer in enumerate(nx.topological_generations(self._graph)):
            for stage in layer:
                self._graph.nodes[stage]["layer"] = k
        pos = nx.multipartite_layout(self._graph, subset_key="layer")
        colors = ["tab:green" if self.is_complete(n) else "tab:gray" for n in self._graph.nodes]
        nx.draw(self._graph, pos, ax=ax, with_labels=True, node_color=colors, arrows=True)
        if show:
            plt.show()
        return fig, ax
