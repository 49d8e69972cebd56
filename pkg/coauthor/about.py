__license__ = "BSD"
__summary__ = "Networked co-authorship ultimatum game simulator with greedy and Double-DQN authors"
__title__ = "coauthor"
__version__ = "0.4.0"
