"""Seven classifiers behind one fit / predict / score contract."""
from .base import Classifier, ClassifierSpec, make_classifier
from .tree import DecisionTree, Tree, build_tree
from .logreg import LogisticRegression
from .knn import KNearestNeighbors
from .decision_table import DecisionTable
from .forest import RandomForest
from .adaboost import AdaBoost
from .gbm import GradientBoosting

KINDS = ("logreg", "tree", "knn", "decision_table", "random_forest", "adaboost", "gbm")

__all__ = [
    "Classifier", "ClassifierSpec", "make_classifier", "Tree", "build_tree", "KINDS",
    "DecisionTree", "LogisticRegression", "KNearestNeighbors", "DecisionTable",
    "RandomForest", "AdaBoost", "GradientBoosting",
]
