"""Causal structure learning: global, local and Markov blanket learners."""

from .ci import CISource, DataCI, OracleCI, fisher_z_test, g2_test, make_ci, oracle_ci
from .dataset import Dataset, load_dataset, read_dataset, save_dataset, write_dataset
from .estimators import LocalStructureLearner, MarkovBlanketSelector, StructureLearner
from .graph import Dag, LocalStructure, Pdag, d_separated, dag_to_cpdag, markov_blanket, true_local
from .local import LOCAL_ALGORITHMS, learn_local
from .mb import MB_ALGORITHMS, learn_mb
from .metrics import compare_sets, compare_structure, record_efficiency
from .networks import load_network
from .structure import GLOBAL_ALGORITHMS, learn_global

__version__ = "0.1.0"

__all__ = [
    "CISource",
    "DataCI",
    "Dag",
    "Dataset",
    "GLOBAL_ALGORITHMS",
    "LOCAL_ALGORITHMS",
    "LocalStructure",
    "LocalStructureLearner",
    "MB_ALGORITHMS",
    "MarkovBlanketSelector",
    "OracleCI",
    "Pdag",
    "StructureLearner",
    "compare_sets",
    "compare_structure",
    "d_separated",
    "dag_to_cpdag",
    "fisher_z_test",
    "g2_test",
    "learn_global",
    "learn_local",
    "learn_mb",
    "load_dataset",
    "load_network",
    "make_ci",
    "markov_blanket",
    "oracle_ci",
    "read_dataset",
    "record_efficiency",
    "save_dataset",
    "true_local",
    "write_dataset",
]
