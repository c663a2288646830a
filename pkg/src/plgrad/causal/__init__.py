from .graphs import (Dag, CycleError, gen_er_graph, gen_sf_graph, gen_graph, random_baseline,
                     read_edge_list, shd, topological_order, write_edge_list)
from .score import (FistaConfig, OrderScoreResult, causal_objective, recover_dag, score_order,
                    val_score_diff)
from .sem import WeightedSem, gen_sem_data, read_data, sample_sem, write_data
