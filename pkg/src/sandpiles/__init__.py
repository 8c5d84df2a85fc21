"""Abelian sandpiles, burning bijections and transfer-current
determinants on finite multigraphs and the square lattice."""

__version__ = "0.1.0"

from .graphs import (EdgeRef, GraphError, LatticeBoxSpec, Multigraph,
                     OrientedEdge, SINK, build_graph, laplacian, lattice_box,
                     reduced_laplacian, wire)
from .errors import (BudgetExceededError, FileFormatError, NotMinimalError,
                     NotRecurrentError, NotStableError)
from .dynamics import (BurnRecord, TopplingReport, burning_sequence,
                       chain_heights, chain_step, dhar_recurrence_test,
                       first_phase_burns_rest, is_stable, maximal_sandpile,
                       sample_stationary, stabilize, two_phase_burn,
                       unburnt_after_first_phase, zero_sandpile)
from .oracles import (EnumerationBudget, ample_for_all_subsets,
                      brute_force_marginal, enumerate_recurrent,
                      enumerate_spanning_trees, enumerate_stable,
                      exact_stationary)
from .bijection import (RootedSpanningTree, StaticEdgeOrdering,
                        default_ordering, descendants_in_tree,
                        sandpile_to_tree, tree_event_no_entry,
                        tree_to_sandpile)
from .currents import (AbsenceMatrix, TransferCurrentMatrix, determinant,
                       prob_edges_absent, prob_edges_present,
                       spanning_tree_count, transfer_current)
from .minimal import (HoleDecomposition, MinimalWitness, edge_set_E,
                      entry_points, hole_collapsed_graph,
                      is_generalized_minimal, is_minimal, maximal_extension,
                      minimal_probability, minimal_total_particles)
from .lattice import (PotentialKernelTable, SeriesResult, SeriesTerm,
                      WiredForestSample, connected_candidates,
                      decay_experiment, descendants, estimate_core_probability,
                      height_prob_series, pair_correlation_zero_height,
                      potential_kernel, sample_wired_ust, shared_kernel,
                      wilson_wired_ust, wired_shell_graph, z2_minimal_probability,
                      z2_transfer_current, z2_wire, zero_height_probability)
