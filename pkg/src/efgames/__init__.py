"""Workbench for Ehrenfeucht-Fraisse games over ordered numeric structures.

The package plays and decides EF games (classical and single-round) on
finite structures with built-in order, addition, and unary predicates;
implements explicit duplicator strategies for contexts with addition and
with monadic or arbitrary unary predicates, verified against an exhaustive
game oracle; checks the combinatorial conditions those strategies rest on;
reproduces the eventual periodicity of addition-sentence spectra; and
provides the quantifier-elimination and encoding machinery for
order-constraint databases over a dense order.
"""

from .errors import (BudgetExceededError, EfgamesError, ExtractionError,
                     FormulaParseError, InfeasibleParameterError,
                     InsufficiencyError, PreconditionError, StrategyError,
                     StructureFormatError)
from .structures import (OrderedStructure, PartialMap, Point, Signature,
                         Window, active_domain, apply_embedding, as_point,
                         database_order_structure, identity_map,
                         is_n_embeddable, is_order_preserving,
                         is_partial_isomorphism, jth_smallest_embedding,
                         linear_order, make_structure, parse_structure,
                         print_structure)
from .logic import (Formula, evaluate, free_variables, is_bc_efo,
                    parse_formula, quantifier_depth, to_sexpr)
from .games import (Agent, GameOracle, GamePosition, GameTranscript, Round,
                    duplicator_wins_oracle, k_type, play_ef_game,
                    play_single_round_game, single_round_oracle,
                    sweep_all_spoiler_plays)
from .presburger import (GameParameters, LinCombination, SpectrumCertificate,
                         check_conditions_C, check_conditions_pair, check_W,
                         check_W_pair, check_semilinear, compute_spectrum,
                         duplicator_move_plain, duplicator_move_with_P,
                         enumerate_combinations, evaluate_combination,
                         generate_P_lemma_a, generate_Q, lift_to_rationals,
                         params, plus_game_structures,
                         q_integrality_certificate, rounds_for_translation,
                         translate_strategy_plus, verify_strategy_invariants)
from .ramsey import (MonadicContext, SpecialPositions, atomic_type,
                     color_h_subset, duplicator_single_round_bcefo,
                     find_uniform_positions_bcefo,
                     find_uniform_positions_monadic, gap_embedding,
                     interval_k_type, monadic_game_structures,
                     translate_strategy_bcefo, translate_strategy_monadic)
from .representation import (CellType, DenseStructure, Interpretation,
                             RegionRelation, RepStructure,
                             apply_interpretation, canonical_S, dense_equal,
                             enumerate_types, evaluate_dense,
                             interpretation_phi, interpretation_phi_prime,
                             locate, qe_normalize, region_equal,
                             rep_of_relation, rep_structure,
                             rewrite_sentence)

__version__ = "0.1.0"
