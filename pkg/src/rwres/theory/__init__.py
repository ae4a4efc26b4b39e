"""Closed-form laws and bounds for the walk-count estimator."""
from .estimator import (EventHistory, TheoryParams, TriggerBound, bennett_h, estimate_variance,
                        expected_estimate, fork_prob_bound, pfork_plus, term_prob_bound)
from .fit import (fit_hitting_rate, fit_rate, fit_return_rate, sample_hitting_times,
                  spectral_return_rates)
from .forked import (forked_cdf, forked_mean, forked_second_moment, forked_var,
                     forked_var_absolute, forked_var_integrated)
from .irwin_hall import design_thresholds, irwin_hall_cdf, scaled_failed_cdf
from .recovery import (GrowthBound, OvershootSeries, ReactionBound, default_eps_grid,
                       default_thresholds, growth_prob_bound, growth_time_bound, overshoot_approx,
                       overshoot_exact, reaction_time_bound, reaction_time_chain)

__all__ = [
    "EventHistory", "TheoryParams", "TriggerBound", "bennett_h", "estimate_variance",
    "expected_estimate", "fork_prob_bound", "pfork_plus", "term_prob_bound",
    "fit_hitting_rate", "fit_rate", "fit_return_rate", "sample_hitting_times",
    "spectral_return_rates", "forked_cdf", "forked_mean", "forked_second_moment", "forked_var",
    "forked_var_absolute", "forked_var_integrated", "design_thresholds", "irwin_hall_cdf",
    "scaled_failed_cdf", "GrowthBound", "OvershootSeries", "ReactionBound", "default_eps_grid",
    "default_thresholds", "growth_prob_bound", "growth_time_bound", "overshoot_approx",
    "overshoot_exact", "reaction_time_bound", "reaction_time_chain",
]
