"""Complementary pairs stability selection with error-control bounds."""

from ._core import (
    DomainError,
    FrequencyProfile,
    InfeasibleLevel,
    InputError,
    NumericFailure,
    SelectionFailure,
    UnsupportedRegime,
    choose_threshold,
    combined_bound,
    complementary_pairs,
    fit_lasso,
    fit_path,
    is_log_concave,
    is_r_concave,
    is_unimodal,
    lambda_max,
    make_beta,
    mb_bound,
    r_concave_extremal,
    r_concave_tail_max,
    run_scenario,
    select_q,
    selection_frequencies,
    selection_frequencies_with,
    stratified_pairs,
    toeplitz_sigma,
    unimodal_factor_C,
    unimodal_markov,
    worst_case_factor,
)

__version__ = "0.1.0"


def run(X, y, q=None, lambda_=None, family="gaussian", B=50, level=1.0, theta=None, seed=1,
        stratify=False, threads=0):
    """Stability selection with the lasso and a threshold from the combined r-concave bound.

    Exactly one of q and lambda_ is given. With lambda_, q is estimated as the sum of
    pi_hat. Returns a dict with the profile, theta, tau, the guaranteed bound on the
    expected number of low-probability selections (with |L_theta| replaced by p) and
    the selected column indices.
    """
    profile = selection_frequencies(X, y, q=q, lambda_=lambda_, family=family, B=B, seed=seed,
                                    stratify=stratify, threads=threads)
    p = profile.p
    q_used = float(q) if q is not None else profile.q_hat
    if theta is None:
        theta = q_used / p
    tau = choose_threshold(theta, B, level, p)
    bound = float(p) if tau <= theta else p * combined_bound(theta, tau, B)
    return {
        "profile": profile,
        "q": q_used,
        "theta": theta,
        "tau": tau,
        "bound": bound,
        "selected": profile.cpss_select(tau),
    }
