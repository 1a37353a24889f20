"""Python surface of the planning engine: parsing, planning, episode runs."""

from nesyro._core import (  # noqa: F401
    calibrate_epsilon,
    parse_domain_summary,
    parse_policy,
    plan,
    run_episode,
    run_suite,
    verify_policy,
)

__all__ = [
    "calibrate_epsilon",
    "parse_domain_summary",
    "parse_policy",
    "plan",
    "run_episode",
    "run_suite",
    "verify_policy",
]
