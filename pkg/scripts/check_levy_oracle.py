#!/usr/bin/env python3
"""
Check the closed-form local-time moments of reflected Brownian motion by Monte Carlo

For Brownian motion on [0, inf) reflected at 0 and started there, the boundary local time
satisfies E exp(k l_T) = 2 exp(k^2 T / 2) Phi(k sqrt(T)). This script simulates the process
with a fine step and prints the Monte Carlo moments next to the closed form.

Usage:
    python scripts/check_levy_oracle.py [--k 0.5,1,2] [--T 1.0] [--h 1e-4] [--N 20000]

Exit status is 1 when a relative error exceeds --tol.
"""

import sys
import os
import argparse

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from mvreflect.geometry import Interval
from mvreflect.sde import CoefficientSpec, GranularMedia, ScalarIsotropic, SimConfig, get_potential, make_initial
from mvreflect.sde import simulate_mckean
from mvreflect.verify import bootstrap_ci_mean, levy_local_time_oracle


def simulate_local_time(T, h, N, seed, threads):
    coefficients = CoefficientSpec(GranularMedia(get_potential('zero'), get_potential('zero')),
                                   ScalarIsotropic(1.0, 1))
    cfg = SimConfig(T=T, h=h, N=N, domain=Interval(0.0, np.inf, scheme='project', tilde='all'),
                    coefficients=coefficients,
                    initial=make_initial('dirac', point=[0.0]), seed=seed, threads=threads, progress=True)
    cfg = cfg.replace(record_stride=cfg.n_steps)
    return simulate_mckean(cfg).local_time


def main():
    """Main execution function."""
    parser = argparse.ArgumentParser(
        description='Compare Monte Carlo local-time moments of reflected Brownian motion with the closed form'
    )
    parser.add_argument('--k', default='0.5,1,2', help='Comma separated exponents (default: 0.5,1,2)')
    parser.add_argument('--T', type=float, default=1.0, help='Horizon (default: 1.0)')
    parser.add_argument('--h', type=float, default=1e-4, help='Step size (default: 1e-4)')
    parser.add_argument('--N', type=int, default=20000, help='Number of paths (default: 20000)')
    parser.add_argument('--seed', type=int, default=1234, help='Seed (default: 1234)')
    parser.add_argument('--threads', type=int, default=1, help='Worker threads (default: 1)')
    parser.add_argument('--tol', type=float, default=0.05, help='Largest relative error (default: 0.05)')
    args = parser.parse_args()

    k_list = [float(k) for k in args.k.split(',') if k.strip()]
    print("Simulating {} reflected paths on [0, {}] with h = {}".format(args.N, args.T, args.h))
    local_time = simulate_local_time(args.T, args.h, args.N, args.seed, args.threads)

    print("\n" + "=" * 72)
    print("{:>6} | {:>12} | {:>12} | {:>23} | {:>8}".format('k', 'Monte Carlo', 'closed form', '95% CI', 'rel err'))
    print("-" * 72)
    worst = 0.0
    for k in k_list:
        values = np.exp(k * local_time)
        estimate = float(values.mean())
        low, high = bootstrap_ci_mean(values, args.seed, 'levy_oracle/{}'.format(k))
        exact = levy_local_time_oracle(k, args.T)
        rel = abs(estimate - exact) / exact
        worst = max(worst, rel)
        print("{:6.3g} | {:12.6g} | {:12.6g} | [{:10.5g}, {:10.5g}] | {:8.4f}".format(k, estimate, exact, low, high,
                                                                                     rel))
    print("=" * 72)

    if worst > args.tol:
        print("\n✗ Largest relative error {:.4f} exceeds {}".format(worst, args.tol))
        sys.exit(1)
    print("\n✓ All moments within {:.0%} of the closed form".format(args.tol))


if __name__ == '__main__':
    main()
