#pragma once

#include <string>
#include <vector>

#include "regbip/graph.hpp"

namespace regbip {

// Evidence that g is an (n,d,lambda)-graph at the requested budget.
struct SpectralCertificate {
    int n = 0;
    int d = 0;
    double lambda = 0.0;         // max(|lambda_2|, |lambda_n|)
    double lambda_budget = 0.0;  // d * budget_fraction
    bool satisfied = false;      // lambda <= budget, tolerance 1e-8
    std::string method;          // "jacobi" or "power_estimated"
};

struct SpectralOptions {
    int dense_threshold = 2000;  // above this, power iteration estimate
    int jacobi_max_sweeps = 100;
    double jacobi_off_tol = 1e-10;  // off-diagonal Frobenius threshold
    int power_iterations = 1000;
};

// Ascending eigenvalues of the dense symmetric adjacency matrix of g,
// cyclic Jacobi rotations. Throws on non-convergence within the sweep cap.
std::vector<double> adjacency_spectrum(const Graph& g, const SpectralOptions& opts = {});

// Requires g regular; budget_fraction > 0 (1/12 is the strict setting).
SpectralCertificate certify(const Graph& g, double budget_fraction, const SpectralOptions& opts = {});

struct MixingCheck {
    double lhs = 0.0;  // |e(S,T) - (d/n)|S||T||
    double rhs = 0.0;  // lambda * sqrt(|S||T|)
    bool holds = false;
};

MixingCheck mixing_check(const Graph& g, const SpectralCertificate& cert,
                         const std::vector<int>& s, const std::vector<int>& t);

std::string certificate_to_json(const SpectralCertificate& cert);

}  // namespace regbip
