#include "regbip/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

namespace regbip {

namespace {

// Cyclic Jacobi on a dense symmetric matrix, row-major storage.
// Terminates when the off-diagonal Frobenius norm drops below off_tol.
std::vector<double> jacobi_eigenvalues(std::vector<double> a, int n, int max_sweeps, double off_tol) {
    auto at = [&](int i, int j) -> double& { return a[static_cast<std::size_t>(i) * n + j]; };
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += at(i, j) * at(i, j);
        if (std::sqrt(2.0 * off) < off_tol) {
            std::vector<double> eig(static_cast<std::size_t>(n));
            for (int i = 0; i < n; ++i) eig[static_cast<std::size_t>(i)] = at(i, i);
            std::sort(eig.begin(), eig.end());
            return eig;
        }
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = at(p, q);
                if (apq == 0.0) continue;
                double app = at(p, p), aqq = at(q, q);
                double theta = (aqq - app) / (2.0 * apq);
                double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = at(k, p), akq = at(k, q);
                    at(k, p) = c * akp - s * akq;
                    at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = at(p, k), aqk = at(q, k);
                    at(p, k) = c * apk - s * aqk;
                    at(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    throw std::runtime_error("jacobi eigensolver did not converge within sweep cap");
}

// Largest |eigenvalue| of A - (d/n)J by power iteration. For a d-regular
// graph that matrix has spectrum {0} ∪ {lambda_2..lambda_n}, so the result
// estimates lambda(G).
double power_lambda(const Graph& g, int d, int iterations) {
    const int n = g.n();
    std::vector<double> x(static_cast<std::size_t>(n));
    // Deterministic start vector with zero mean and varied signs.
    for (int i = 0; i < n; ++i)
        x[static_cast<std::size_t>(i)] = std::cos(2.5 * (i + 1)) + 0.1 * std::sin(7.3 * (i + 1));
    double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    for (auto& xi : x) xi -= mean;
    std::vector<double> y(static_cast<std::size_t>(n));
    double norm = 0.0;
    const double dn = static_cast<double>(d) / n;
    for (int it = 0; it < iterations; ++it) {
        double sum = std::accumulate(x.begin(), x.end(), 0.0);
        for (int v = 0; v < n; ++v) {
            double acc = -dn * sum;
            for (int u : g.neighbors(v)) acc += x[static_cast<std::size_t>(u)];
            y[static_cast<std::size_t>(v)] = acc;
        }
        norm = std::sqrt(std::inner_product(y.begin(), y.end(), y.begin(), 0.0));
        if (norm == 0.0) return 0.0;
        for (int v = 0; v < n; ++v) x[static_cast<std::size_t>(v)] = y[static_cast<std::size_t>(v)] / norm;
    }
    return norm;
}

}  // namespace

std::vector<double> adjacency_spectrum(const Graph& g, const SpectralOptions& opts) {
    const int n = g.n();
    std::vector<double> a(static_cast<std::size_t>(n) * n, 0.0);
    for (auto [u, v] : g.edges()) {
        a[static_cast<std::size_t>(u) * n + v] = 1.0;
        a[static_cast<std::size_t>(v) * n + u] = 1.0;
    }
    return jacobi_eigenvalues(std::move(a), n, opts.jacobi_max_sweeps, opts.jacobi_off_tol);
}

SpectralCertificate certify(const Graph& g, double budget_fraction, const SpectralOptions& opts) {
    if (budget_fraction <= 0.0) throw std::invalid_argument("budget_fraction must be > 0");
    auto reg = g.regular_degree();
    if (!reg) throw std::invalid_argument("certify requires a regular graph");
    const int d = *reg;
    SpectralCertificate cert;
    cert.n = g.n();
    cert.d = d;
    cert.lambda_budget = d * budget_fraction;
    if (g.n() <= opts.dense_threshold) {
        auto eig = adjacency_spectrum(g, opts);
        double lambda1 = eig.back();
        if (std::abs(lambda1 - d) > 1e-6)
            throw std::runtime_error("eigensolver self-check failed: lambda_1 != d");
        double second = eig.size() >= 2 ? eig[eig.size() - 2] : 0.0;
        cert.lambda = std::max(std::abs(second), std::abs(eig.front()));
        if (eig.size() == 1) cert.lambda = 0.0;
        cert.method = "jacobi";
    } else {
        cert.lambda = power_lambda(g, d, opts.power_iterations);
        cert.method = "power_estimated";
    }
    cert.satisfied = cert.lambda <= cert.lambda_budget + 1e-8;
    return cert;
}

MixingCheck mixing_check(const Graph& g, const SpectralCertificate& cert,
                         const std::vector<int>& s, const std::vector<int>& t) {
    MixingCheck mc;
    double ssize = static_cast<double>(s.size());
    double tsize = static_cast<double>(t.size());
    long long est = crossing_pair_count(g, s, t);
    mc.lhs = std::abs(static_cast<double>(est) - (static_cast<double>(cert.d) / g.n()) * ssize * tsize);
    mc.rhs = cert.lambda * std::sqrt(ssize * tsize);
    mc.holds = mc.lhs <= mc.rhs + 1e-9;
    return mc;
}

std::string certificate_to_json(const SpectralCertificate& cert) {
    nlohmann::json j;
    j["n"] = cert.n;
    j["d"] = cert.d;
    j["lambda"] = cert.lambda;
    j["budget"] = cert.lambda_budget;
    j["satisfied"] = cert.satisfied;
    j["method"] = cert.method;
    return j.dump(2);
}

}  // namespace regbip
