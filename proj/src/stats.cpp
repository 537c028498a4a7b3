#include "veripatient/stats.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

#include <boost/math/distributions/students_t.hpp>

namespace veripatient::eval {

double cohens_kappa(const std::vector<int>& ratings_a, const std::vector<int>& ratings_b) {
    if (ratings_a.size() != ratings_b.size()) {
        throw std::invalid_argument("kappa: rating vectors differ in length");
    }
    const size_t n = ratings_a.size();
    if (n < 2) {
        throw std::invalid_argument("kappa: need at least 2 ratings");
    }

    std::map<int, double> row_marginal;
    std::map<int, double> col_marginal;
    double agree = 0.0;
    for (size_t i = 0; i < n; ++i) {
        row_marginal[ratings_a[i]] += 1.0;
        col_marginal[ratings_b[i]] += 1.0;
        if (ratings_a[i] == ratings_b[i]) agree += 1.0;
    }

    const double p_o = agree / static_cast<double>(n);
    double p_e = 0.0;
    for (const auto& [category, row_count] : row_marginal) {
        auto it = col_marginal.find(category);
        if (it != col_marginal.end()) {
            p_e += (row_count / static_cast<double>(n)) * (it->second / static_cast<double>(n));
        }
    }

    if (p_e >= 1.0 - 1e-12) {
        if (p_o >= 1.0 - 1e-12) return 1.0;
        throw std::invalid_argument("kappa: degenerate marginals with disagreement");
    }
    return (p_o - p_e) / (1.0 - p_e);
}

double pearson_r(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) {
        throw std::invalid_argument("pearson: vectors differ in length");
    }
    const size_t n = x.size();
    if (n < 2) {
        throw std::invalid_argument("pearson: need at least 2 observations");
    }

    double mean_x = 0.0;
    double mean_y = 0.0;
    for (size_t i = 0; i < n; ++i) {
        mean_x += x[i];
        mean_y += y[i];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);

    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mean_x;
        const double dy = y[i] - mean_y;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx == 0.0 || syy == 0.0) {
        throw std::invalid_argument("pearson: zero variance input");
    }
    return sxy / std::sqrt(sxx * syy);
}

TestStats paired_t_test(const std::vector<double>& clean, const std::vector<double>& noisy) {
    if (clean.size() != noisy.size()) {
        throw std::invalid_argument("paired t-test: vectors differ in length");
    }
    const size_t n = clean.size();
    if (n < 2) {
        throw std::invalid_argument("paired t-test: need at least 2 pairs");
    }

    double mean_d = 0.0;
    for (size_t i = 0; i < n; ++i) mean_d += noisy[i] - clean[i];
    mean_d /= static_cast<double>(n);

    double ss = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = (noisy[i] - clean[i]) - mean_d;
        ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
        throw std::invalid_argument("paired t-test: zero variance in differences");
    }

    TestStats stats;
    stats.df = static_cast<int>(n) - 1;
    stats.t = mean_d / (sd / std::sqrt(static_cast<double>(n)));
    stats.cohens_d = mean_d / sd;

    const boost::math::students_t_distribution<double> dist(stats.df);
    stats.p_two_tailed = 2.0 * boost::math::cdf(dist, -std::fabs(stats.t));
    return stats;
}

} // namespace veripatient::eval
