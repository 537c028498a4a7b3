#pragma once

// Brute-force reference implementations for the agreement and test
// statistics, written independently of the library code paths: direct
// formula evaluation in long double, and numerical quadrature for the
// t-distribution tail instead of the incomplete-beta route.

#include <cmath>
#include <functional>
#include <map>
#include <vector>

namespace stat_oracle {

inline long double kappa(const std::vector<int>& a, const std::vector<int>& b) {
    const size_t n = a.size();
    std::map<int, long double> rows, cols;
    long double agree = 0;
    for (size_t i = 0; i < n; ++i) {
        rows[a[i]] += 1;
        cols[b[i]] += 1;
        if (a[i] == b[i]) agree += 1;
    }
    const long double p_o = agree / static_cast<long double>(n);
    long double p_e = 0;
    for (const auto& [category, count] : rows) {
        auto it = cols.find(category);
        if (it != cols.end()) {
            p_e += (count / n) * (it->second / n);
        }
    }
    if (p_e >= 1.0L - 1e-15L) return 1.0L;
    return (p_o - p_e) / (1.0L - p_e);
}

inline long double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const size_t n = x.size();
    long double sx = 0, sy = 0;
    for (size_t i = 0; i < n; ++i) {
        sx += x[i];
        sy += y[i];
    }
    const long double mx = sx / n;
    const long double my = sy / n;
    long double sxx = 0, syy = 0, sxy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

struct TOracle {
    long double t;
    int df;
    long double p_two_tailed;
    long double cohens_d;
};

inline long double t_pdf(long double x, int df) {
    const long double v = df;
    const long double log_coef = std::lgamma((v + 1) / 2.0L) - std::lgamma(v / 2.0L) -
                                 0.5L * std::log(v * std::acos(-1.0L));
    return std::exp(log_coef - ((v + 1) / 2.0L) * std::log1p(x * x / v));
}

inline long double simpson(const std::function<long double(long double)>& f, long double a,
                           long double b, int steps) {
    const long double h = (b - a) / steps;
    long double sum = f(a) + f(b);
    for (int i = 1; i < steps; ++i) {
        sum += f(a + i * h) * ((i % 2) ? 4.0L : 2.0L);
    }
    return sum * h / 3.0L;
}

/// Two-tailed p by quadrature: p = 1 - 2 * integral of the pdf over
/// [0, |t|] (symmetry). 20k Simpson panels give ~1e-12 on this range.
inline long double t_two_tailed_p(long double t, int df) {
    const long double limit = std::fabs(t);
    if (limit == 0.0L) return 1.0L;
    const long double inner =
        simpson([df](long double x) { return t_pdf(x, df); }, 0.0L, limit, 20000);
    long double p = 1.0L - 2.0L * inner;
    if (p < 0) p = 0;
    return p;
}

inline TOracle paired_t(const std::vector<double>& clean, const std::vector<double>& noisy) {
    const size_t n = clean.size();
    long double mean = 0;
    for (size_t i = 0; i < n; ++i) mean += (long double)noisy[i] - clean[i];
    mean /= n;
    long double ss = 0;
    for (size_t i = 0; i < n; ++i) {
        const long double d = ((long double)noisy[i] - clean[i]) - mean;
        ss += d * d;
    }
    const long double sd = std::sqrt(ss / (n - 1));
    TOracle o;
    o.df = static_cast<int>(n) - 1;
    o.t = mean / (sd / std::sqrt((long double)n));
    o.cohens_d = mean / sd;
    o.p_two_tailed = t_two_tailed_p(o.t, o.df);
    return o;
}

} // namespace stat_oracle
