#pragma once

#include <vector>

namespace veripatient::eval {

/// Inter-rater agreement for one report dimension.
struct AgreementStats {
    double kappa = 0.0;
    double pearson = 0.0;
    int n = 0;
};

struct TestStats {
    double t = 0.0;
    int df = 0;
    double p_two_tailed = 1.0;
    double cohens_d = 0.0;
};

/// Cohen's kappa over two equal-length category vectors (n >= 2).
/// Degenerate marginals (expected agreement 1) return 1.0 under perfect
/// observed agreement and are an error otherwise.
double cohens_kappa(const std::vector<int>& ratings_a, const std::vector<int>& ratings_b);

/// Product-moment correlation; both inputs need nonzero variance.
double pearson_r(const std::vector<double>& x, const std::vector<double>& y);

/// Paired t-test on d = noisy - clean with sample standard deviation:
/// t = mean(d) / (sd(d)/sqrt(n)), df = n-1, two-tailed p from the t
/// distribution, Cohen's d = mean(d)/sd(d).
TestStats paired_t_test(const std::vector<double>& clean, const std::vector<double>& noisy);

} // namespace veripatient::eval
