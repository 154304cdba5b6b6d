#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "mfc/error.hpp"

namespace mfc {

struct MeanStderr {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanStderr mean_stderr(const std::vector<double>& xs) {
    if (xs.empty()) return {};
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    if (xs.size() == 1) return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    double var = ss / static_cast<double>(xs.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(xs.size()))};
}

// Regularized lower incomplete gamma P(a, x), series + continued fraction.
inline double gamma_p(double a, double x) {
    if (a <= 0.0 || x < 0.0) throw Error::internal("gamma_p: bad arguments");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double ap = a, sum = 1.0 / a, del = sum;
        for (int n = 0; n < 500; ++n) {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // Lentz continued fraction for Q(a,x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-15) break;
    }
    double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_pvalue(double statistic, int dof) {
    if (dof <= 0) throw Error::internal("chi_square_pvalue: dof must be positive");
    if (statistic <= 0.0) return 1.0;
    return 1.0 - gamma_p(0.5 * dof, 0.5 * statistic);
}

} // namespace mfc
