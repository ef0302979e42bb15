#include "synthval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "synthval/error.hpp"

namespace synthval {

namespace {

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_fraction(double a, double b, double x) {
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-16;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::fabs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        d = 1.0 + aa * d;
        if (std::fabs(d) < tiny) d = tiny;
        c = 1.0 + aa / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < eps) break;
    }
    return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
    if (!(a > 0.0 && b > 0.0)) throw PreconditionError("incomplete beta needs positive shape parameters");
    if (!(x >= 0.0 && x <= 1.0)) throw PreconditionError("incomplete beta needs x in [0, 1]");
    if (x == 0.0 || x == 1.0) return x;
    const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(a, b, x) / a;
    return 1.0 - front * beta_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double df) {
    if (!(df > 0.0)) throw PreconditionError("t distribution needs positive degrees of freedom");
    if (std::isinf(t)) return t > 0 ? 1.0 : 0.0;
    const double tail = 0.5 * incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
    if (!(p > 0.0 && p < 1.0)) throw PreconditionError("quantile level must lie in (0, 1)");
    if (p == 0.5) return 0.0;
    double lo = -1.0;
    double hi = 1.0;
    while (student_t_cdf(lo, df) > p) lo *= 2.0;
    while (student_t_cdf(hi, df) < p) hi *= 2.0;
    for (int i = 0; i < 200 && hi - lo > 1e-14 * std::max(1.0, std::fabs(hi)); ++i) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, df) < p ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

Correlation pearson_corr(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw PreconditionError("correlation inputs differ in length");
    const std::size_t n = x.size();
    if (n < 3) throw PreconditionError("correlation needs at least three pairs");
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) throw DegenerateError("correlation is undefined for a constant input");
    Correlation out;
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    const double df = static_cast<double>(n - 2);
    if (std::fabs(out.r) == 1.0) {
        out.p_value = 0.0;
    } else {
        const double t = out.r * std::sqrt(df / (1.0 - out.r * out.r));
        out.p_value = incomplete_beta(df / 2.0, 0.5, df / (df + t * t));
    }
    return out;
}

double ci_width(std::span<const double> values, double confidence) {
    const std::size_t n = values.size();
    if (n < 2) throw PreconditionError("confidence interval needs at least two values");
    if (!(confidence > 0.0 && confidence < 1.0)) throw PreconditionError("confidence must lie in (0, 1)");
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    if (ss == 0.0) return 0.0;
    const double s = std::sqrt(ss / static_cast<double>(n - 1));
    const double t = student_t_quantile((1.0 + confidence) / 2.0, static_cast<double>(n - 1));
    return 2.0 * t * s / std::sqrt(static_cast<double>(n));
}

}  // namespace synthval
