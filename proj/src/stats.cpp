#include "latentseg/stats.hpp"

#include <cmath>
#include <limits>

#include "latentseg/errors.hpp"

namespace latentseg::stats {

namespace {

// Lentz's continued fraction for the incomplete beta, converges for x < (a+1)/(a+b+2).
double beta_cont_frac(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 3e-16;
    constexpr double fpmin = 1e-300;

    const double qab = a + b;
    const double qap = a + 1.0;
    const double qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::fabs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < eps) break;
    }
    return h;
}

} // namespace

double reg_inc_beta(double a, double b, double x) {
    if (a <= 0.0 || b <= 0.0) throw NumericError("reg_inc_beta: parameters must be positive");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) {
        return front * beta_cont_frac(a, b, x) / a;
    }
    return 1.0 - std::exp(std::lgamma(a + b) - std::lgamma(b) - std::lgamma(a) +
                          b * std::log1p(-x) + a * std::log(x)) *
                     beta_cont_frac(b, a, 1.0 - x) / b;
}

double beta_pdf(double a, double b, double x) {
    if (x < 0.0 || x > 1.0) return 0.0;
    if (x == 0.0) return a < 1.0 ? std::numeric_limits<double>::infinity() : (a == 1.0 ? b : 0.0);
    if (x == 1.0) return b < 1.0 ? std::numeric_limits<double>::infinity() : (b == 1.0 ? a : 0.0);
    const double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                      (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
    return std::exp(ln);
}

double students_t_two_sided(double t, double df) {
    if (df <= 0.0) throw NumericError("students_t_two_sided: df must be positive");
    if (!std::isfinite(t)) return 0.0;
    const double x = df / (df + t * t);
    return reg_inc_beta(0.5 * df, 0.5, x);
}

} // namespace latentseg::stats
