#include <doctest.h>

#include <cmath>

#include "latentseg/stats.hpp"

using namespace latentseg;

TEST_SUITE_BEGIN("stats");

// Reference values computed independently with a scientific-python stack.
TEST_CASE("regularized incomplete beta") {
    CHECK(stats::reg_inc_beta(2.0, 2.0, 0.3) == doctest::Approx(0.216).epsilon(1e-12));
    CHECK(stats::reg_inc_beta(2.0, 2.0, 0.5) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(stats::reg_inc_beta(2.0, 2.0, 0.7) == doctest::Approx(0.784).epsilon(1e-12));
    CHECK(stats::reg_inc_beta(0.5, 0.5, 0.25) == doctest::Approx(0.333333333333333).epsilon(1e-10));
    CHECK(stats::reg_inc_beta(5.0, 1.5, 0.9) == doctest::Approx(0.776172134316216).epsilon(1e-10));
    CHECK(stats::reg_inc_beta(1.0, 3.0, 0.05) == doctest::Approx(0.142625).epsilon(1e-12));
    CHECK(stats::reg_inc_beta(10.0, 2.0, 0.6) == doctest::Approx(0.030233088).epsilon(1e-10));
    CHECK(stats::reg_inc_beta(2.0, 2.0, 0.0) == 0.0);
    CHECK(stats::reg_inc_beta(2.0, 2.0, 1.0) == 1.0);
}

TEST_CASE("beta pdf integrates and normalizes") {
    // Beta(2,2): 6x(1-x)
    CHECK(stats::beta_pdf(2.0, 2.0, 0.5) == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(stats::beta_pdf(2.0, 2.0, 0.25) == doctest::Approx(6.0 * 0.25 * 0.75).epsilon(1e-12));
    // pdf is the derivative of the regularized incomplete beta
    const double h = 1e-6;
    const double fd =
        (stats::reg_inc_beta(3.0, 1.5, 0.4 + h) - stats::reg_inc_beta(3.0, 1.5, 0.4 - h)) /
        (2.0 * h);
    CHECK(stats::beta_pdf(3.0, 1.5, 0.4) == doctest::Approx(fd).epsilon(1e-6));
}

TEST_CASE("student t two-sided tail") {
    CHECK(stats::students_t_two_sided(2.5, 9.0) == doctest::Approx(0.03386182768298571).epsilon(1e-10));
    CHECK(stats::students_t_two_sided(1.0, 4.5) == doctest::Approx(0.36800508388018843).epsilon(1e-10));
    CHECK(stats::students_t_two_sided(3.2, 17.3) == doctest::Approx(0.005157724128227014).epsilon(1e-10));
    CHECK(stats::students_t_two_sided(0.0, 5.0) == doctest::Approx(1.0));
    CHECK(stats::students_t_two_sided(-2.5, 9.0) ==
          doctest::Approx(stats::students_t_two_sided(2.5, 9.0)));
}

TEST_SUITE_END();
