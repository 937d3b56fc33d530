#pragma once

namespace latentseg::stats {

// Regularized incomplete beta I_x(a, b), continued-fraction evaluation.
double reg_inc_beta(double a, double b, double x);

// Beta(a, b) density at x.
double beta_pdf(double a, double b, double x);

// Two-sided tail probability of Student's t with df degrees of freedom.
double students_t_two_sided(double t, double df);

} // namespace latentseg::stats
