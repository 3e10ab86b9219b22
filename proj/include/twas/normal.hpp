#pragma once

namespace twas::normal {

// Natural log of the upper tail Q(x) = P(N(0,1) > x). Stays accurate where
// Q(x) itself underflows (x well beyond 38).
double log_upper_tail(double x);

// Phi^{-1}(p) for p in (0, 1), Wichura's AS 241 (about 1e-16 relative).
double quantile(double p);

double cdf(double x);

} // namespace twas::normal
