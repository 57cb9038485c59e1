#pragma once

namespace geoprof {

/// c with P(chi^2_df <= c) = prob.
double chisqQuantile(double prob, double df);

/// Upper-tail point: P(chi^2_df > c) = alpha.
double chisqUpperQuantile(double alpha, double df);

/// Standard normal quantile.
double normalQuantile(double prob);

}  // namespace geoprof
