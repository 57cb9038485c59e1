#include "geoprof/distributions.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include <stdexcept>

namespace geoprof {

double chisqQuantile(double prob, double df) {
  if (!(prob > 0.0 && prob < 1.0) || !(df > 0.0))
    throw std::domain_error("chi-square quantile needs prob in (0,1) and df > 0");
  return boost::math::quantile(boost::math::chi_squared_distribution<double>(df), prob);
}

double chisqUpperQuantile(double alpha, double df) {
  if (!(alpha > 0.0 && alpha < 1.0) || !(df > 0.0))
    throw std::domain_error("chi-square quantile needs alpha in (0,1) and df > 0");
  return boost::math::quantile(
      boost::math::complement(boost::math::chi_squared_distribution<double>(df), alpha));
}

double normalQuantile(double prob) {
  if (!(prob > 0.0 && prob < 1.0)) throw std::domain_error("normal quantile needs prob in (0,1)");
  return boost::math::quantile(boost::math::normal_distribution<double>(), prob);
}

}  // namespace geoprof
