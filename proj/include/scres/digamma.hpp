#pragma once

#include <complex>

namespace scres {

/// Complex digamma function for Re(z) > 0: upward recurrence until
/// Re(z) > 10, then the asymptotic (Bernoulli) series.
std::complex<double> digamma(std::complex<double> z);

}  // namespace scres
