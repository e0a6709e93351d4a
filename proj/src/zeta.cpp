#include "mwlab/zeta.hpp"

#include <cmath>
#include <string>

#include "mwlab/errors.hpp"

namespace mwlab {

namespace {

// B_{2j} / (2j)! for j = 1..8.
constexpr double kBernoulliOverFactorial[] = {
    1.0 / 12.0,
    -1.0 / 720.0,
    1.0 / 30240.0,
    -1.0 / 1209600.0,
    1.0 / 47900160.0,
    -691.0 / 1307674368000.0,
    1.0 / 74724249600.0,
    -3617.0 / 10670622842880000.0,
};

constexpr int kHeadTerms = 24;

}  // namespace

double hurwitz_zeta(double s, double a) {
    if (!(s > 1.0) || !std::isfinite(s)) {
        throw ConfigError("zeta series diverges for s = " + std::to_string(s) + " (need s > 1)");
    }
    if (!(a > 0.0)) {
        throw ConfigError("hurwitz zeta needs a > 0");
    }
    // Head summed smallest-first for accuracy.
    double head = 0.0;
    for (int k = kHeadTerms - 1; k >= 0; --k) {
        head += std::pow(k + a, -s);
    }
    const double n = kHeadTerms + a;
    double tail = std::pow(n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(n, -s);
    // Rising factorial s (s+1) ... (s + 2j - 2) times n^{-s-2j+1}.
    double rising = s;
    double power = std::pow(n, -s - 1.0);
    const double inv_n2 = 1.0 / (n * n);
    for (int j = 0; j < 8; ++j) {
        tail += kBernoulliOverFactorial[j] * rising * power;
        rising *= (s + 2 * j + 1) * (s + 2 * j + 2);
        power *= inv_n2;
    }
    return head + tail;
}

}  // namespace mwlab
