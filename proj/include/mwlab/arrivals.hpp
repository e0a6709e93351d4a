#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "mwlab/rng.hpp"

namespace mwlab {

// Batch-arrival laws. All are supported on the nonnegative integers.
struct Bernoulli {
    double p = 0.0;
};
// Geometric on {0, 1, 2, ...} parameterised by its mean.
struct Geometric {
    double mean = 0.0;
};
struct Poisson {
    double rate = 0.0;
};
// 0 with probability 1 - p, otherwise K with P(K = k) = k^{-s} / zeta(s).
// For s in (2, 3) the mean is finite and the second moment infinite.
struct BernoulliZeta {
    double p = 0.0;
    double s = 2.5;
};
// Periodic pattern, cycled slot by slot. Useful for scripted traces.
struct Deterministic {
    std::vector<std::int64_t> pattern;
};

using ArrivalLaw = std::variant<Bernoulli, Geometric, Poisson, BernoulliZeta, Deterministic>;

enum class TailClass { heavy, exponential_type };

std::string_view to_string(TailClass c);

struct MomentReport {
    double mean = 0.0;
    double second_moment = 0.0;  // meaningful only when !second_moment_infinite
    bool second_moment_infinite = false;
    // Largest gamma with E[A^{1+gamma}] finite; nullopt means every moment is
    // finite (exponential-type laws).
    std::optional<double> gamma_max;
};

class ArrivalSpec {
public:
    // Validates the law and derives declared mean and tail class from it.
    explicit ArrivalSpec(ArrivalLaw law);

    const ArrivalLaw& law() const { return law_; }
    double declared_mean() const { return declared_mean_; }
    TailClass tail_class() const { return tail_class_; }
    std::string family() const;

    friend bool operator==(const ArrivalSpec& a, const ArrivalSpec& b);

private:
    ArrivalLaw law_;
    double declared_mean_ = 0.0;
    TailClass tail_class_ = TailClass::exponential_type;
};

MomentReport analytic_moments(const ArrivalSpec& spec);

enum class LawFamily { bernoulli, geometric, poisson, bernoulli_zeta };

std::optional<LawFamily> parse_family(std::string_view name);

// Builds a spec of the given family whose analytic mean equals target_mean.
// `shape` is the zeta exponent s for bernoulli_zeta and ignored otherwise.
ArrivalSpec calibrate_rate(double target_mean, LawFamily family, double shape = 2.5);

// Largest mean a BernoulliZeta(., s) law can reach: zeta(s-1)/zeta(s).
double zeta_max_mean(double s);

// Precomputed inverse-CDF table for the zeta law with exponent s. Entries up
// to kTableSize are exact; beyond that a continuous Pareto tail with the
// matching survival function is rounded to the nearest integer.
class ZetaTable {
public:
    static constexpr std::int64_t kTableSize = 1'000'000;
    // Samples above this are clamped. The induced bias on the mean is below
    // 1e-9 for s >= 2.5.
    static constexpr std::int64_t kMaxValue = std::int64_t{1} << 62;

    explicit ZetaTable(double s);

    // Shared immutable table for exponent s.
    static std::shared_ptr<const ZetaTable> get(double s);

    double s() const { return s_; }
    double zeta_s() const { return zeta_s_; }
    // P(K > k) for 0 <= k <= kTableSize.
    double survival(std::int64_t k) const { return survival_[static_cast<std::size_t>(k)]; }

    std::int64_t sample(Philox& rng) const;

private:
    double s_;
    double zeta_s_;
    std::vector<double> survival_;
};

// Stateful draw source: one spec plus its private substream. Deterministic
// laws keep their position here.
class ArrivalSource {
public:
    ArrivalSource(ArrivalSpec spec, Philox rng);

    std::int64_t next();
    const ArrivalSpec& spec() const { return spec_; }

private:
    ArrivalSpec spec_;
    Philox rng_;
    std::shared_ptr<const ZetaTable> zeta_;
    std::size_t position_ = 0;
};

// One draw from the law, using rng. Deterministic laws need a slot index to
// pick their pattern entry.
std::int64_t sample(const ArrivalSpec& spec, Philox& rng, std::uint64_t slot = 0);

}  // namespace mwlab
