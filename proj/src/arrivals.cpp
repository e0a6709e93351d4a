#include "mwlab/arrivals.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numeric>

#include "mwlab/errors.hpp"
#include "mwlab/zeta.hpp"

namespace mwlab {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kMaxPoissonRate = 50.0;

void validate(const ArrivalLaw& law) {
    std::visit(overloaded{
                   [](const Bernoulli& l) {
                       if (!(l.p >= 0.0 && l.p <= 1.0)) throw ConfigError("bernoulli p must lie in [0, 1]");
                   },
                   [](const Geometric& l) {
                       if (!(l.mean >= 0.0) || !std::isfinite(l.mean)) throw ConfigError("geometric mean must be finite and >= 0");
                   },
                   [](const Poisson& l) {
                       if (!(l.rate >= 0.0 && l.rate <= kMaxPoissonRate)) {
                           throw ConfigError("poisson rate must lie in [0, 50]");
                       }
                   },
                   [](const BernoulliZeta& l) {
                       if (!(l.p >= 0.0 && l.p <= 1.0)) throw ConfigError("bernoulli_zeta p must lie in [0, 1]");
                       if (!(l.s > 2.0 && l.s < 3.0)) {
                           throw ConfigError("bernoulli_zeta needs s in (2, 3) for finite mean and infinite variance");
                       }
                   },
                   [](const Deterministic& l) {
                       if (l.pattern.empty()) throw ConfigError("deterministic pattern must be nonempty");
                       for (auto v : l.pattern) {
                           if (v < 0) throw ConfigError("deterministic pattern entries must be >= 0");
                       }
                   },
               },
               law);
}

double pattern_moment(const std::vector<std::int64_t>& pattern, int order) {
    double acc = 0.0;
    for (auto v : pattern) acc += std::pow(static_cast<double>(v), order);
    return acc / static_cast<double>(pattern.size());
}

}  // namespace

std::string_view to_string(TailClass c) {
    return c == TailClass::heavy ? "heavy" : "exponential_type";
}

double zeta_max_mean(double s) { return riemann_zeta(s - 1.0) / riemann_zeta(s); }

ArrivalSpec::ArrivalSpec(ArrivalLaw law) : law_(std::move(law)) {
    validate(law_);
    tail_class_ = std::holds_alternative<BernoulliZeta>(law_) ? TailClass::heavy : TailClass::exponential_type;
    declared_mean_ = analytic_moments(*this).mean;
}

std::string ArrivalSpec::family() const {
    return std::visit(overloaded{
                          [](const Bernoulli&) { return std::string("bernoulli"); },
                          [](const Geometric&) { return std::string("geometric"); },
                          [](const Poisson&) { return std::string("poisson"); },
                          [](const BernoulliZeta&) { return std::string("bernoulli_zeta"); },
                          [](const Deterministic&) { return std::string("deterministic"); },
                      },
                      law_);
}

bool operator==(const ArrivalSpec& a, const ArrivalSpec& b) {
    if (a.law_.index() != b.law_.index()) return false;
    return std::visit(overloaded{
                          [&](const Bernoulli& l) { return l.p == std::get<Bernoulli>(b.law_).p; },
                          [&](const Geometric& l) { return l.mean == std::get<Geometric>(b.law_).mean; },
                          [&](const Poisson& l) { return l.rate == std::get<Poisson>(b.law_).rate; },
                          [&](const BernoulliZeta& l) {
                              const auto& r = std::get<BernoulliZeta>(b.law_);
                              return l.p == r.p && l.s == r.s;
                          },
                          [&](const Deterministic& l) { return l.pattern == std::get<Deterministic>(b.law_).pattern; },
                      },
                      a.law_);
}

MomentReport analytic_moments(const ArrivalSpec& spec) {
    return std::visit(overloaded{
                          [](const Bernoulli& l) { return MomentReport{l.p, l.p, false, std::nullopt}; },
                          [](const Geometric& l) {
                              return MomentReport{l.mean, l.mean + 2.0 * l.mean * l.mean, false, std::nullopt};
                          },
                          [](const Poisson& l) {
                              return MomentReport{l.rate, l.rate + l.rate * l.rate, false, std::nullopt};
                          },
                          [](const BernoulliZeta& l) {
                              const double mean = l.p * riemann_zeta(l.s - 1.0) / riemann_zeta(l.s);
                              // sum k^2 k^{-s} diverges for s <= 3.
                              return MomentReport{mean, 0.0, true, l.s - 2.0};
                          },
                          [](const Deterministic& l) {
                              return MomentReport{pattern_moment(l.pattern, 1), pattern_moment(l.pattern, 2), false,
                                                  std::nullopt};
                          },
                      },
                      spec.law());
}

std::optional<LawFamily> parse_family(std::string_view name) {
    if (name == "bernoulli") return LawFamily::bernoulli;
    if (name == "geometric") return LawFamily::geometric;
    if (name == "poisson") return LawFamily::poisson;
    if (name == "bernoulli_zeta") return LawFamily::bernoulli_zeta;
    return std::nullopt;
}

ArrivalSpec calibrate_rate(double target_mean, LawFamily family, double shape) {
    if (!(target_mean >= 0.0) || !std::isfinite(target_mean)) {
        throw ConfigError("target mean must be finite and >= 0");
    }
    switch (family) {
        case LawFamily::bernoulli:
            if (target_mean > 1.0) throw ConfigError("bernoulli cannot reach a mean above 1");
            return ArrivalSpec(Bernoulli{target_mean});
        case LawFamily::geometric:
            return ArrivalSpec(Geometric{target_mean});
        case LawFamily::poisson:
            return ArrivalSpec(Poisson{target_mean});
        case LawFamily::bernoulli_zeta: {
            if (!(shape > 2.0 && shape < 3.0)) throw ConfigError("bernoulli_zeta needs s in (2, 3)");
            const double max_mean = zeta_max_mean(shape);
            if (target_mean > max_mean) {
                throw ConfigError("bernoulli_zeta with s = " + std::to_string(shape) + " cannot reach mean " +
                                  std::to_string(target_mean) + " (max " + std::to_string(max_mean) + ")");
            }
            return ArrivalSpec(BernoulliZeta{target_mean / max_mean, shape});
        }
    }
    throw ConfigError("unknown law family");
}

ZetaTable::ZetaTable(double s) : s_(s), zeta_s_(riemann_zeta(s)), survival_(kTableSize + 1) {
    // Backward accumulation keeps full relative precision deep in the tail.
    double tail = hurwitz_zeta(s, static_cast<double>(kTableSize + 1));
    survival_[kTableSize] = tail / zeta_s_;
    for (std::int64_t k = kTableSize; k >= 1; --k) {
        tail += std::pow(static_cast<double>(k), -s);
        survival_[static_cast<std::size_t>(k - 1)] = tail / zeta_s_;
    }
    survival_[0] = 1.0;
}

std::shared_ptr<const ZetaTable> ZetaTable::get(double s) {
    static std::mutex mutex;
    static std::map<double, std::shared_ptr<const ZetaTable>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[s];
    if (!slot) slot = std::make_shared<const ZetaTable>(s);
    return slot;
}

std::int64_t ZetaTable::sample(Philox& rng) const {
    const double u = rng.uniform_pos();
    // Smallest k >= 1 with P(K > k) < u.
    if (u > survival_[kTableSize]) {
        constexpr std::int64_t kLinear = 16;
        for (std::int64_t k = 1; k <= kLinear; ++k) {
            if (survival_[static_cast<std::size_t>(k)] < u) return k;
        }
        auto first = survival_.begin() + kLinear + 1;
        auto it = std::partition_point(first, survival_.end(), [u](double v) { return v >= u; });
        return static_cast<std::int64_t>(it - survival_.begin());
    }
    const double scale = static_cast<double>(kTableSize) + 0.5;
    const double y = scale * std::pow(rng.uniform_pos(), -1.0 / (s_ - 1.0));
    if (!(y < static_cast<double>(kMaxValue))) return kMaxValue;
    return std::max<std::int64_t>(static_cast<std::int64_t>(std::floor(y + 0.5)), kTableSize + 1);
}

std::int64_t sample(const ArrivalSpec& spec, Philox& rng, std::uint64_t slot) {
    return std::visit(overloaded{
                          [&](const Bernoulli& l) -> std::int64_t { return rng.uniform() < l.p ? 1 : 0; },
                          [&](const Geometric& l) -> std::int64_t {
                              if (l.mean <= 0.0) return 0;
                              const double q = l.mean / (1.0 + l.mean);
                              return static_cast<std::int64_t>(std::floor(std::log(rng.uniform_pos()) / std::log(q)));
                          },
                          [&](const Poisson& l) -> std::int64_t {
                              const double u = rng.uniform();
                              double term = std::exp(-l.rate);
                              double cdf = term;
                              std::int64_t k = 0;
                              while (u >= cdf && k < 1000) {
                                  ++k;
                                  term *= l.rate / static_cast<double>(k);
                                  cdf += term;
                              }
                              return k;
                          },
                          [&](const BernoulliZeta& l) -> std::int64_t {
                              if (!(rng.uniform() < l.p)) return 0;
                              return ZetaTable::get(l.s)->sample(rng);
                          },
                          [&](const Deterministic& l) -> std::int64_t {
                              return l.pattern[static_cast<std::size_t>(slot % l.pattern.size())];
                          },
                      },
                      spec.law());
}

ArrivalSource::ArrivalSource(ArrivalSpec spec, Philox rng) : spec_(std::move(spec)), rng_(rng) {
    if (const auto* z = std::get_if<BernoulliZeta>(&spec_.law())) zeta_ = ZetaTable::get(z->s);
}

std::int64_t ArrivalSource::next() {
    const auto& law = spec_.law();
    if (const auto* b = std::get_if<Bernoulli>(&law)) return rng_.uniform() < b->p ? 1 : 0;
    if (const auto* z = std::get_if<BernoulliZeta>(&law)) {
        if (!(rng_.uniform() < z->p)) return 0;
        return zeta_->sample(rng_);
    }
    return sample(spec_, rng_, position_++);
}

}  // namespace mwlab
