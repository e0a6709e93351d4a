#include "mwlab/mg1.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <variant>

#include <boost/math/distributions/students_t.hpp>

#include "mwlab/errors.hpp"
#include "mwlab/io.hpp"
#include "mwlab/rng.hpp"
#include "mwlab/zeta.hpp"

namespace mwlab {

namespace {

constexpr std::int64_t kPoissonSupport = 1000;

// Law of the per-slot work Y = B * S. Tail probabilities and excess means are
// tabulated on [0, D] and evaluated in closed form beyond.
class WorkLaw {
public:
    WorkLaw(double p, const ArrivalSpec& service, std::int64_t D) : p_(p), law_(service.law()), D_(D) {
        if (const auto* z = std::get_if<BernoulliZeta>(&law_)) {
            zeta_ = ZetaTable::get(z->s);
        } else if (const auto* po = std::get_if<Poisson>(&law_)) {
            poisson_surv_.assign(kPoissonSupport + 1, 0.0);
            // Survival accumulated from the far end keeps relative precision.
            std::vector<double> pmf(kPoissonSupport + 1);
            double term = std::exp(-po->rate);
            for (std::int64_t k = 0; k <= kPoissonSupport; ++k) {
                pmf[static_cast<std::size_t>(k)] = term;
                term *= po->rate / static_cast<double>(k + 1);
            }
            double acc = 0.0;
            for (std::int64_t k = kPoissonSupport; k >= 0; --k) {
                poisson_surv_[static_cast<std::size_t>(k)] = acc;
                acc += pmf[static_cast<std::size_t>(k)];
            }
        }
        tail_.resize(static_cast<std::size_t>(D_) + 1);
        excess_.resize(static_cast<std::size_t>(D_) + 1);
        for (std::int64_t i = 0; i <= D_; ++i) tail_[static_cast<std::size_t>(i)] = p_ * service_survival(i);
        long double acc = p_ * service_excess(D_);
        excess_[static_cast<std::size_t>(D_)] = static_cast<double>(acc);
        for (std::int64_t d = D_ - 1; d >= 0; --d) {
            acc += tail_[static_cast<std::size_t>(d)];
            excess_[static_cast<std::size_t>(d)] = static_cast<double>(acc);
        }
    }

    // P(Y > i), i >= 0.
    double tail(std::int64_t i) const {
        return i <= D_ ? tail_[static_cast<std::size_t>(i)] : p_ * service_survival(i);
    }
    // E[(Y - d)^+], d >= 0.
    double excess(std::int64_t d) const {
        return d <= D_ ? excess_[static_cast<std::size_t>(d)] : p_ * service_excess(d);
    }
    double pmf(std::int64_t j) const { return j == 0 ? 1.0 - tail(0) : tail(j - 1) - tail(j); }

private:
    double service_survival(std::int64_t i) const {
        return std::visit(
            [&](const auto& l) -> double {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, Bernoulli>) {
                    return i == 0 ? l.p : 0.0;
                } else if constexpr (std::is_same_v<L, Geometric>) {
                    const double r = l.mean / (1.0 + l.mean);
                    return std::pow(r, static_cast<double>(i + 1));
                } else if constexpr (std::is_same_v<L, Poisson>) {
                    return i <= kPoissonSupport ? poisson_surv_[static_cast<std::size_t>(i)] : 0.0;
                } else if constexpr (std::is_same_v<L, BernoulliZeta>) {
                    if (i <= ZetaTable::kTableSize) return l.p * zeta_->survival(i);
                    return l.p * hurwitz_zeta(l.s, static_cast<double>(i + 1)) / zeta_->zeta_s();
                } else {
                    return l.pattern.front() > i ? 1.0 : 0.0;
                }
            },
            law_);
    }

    double service_excess(std::int64_t d) const {
        return std::visit(
            [&](const auto& l) -> double {
                using L = std::decay_t<decltype(l)>;
                if constexpr (std::is_same_v<L, Bernoulli>) {
                    return d == 0 ? l.p : 0.0;
                } else if constexpr (std::is_same_v<L, Geometric>) {
                    const double r = l.mean / (1.0 + l.mean);
                    return std::pow(r, static_cast<double>(d + 1)) / (1.0 - r);
                } else if constexpr (std::is_same_v<L, Poisson>) {
                    double s = 0.0;
                    for (std::int64_t i = std::max<std::int64_t>(d, 0); i <= kPoissonSupport; ++i) {
                        s += poisson_surv_[static_cast<std::size_t>(i)];
                    }
                    return s;
                } else if constexpr (std::is_same_v<L, BernoulliZeta>) {
                    const double x = static_cast<double>(d + 1);
                    return l.p * (hurwitz_zeta(l.s - 1.0, x) - static_cast<double>(d) * hurwitz_zeta(l.s, x)) /
                           zeta_->zeta_s();
                } else {
                    return static_cast<double>(std::max<std::int64_t>(l.pattern.front() - d, 0));
                }
            },
            law_);
    }

    double p_;
    ArrivalLaw law_;
    std::int64_t D_;
    std::shared_ptr<const ZetaTable> zeta_;
    std::vector<double> poisson_surv_;
    std::vector<double> tail_;
    std::vector<double> excess_;
};

struct ReplicationResult {
    std::vector<double> conditional;
    std::vector<double> direct;
};

ReplicationResult run_replication(double p, const ArrivalSpec& service, const std::vector<std::int64_t>& ladder,
                                  std::uint64_t seed, std::uint64_t rep, std::int64_t w0, const WorkLaw* law) {
    Philox coin = substream(seed, rep, StreamPurpose::mg1_arrivals);
    ArrivalSource work(service, substream(seed, rep, StreamPurpose::mg1_service));
    ReplicationResult out;
    out.conditional.reserve(ladder.size());
    out.direct.reserve(ladder.size());

    std::int64_t S = 0;  // sum of work so far
    std::int64_t M = 0;  // largest single-slot work so far
    std::int64_t ties = 0;
    std::int64_t w = w0;
    double F = 0.0;
    std::size_t j = 0;
    const std::int64_t last = ladder.back();
    for (std::int64_t k = 1; k <= last; ++k) {
        if (law) {
            const std::int64_t d = k - S;
            const std::int64_t x = std::max(M, d);
            double f = law->excess(x) + static_cast<double>(x - d) * law->tail(x);
            const std::int64_t e = S + M - k;
            if (e > 0) f += law->pmf(M) * static_cast<double>(e) / static_cast<double>(1 + ties);
            F += f;
        }
        const std::int64_t y = coin.uniform() < p ? work.next() : 0;
        S += y;
        if (y > M) {
            M = y;
            ties = 1;
        } else if (y == M) {
            ++ties;
        }
        w = std::max<std::int64_t>(w + y - 1, 0);
        if (k == ladder[j]) {
            out.conditional.push_back(F);
            out.direct.push_back(static_cast<double>(w));
            ++j;
        }
    }
    return out;
}

}  // namespace

std::vector<std::int64_t> workload_ladder(std::int64_t horizon) {
    if (horizon < 1) throw ConfigError("horizon must be at least 1");
    std::vector<std::int64_t> out;
    for (int j = 0;; ++j) {
        const auto t = static_cast<std::int64_t>(std::llround(std::pow(10.0, 3.0 + 0.5 * j)));
        if (t >= horizon) break;
        out.push_back(t);
    }
    out.push_back(horizon);
    return out;
}

std::vector<std::int64_t> lindley_path(std::int64_t w0, std::span<const std::int64_t> work) {
    std::vector<std::int64_t> w;
    w.reserve(work.size() + 1);
    w.push_back(w0);
    for (auto y : work) w.push_back(std::max<std::int64_t>(w.back() + y - 1, 0));
    return w;
}

WorkloadTrace simulate_workload(double p, const ArrivalSpec& service, std::int64_t horizon, std::size_t replications,
                                std::uint64_t seed, const WorkloadOptions& options) {
    if (!(p > 0.0 && p <= 1.0)) throw ConfigError("arrival probability must lie in (0, 1]");
    if (replications < 1) throw ConfigError("need at least one replication");
    if (options.initial_workload < 0) throw ConfigError("initial workload must be nonnegative");
    if (const auto* d = std::get_if<Deterministic>(&service.law())) {
        const auto& pat = d->pattern;
        if (std::any_of(pat.begin(), pat.end(), [&](auto v) { return v != pat.front(); })) {
            throw ConfigError("deterministic service must be a constant pattern");
        }
    }
    const double load = p * service.declared_mean();
    if (!(load < 1.0)) throw ConfigError("unstable workload: p * E[S] = " + format_double(load) + " >= 1");

    WorkloadTrace trace;
    trace.ladder = options.ladder.empty() ? workload_ladder(horizon) : options.ladder;
    for (std::size_t i = 0; i < trace.ladder.size(); ++i) {
        if (trace.ladder[i] < 1 || (i > 0 && trace.ladder[i] <= trace.ladder[i - 1])) {
            throw ConfigError("workload ladder must be positive and strictly increasing");
        }
    }
    trace.replications = replications;
    trace.p = p;
    trace.service_mean = service.declared_mean();
    trace.service_tail = service.tail_class();
    const bool conditional = options.initial_workload == 0;
    trace.estimator = conditional ? "conditional" : "direct";

    std::unique_ptr<WorkLaw> law;
    if (conditional) law = std::make_unique<WorkLaw>(p, service, trace.ladder.back() + 2);

    std::vector<ReplicationResult> results(replications);
    parallel_for(replications, options.threads, [&](std::size_t r) {
        results[r] = run_replication(p, service, trace.ladder, seed, r, options.initial_workload, law.get());
    });

    const std::size_t L = trace.ladder.size();
    const auto R = static_cast<double>(replications);
    auto summarize = [&](auto member, std::vector<double>& mean, std::vector<double>& se) {
        mean.assign(L, 0.0);
        se.assign(L, 0.0);
        for (std::size_t i = 0; i < L; ++i) {
            double s = 0.0, s2 = 0.0;
            for (const auto& res : results) {
                const double v = (res.*member)[i];
                s += v;
                s2 += v * v;
            }
            mean[i] = s / R;
            if (replications > 1) se[i] = std::sqrt(std::max(0.0, (s2 - R * mean[i] * mean[i]) / (R - 1)) / R);
        }
    };
    summarize(&ReplicationResult::direct, trace.direct_mean, trace.direct_stderr);
    if (conditional) {
        summarize(&ReplicationResult::conditional, trace.mean_W, trace.stderr_W);
    } else {
        trace.mean_W = trace.direct_mean;
        trace.stderr_W = trace.direct_stderr;
    }
    return trace;
}

ScalingReport fit_scaling(const WorkloadTrace& trace, double gamma) {
    const std::size_t L = trace.ladder.size();
    if (L < 5 || trace.mean_W.size() != L) {
        throw ConfigError("scaling fit needs at least 5 ladder points, got " + std::to_string(L));
    }
    if (!(gamma > 0.0)) throw ConfigError("gamma must be positive");
    ScalingReport rep;
    rep.gamma = gamma;
    rep.bound = 1.0 / (1.0 + gamma);
    rep.heavy_service = trace.service_tail == TailClass::heavy;

    const std::size_t h = (L + 1) / 2;
    rep.points = h;
    std::vector<double> xs, ys;
    for (std::size_t i = L - h; i < L; ++i) {
        if (!(trace.mean_W[i] > 0.0)) {
            rep.saturated = true;
            if (rep.heavy_service) rep.pass = false;
            return rep;
        }
        xs.push_back(std::log(static_cast<double>(trace.ladder[i])));
        ys.push_back(std::log(trace.mean_W[i]));
    }
    const auto n = static_cast<double>(h);
    double xbar = 0, ybar = 0;
    for (std::size_t i = 0; i < h; ++i) {
        xbar += xs[i] / n;
        ybar += ys[i] / n;
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < h; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
        syy += (ys[i] - ybar) * (ys[i] - ybar);
    }
    const double beta = sxy / sxx;
    rep.r_squared = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    if (h > 2) {
        double sse = 0;
        for (std::size_t i = 0; i < h; ++i) {
            const double r = ys[i] - ybar - beta * (xs[i] - xbar);
            sse += r * r;
        }
        const double se = std::sqrt(sse / (n - 2) / sxx);
        const boost::math::students_t dist(n - 2);
        const double q = boost::math::quantile(dist, 0.975);
        rep.beta_ci_lo = beta - q * se;
        rep.beta_ci_hi = beta + q * se;
    } else {
        rep.beta_ci_lo = rep.beta_ci_hi = beta;
    }
    rep.saturated = beta < 0.05;
    if (!rep.saturated) rep.beta = beta;
    if (rep.heavy_service) rep.pass = !rep.saturated && beta > 0.05 && beta <= rep.bound + 0.1;
    return rep;
}

void write_workload_csv(std::ostream& out, const WorkloadTrace& trace) {
    CsvWriter csv(out);
    csv.header({"t", "mean_W", "stderr", "replications"});
    for (std::size_t i = 0; i < trace.ladder.size(); ++i) {
        csv.field(trace.ladder[i]).field(trace.mean_W[i]).field(trace.stderr_W[i]).field(trace.replications);
        csv.end_row();
    }
}

}  // namespace mwlab
