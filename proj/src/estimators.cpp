#include "mwlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mwlab/errors.hpp"
#include "mwlab/rng.hpp"

namespace mwlab {

std::int64_t lyapunov_v(std::span<const std::int64_t> q) {
    if (q.size() != 3) throw ConfigError("Lyapunov function needs a 3-queue state, got " + std::to_string(q.size()));
    return 3 * q[1] + std::max<std::int64_t>(q[2] - q[0] - q[1], 0);
}

double lyapunov_V(const QueueState& state) { return static_cast<double>(lyapunov_v(state.lengths)); }

std::vector<std::int64_t> geometric_ladder(std::int64_t first, std::int64_t ratio, std::size_t count) {
    if (first < 1 || ratio < 2) throw ConfigError("ladder needs first >= 1 and ratio >= 2");
    std::vector<std::int64_t> out;
    out.reserve(count);
    std::int64_t m = first;
    for (std::size_t i = 0; i < count; ++i) {
        out.push_back(m);
        m *= ratio;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Truncated mean

TruncatedMeanAccumulator::TruncatedMeanAccumulator(std::vector<std::int64_t> ladder)
    : ladder_(std::move(ladder)), levels_(ladder_.size()) {
    if (ladder_.empty()) throw ConfigError("truncation ladder is empty");
    for (std::size_t i = 0; i < levels_; ++i) {
        if (ladder_[i] < 1) throw ConfigError("truncation levels must be positive");
        if (i > 0 && ladder_[i] <= ladder_[i - 1]) throw ConfigError("truncation ladder must be strictly increasing");
    }
    pending_.assign(levels_ + 1, 0);
    open_.assign(levels_ + 1, 0);
    total_sums_.assign(levels_, 0);
}

void TruncatedMeanAccumulator::renewal() {
    if (in_cycle_ && open_[0] > 0) close_cycle();
    in_cycle_ = true;
    std::fill(open_.begin(), open_.end(), 0);
}

void TruncatedMeanAccumulator::observe(std::int64_t value) {
    ++total_count_;
    for (std::size_t l = 0; l < levels_; ++l) total_sums_[l] += std::min(value, ladder_[l]);
    if (!in_cycle_) return;
    ++open_[0];
    for (std::size_t l = 0; l < levels_; ++l) open_[l + 1] += std::min(value, ladder_[l]);
}

void TruncatedMeanAccumulator::close_cycle() {
    for (std::size_t j = 0; j <= levels_; ++j) pending_[j] += open_[j];
    ++cycles_;
    if (++pending_cycles_ == cycles_per_unit_) push_unit();
}

void TruncatedMeanAccumulator::push_unit() {
    units_.insert(units_.end(), pending_.begin(), pending_.end());
    std::fill(pending_.begin(), pending_.end(), 0);
    pending_cycles_ = 0;
    if (units_.size() / (levels_ + 1) >= 2 * kMaxUnits) compact();
}

void TruncatedMeanAccumulator::compact() {
    const std::size_t w = levels_ + 1;
    const std::size_t n = units_.size() / w;
    std::vector<std::int64_t> merged;
    merged.reserve((n + 1) / 2 * w);
    for (std::size_t u = 0; u < n; u += 2) {
        for (std::size_t j = 0; j < w; ++j) {
            std::int64_t v = units_[u * w + j];
            if (u + 1 < n) v += units_[(u + 1) * w + j];
            merged.push_back(v);
        }
    }
    units_ = std::move(merged);
    cycles_per_unit_ *= 2;
}

void TruncatedMeanAccumulator::merge(const TruncatedMeanAccumulator& other) {
    if (other.ladder_ != ladder_) throw ConfigError("cannot merge accumulators with different ladders");
    const std::size_t w = levels_ + 1;
    units_.insert(units_.end(), other.units_.begin(), other.units_.end());
    // A partially filled batch still holds whole cycles, so it is a valid unit.
    if (other.pending_cycles_ > 0) units_.insert(units_.end(), other.pending_.begin(), other.pending_.end());
    cycles_ += other.cycles_;
    total_count_ += other.total_count_;
    for (std::size_t l = 0; l < levels_; ++l) total_sums_[l] += other.total_sums_[l];
    while (units_.size() / w >= 2 * kMaxUnits) compact();
}

TruncatedMeanCurve TruncatedMeanAccumulator::curve(std::uint64_t bootstrap_seed, std::size_t resamples) const {
    TruncatedMeanCurve c;
    c.ladder = ladder_;
    c.cycles = cycles_;
    c.observations = total_count_;
    c.estimates.assign(levels_, 0.0);
    c.stderrs.assign(levels_, 0.0);
    c.time_average.assign(levels_, 0.0);
    if (total_count_ > 0) {
        for (std::size_t l = 0; l < levels_; ++l) {
            c.time_average[l] = static_cast<double>(total_sums_[l]) / static_cast<double>(total_count_);
        }
    }

    std::vector<std::int64_t> units = units_;
    if (pending_cycles_ > 0) units.insert(units.end(), pending_.begin(), pending_.end());
    const std::size_t w = levels_ + 1;
    const std::size_t n = units.size() / w;
    if (cycles_ == 0 || n == 0) {
        c.estimates.assign(levels_, std::numeric_limits<double>::quiet_NaN());
        c.stderrs.assign(levels_, std::numeric_limits<double>::quiet_NaN());
        c.inconclusive = true;
        c.note = "no complete renewal cycle observed";
        return c;
    }
    if (cycles_ < kMinCycles) {
        c.inconclusive = true;
        c.note = "fewer than " + std::to_string(kMinCycles) + " renewal cycles";
    }

    std::vector<std::int64_t> totals(w, 0);
    for (std::size_t u = 0; u < n; ++u) {
        for (std::size_t j = 0; j < w; ++j) totals[j] += units[u * w + j];
    }
    for (std::size_t l = 0; l < levels_; ++l) {
        c.estimates[l] = static_cast<double>(totals[l + 1]) / static_cast<double>(totals[0]);
    }

    if (n < 2 || resamples < 2) return c;
    Philox rng(bootstrap_seed, stream_id(0, StreamPurpose::bootstrap));
    std::vector<double> sum(levels_, 0.0), sumsq(levels_, 0.0);
    std::vector<std::int64_t> acc(w);
    for (std::size_t b = 0; b < resamples; ++b) {
        std::fill(acc.begin(), acc.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t u = rng.below(n);
            for (std::size_t j = 0; j < w; ++j) acc[j] += units[u * w + j];
        }
        if (acc[0] == 0) continue;
        for (std::size_t l = 0; l < levels_; ++l) {
            const double r = static_cast<double>(acc[l + 1]) / static_cast<double>(acc[0]);
            sum[l] += r;
            sumsq[l] += r * r;
        }
    }
    const double B = static_cast<double>(resamples);
    for (std::size_t l = 0; l < levels_; ++l) {
        const double mean = sum[l] / B;
        c.stderrs[l] = std::sqrt(std::max(0.0, (sumsq[l] / B - mean * mean) * B / (B - 1)));
    }
    return c;
}

TruncatedMeanCurve truncated_mean(std::span<const StepRecord> trace, std::size_t queue,
                                  std::span<const std::int64_t> ladder) {
    TruncatedMeanAccumulator acc(std::vector<std::int64_t>(ladder.begin(), ladder.end()));
    for (const auto& r : trace) {
        if (queue >= r.pre_lengths.size()) throw ConfigError("queue index out of range");
        if (std::all_of(r.pre_lengths.begin(), r.pre_lengths.end(), [](auto q) { return q == 0; })) acc.renewal();
        acc.observe(r.pre_lengths[queue]);
    }
    return acc.curve();
}

// ---------------------------------------------------------------------------
// Divergence classification

std::string_view to_string(Divergence d) {
    switch (d) {
        case Divergence::finite: return "finite";
        case Divergence::diverging: return "diverging";
        case Divergence::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

DivergenceReport classify_divergence(const TruncatedMeanCurve& curve) {
    DivergenceReport rep;
    const std::size_t L = curve.estimates.size();
    if (L < 4 || curve.ladder.size() != L || curve.inconclusive) return rep;
    const auto& e = curve.estimates;

    rep.last_step_increase = e[L - 2] > 0 ? e[L - 1] / e[L - 2] - 1.0 : (e[L - 1] > 0 ? INFINITY : 0.0);
    if (e[L - 1] == 0.0) {
        // Never positive at the largest level: the variable is identically zero.
        rep.verdict = Divergence::finite;
        return rep;
    }

    const std::size_t h = (L + 1) / 2;
    std::vector<double> xs, ys, rel;
    for (std::size_t i = L - h; i < L; ++i) {
        if (e[i] <= 0.0) continue;
        xs.push_back(std::log(static_cast<double>(curve.ladder[i])));
        ys.push_back(std::log(e[i]));
        const double se = i < curve.stderrs.size() ? curve.stderrs[i] : 0.0;
        rel.push_back(se / e[i]);
    }
    const std::size_t n = xs.size();
    if (n < 2) return rep;
    const double xbar = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(n);
    const double ybar = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - xbar) * (xs[i] - xbar);
        sxy += (xs[i] - xbar) * (ys[i] - ybar);
    }
    rep.slope = sxy / sxx;
    double var = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double wi = (xs[i] - xbar) / sxx;
        var += wi * wi * rel[i] * rel[i];
    }
    const double half = 1.959963984540054 * std::sqrt(var);
    rep.slope_ci_lo = rep.slope - half;
    rep.slope_ci_hi = rep.slope + half;
    rep.first_to_last_ratio = e[L - h] > 0 ? e[L - 1] / e[L - h] : INFINITY;

    if (rep.last_step_increase < 0.05 && rep.slope_ci_lo < 0.05) {
        rep.verdict = Divergence::finite;
    } else if (rep.slope > 0.2 && rep.slope_ci_lo > 0.0) {
        rep.verdict = Divergence::diverging;
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Drift probe

namespace {

constexpr std::uint8_t kQualifies = 1;
constexpr std::uint8_t kCase1 = 2;
constexpr std::uint8_t kCase2 = 4;

}  // namespace

DriftProbe::DriftProbe(std::int64_t T) : T_(T), alpha_(6 * T) {
    if (T < 1) throw ConfigError("drift probe needs T >= 1");
    ring_.resize(static_cast<std::size_t>(T));
}

void DriftProbe::observe(std::span<const std::int64_t> q) {
    if (merged_) throw SequenceError("drift probe cannot observe after a merge");
    const std::int64_t v = lyapunov_v(q);
    const std::size_t pos = static_cast<std::size_t>(slot_ % T_);
    if (slot_ >= T_) {
        const std::int64_t block = (slot_ - T_) / (10 * T_);
        // Empty blocks are kept so that resampling sees the true block count.
        while (current_block_ < block) {
            blocks_.emplace_back();
            ++current_block_;
        }
        const Pending& old = ring_[pos];
        if (old.cases & kQualifies) {
            Block& b = blocks_.back();
            const double d = static_cast<double>(v - old.v);
            for (int c = 0; c < 3; ++c) {
                if (old.cases & (1u << c)) {
                    b.sum[c] += d;
                    ++b.count[c];
                }
            }
        }
    }
    std::uint8_t cases = 0;
    if (v > alpha_) {
        cases |= kQualifies;
        if (q[1] > T_) cases |= kCase1;
        if (q[2] > q[0] + q[1] + 3 * T_) cases |= kCase2;
    }
    ring_[pos] = Pending{v, cases};
    ++slot_;
}

void DriftProbe::merge(const DriftProbe& other) {
    if (other.T_ != T_) throw ConfigError("cannot merge drift probes with different T");
    blocks_.insert(blocks_.end(), other.blocks_.begin(), other.blocks_.end());
    merged_ = true;
}

DriftProbeReport DriftProbe::report(std::uint64_t bootstrap_seed, std::size_t resamples) const {
    DriftProbeReport rep;
    rep.T = T_;
    rep.alpha = alpha_;
    const std::size_t nb = blocks_.size();
    DriftStats* out[3] = {&rep.all, &rep.case_queue2, &rep.case_queue3};
    double sum[3] = {0, 0, 0};
    std::int64_t count[3] = {0, 0, 0};
    for (const auto& b : blocks_) {
        for (int c = 0; c < 3; ++c) {
            sum[c] += b.sum[c];
            count[c] += b.count[c];
        }
    }
    for (int c = 0; c < 3; ++c) {
        out[c]->samples = count[c];
        if (count[c] > 0) out[c]->mean = sum[c] / static_cast<double>(count[c]);
    }
    rep.inconclusive = count[0] == 0;
    if (rep.inconclusive || nb < 2) return rep;

    Philox rng(bootstrap_seed, stream_id(0, StreamPurpose::bootstrap, 1));
    std::vector<double> draws[3];
    for (std::size_t r = 0; r < resamples; ++r) {
        double s[3] = {0, 0, 0};
        std::int64_t k[3] = {0, 0, 0};
        for (std::size_t i = 0; i < nb; ++i) {
            const Block& b = blocks_[rng.below(nb)];
            for (int c = 0; c < 3; ++c) {
                s[c] += b.sum[c];
                k[c] += b.count[c];
            }
        }
        for (int c = 0; c < 3; ++c) {
            if (k[c] > 0) draws[c].push_back(s[c] / static_cast<double>(k[c]));
        }
    }
    for (int c = 0; c < 3; ++c) {
        auto& d = draws[c];
        if (count[c] == 0 || d.size() < 2) continue;
        std::sort(d.begin(), d.end());
        const auto at = [&](double q) {
            const double pos = q * static_cast<double>(d.size() - 1);
            const auto lo = static_cast<std::size_t>(pos);
            const auto hi = std::min(lo + 1, d.size() - 1);
            return d[lo] + (pos - static_cast<double>(lo)) * (d[hi] - d[lo]);
        };
        out[c]->ci_lo = at(0.025);
        out[c]->ci_hi = at(0.975);
    }
    return rep;
}

DriftProbeReport drift_probe(std::span<const StepRecord> trace, std::int64_t T) {
    DriftProbe probe(T);
    for (const auto& r : trace) probe.observe(r.pre_lengths);
    return probe.report();
}

// ---------------------------------------------------------------------------
// Tail shape

std::string_view to_string(TailShape t) {
    switch (t) {
        case TailShape::geometric_like: return "geometric_like";
        case TailShape::power_like: return "power_like";
        case TailShape::inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

Histogram histogram_of(std::span<const std::int64_t> values) {
    Histogram h;
    for (auto v : values) ++h[v];
    return h;
}

void HistogramAccumulator::merge(const HistogramAccumulator& other) {
    if (other.dense_.size() > dense_.size()) dense_.resize(other.dense_.size(), 0);
    for (std::size_t i = 0; i < other.dense_.size(); ++i) dense_[i] += other.dense_[i];
    for (const auto& [v, c] : other.sparse_) sparse_[v] += c;
}

Histogram HistogramAccumulator::histogram() const {
    Histogram h = sparse_;
    for (std::size_t i = 0; i < dense_.size(); ++i) {
        if (dense_[i] > 0) h[static_cast<std::int64_t>(i)] += dense_[i];
    }
    return h;
}

double hill_tail_index(const Histogram& hist, double top_fraction) {
    std::int64_t n = 0;
    for (const auto& [v, c] : hist) n += c;
    if (n == 0) return 0.0;
    const auto k = std::max<std::int64_t>(1, static_cast<std::int64_t>(top_fraction * static_cast<double>(n)));
    std::int64_t seen = 0;
    std::int64_t u = 0;
    for (auto it = hist.rbegin(); it != hist.rend(); ++it) {
        seen += it->second;
        u = it->first;
        if (seen >= k) break;
    }
    if (u < 1) return 0.0;
    const double base = static_cast<double>(u) - 0.5;
    double sum = 0.0;
    std::int64_t m = 0;
    for (auto it = hist.lower_bound(u); it != hist.end(); ++it) {
        sum += static_cast<double>(it->second) * std::log(static_cast<double>(it->first) / base);
        m += it->second;
    }
    return sum > 0 ? static_cast<double>(m) / sum : 0.0;
}

namespace {

double r_squared(const std::vector<double>& x, const std::vector<double>& y, double* slope_out) {
    const auto n = static_cast<double>(x.size());
    const double xbar = std::accumulate(x.begin(), x.end(), 0.0) / n;
    const double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - xbar) * (x[i] - xbar);
        sxy += (x[i] - xbar) * (y[i] - ybar);
        syy += (y[i] - ybar) * (y[i] - ybar);
    }
    if (slope_out) *slope_out = sxx > 0 ? sxy / sxx : 0.0;
    if (sxx <= 0 || syy <= 0) return 0.0;
    return sxy * sxy / (sxx * syy);
}

constexpr double kFitMargin = 0.005;
constexpr std::int64_t kMinExceedances = 1000;
constexpr std::int64_t kMinTailCount = 10;
constexpr double kGridRatio = 1.0 + 1.0 / 64.0;

}  // namespace

TailReport tail_classify(const Histogram& hist) {
    TailReport rep;
    for (const auto& [v, c] : hist) rep.samples += c;
    if (rep.samples == 0) return rep;

    const auto target = static_cast<std::int64_t>(std::ceil(0.9 * static_cast<double>(rep.samples)));
    std::int64_t cum = 0;
    for (const auto& [v, c] : hist) {
        cum += c;
        if (cum >= target) {
            rep.threshold = v;
            break;
        }
    }
    rep.exceedances = rep.samples - cum;
    if (rep.exceedances < kMinExceedances) return rep;

    // Survival points P(X >= x | X > u) with enough mass, thinned to a grid
    // that is at most geometric with ratio kGridRatio. Short tails keep every
    // integer; long tails get equal weight per unit of log x.
    std::vector<double> xs, logx, logs;
    std::int64_t at_least = rep.exceedances;
    for (auto it = hist.upper_bound(rep.threshold); it != hist.end(); ++it) {
        if (at_least < kMinTailCount) break;
        const double x = static_cast<double>(it->first);
        if (!xs.empty() && x < xs.back() * kGridRatio) {
            at_least -= it->second;
            continue;
        }
        xs.push_back(x);
        logx.push_back(std::log(x));
        logs.push_back(std::log(static_cast<double>(at_least) / static_cast<double>(rep.exceedances)));
        at_least -= it->second;
    }
    rep.hill_index = hill_tail_index(hist);
    if (xs.size() < 5) return rep;

    double geo_slope = 0, pow_slope = 0;
    rep.r2_geometric = r_squared(xs, logs, &geo_slope);
    rep.r2_power = r_squared(logx, logs, &pow_slope);
    if (rep.r2_geometric > rep.r2_power + kFitMargin) {
        rep.classification = TailShape::geometric_like;
        rep.fitted_exponent = -geo_slope;
    } else if (rep.r2_power > rep.r2_geometric + kFitMargin) {
        rep.classification = TailShape::power_like;
        rep.fitted_exponent = rep.hill_index;
    }
    return rep;
}

TailReport tail_classify(std::span<const std::int64_t> values) { return tail_classify(histogram_of(values)); }

}  // namespace mwlab
