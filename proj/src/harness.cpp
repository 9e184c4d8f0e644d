#include "lrdlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <set>
#include <stdexcept>

#include "format.hpp"
#include "lrdlab/hermite_process.hpp"
#include "lrdlab/rng.hpp"
#include "parallel.hpp"

namespace lrdlab {

namespace {

// Stream tags for the auxiliary randomness of each test, mixed with the
// batch seed so reports depend on nothing else.
constexpr std::uint64_t kTagCovariance = 0x636f76ULL;
constexpr std::uint64_t kTagLrd = 0x6c7264ULL;
constexpr std::uint64_t kTagMixed = 0x6d6978ULL;
constexpr std::uint64_t kTagReference = 0x726566ULL;

std::uint64_t stream(std::uint64_t master, std::uint64_t tag, std::uint64_t index) {
    return derive_seed(derive_seed(master, tag), index);
}

std::string fmt(double x) { return detail::format_double(x); }

std::string at_label(const std::string& base, double t1, double t2) {
    return base + "@(" + fmt(t1) + "," + fmt(t2) + ")";
}

double resampled_cov(std::span<const double> x, std::span<const double> y, std::span<const std::size_t> idx) {
    long double sx = 0.0L, sy = 0.0L, sxy = 0.0L;
    for (std::size_t i : idx) {
        sx += x[i];
        sy += y[i];
        sxy += static_cast<long double>(x[i]) * y[i];
    }
    const long double n = static_cast<long double>(idx.size());
    return static_cast<double>((sxy - sx * sy / n) / (n - 1.0L));
}

std::vector<double> gather(std::span<const double> x, std::span<const std::size_t> idx) {
    std::vector<double> out(idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) out[i] = x[idx[i]];
    return out;
}

// Mean of x^a y^b minus the product of the means of x^a and y^b.
double moment_gap(std::span<const double> x, std::span<const double> y, std::span<const std::size_t> idx, int a,
                  int b) {
    long double sxy = 0.0L, sx = 0.0L, sy = 0.0L;
    for (std::size_t i : idx) {
        const long double xa = std::pow(static_cast<long double>(x[i]), a);
        const long double yb = std::pow(static_cast<long double>(y[i]), b);
        sxy += xa * yb;
        sx += xa;
        sy += yb;
    }
    const long double n = static_cast<long double>(idx.size());
    return static_cast<double>(sxy / n - (sx / n) * (sy / n));
}

std::vector<std::size_t> all_indices(std::size_t n) {
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    return idx;
}

Check band_check(std::string label, double estimate, double reference, double se, double band) {
    Check c;
    c.label = std::move(label);
    c.estimate = estimate;
    c.reference = reference;
    c.se = se;
    c.tolerance = band * se;
    c.pass = std::isfinite(estimate) && std::abs(estimate - reference) <= c.tolerance;
    return c;
}

Check p_value_check(std::string label, double p, double alpha) {
    Check c;
    c.label = std::move(label);
    c.estimate = p;
    c.reference = alpha;
    c.tolerance = alpha;
    c.pass = p > alpha;
    return c;
}

}  // namespace

std::vector<double> ReplicationBatch::column(std::size_t j, std::size_t a) const {
    std::vector<double> out(R);
    for (std::size_t r = 0; r < R; ++r) out[r] = (*this)(r, j, a);
    return out;
}

std::size_t ReplicationBatch::time_index(double t) const {
    for (std::size_t a = 0; a < t_grid.size(); ++a) {
        if (std::abs(t_grid[a] - t) <= 1e-12) return a;
    }
    throw std::invalid_argument("time " + fmt(t) + " is not on the batch time grid");
}

BatchSummary summarize(const ReplicationBatch& batch) {
    const std::size_t J = batch.components();
    const std::size_t T = batch.times();
    const std::size_t K = J * T;
    BatchSummary s;
    s.mean.resize(K);
    s.mean_se.resize(K);
    s.moments.resize(K);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(batch.R), static_cast<Eigen::Index>(K));
    for (std::size_t j = 0; j < J; ++j) {
        for (std::size_t a = 0; a < T; ++a) {
            const auto col = batch.column(j, a);
            const std::size_t k = j * T + a;
            s.moments[k] = sample_moments(col);
            s.mean[k] = s.moments[k].mean;
            s.mean_se[k] = std::sqrt(s.moments[k].variance / static_cast<double>(batch.R));
            for (std::size_t r = 0; r < batch.R; ++r) {
                X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = col[r] - s.mean[k];
            }
        }
    }
    s.covariance = X.transpose() * X / static_cast<double>(batch.R - 1);
    return s;
}

ReplicationBatch run_batch(const LimitModel& limit, std::size_t N, std::span<const double> t_grid, std::size_t R,
                           std::uint64_t seed, unsigned threads, Evaluation mode) {
    if (R < 2) throw std::invalid_argument("a batch needs at least 2 replications");
    validate_time_grid(t_grid, N);
    ReplicationBatch batch;
    batch.master_seed = seed;
    batch.R = R;
    batch.N = N;
    batch.t_grid.assign(t_grid.begin(), t_grid.end());
    for (const auto& c : limit.components()) {
        batch.labels.push_back(c.label);
        batch.regimes.push_back(c.regime);
        batch.ranks.push_back(c.rank);
    }
    batch.normalization = limit.normalizations(N);

    const std::size_t J = batch.components();
    const std::size_t T = batch.times();
    batch.values.assign(R * J * T, 0.0);
    const CirculantSampler sampler(limit.model(), N);
    detail::parallel_for(R, threads, [&](std::size_t r) {
        std::vector<double> path(N);
        sampler.sample_into(derive_seed(seed, r), path);
        const auto v = build_vector(path, limit.specs(), batch.normalization, t_grid, mode);
        std::copy(v.values.begin(), v.values.end(), batch.values.begin() + static_cast<std::ptrdiff_t>(r * J * T));
    });
    return batch;
}

ReplicationBatch run_batch(const std::vector<ComponentSpec>& specs, const CovarianceModel& model, std::size_t N,
                           std::span<const double> t_grid, std::size_t R, std::uint64_t seed, unsigned threads,
                           Evaluation mode) {
    return run_batch(LimitModel(specs, model), N, t_grid, R, seed, threads, mode);
}

std::string_view to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
    }
    return "inconclusive";
}

void finalize(TestReport& report) {
    bool any = false;
    bool all = true;
    for (const auto& c : report.checks) {
        if (c.informational) continue;
        any = true;
        all = all && c.pass;
    }
    if (report.conjecture || !any) {
        report.verdict = Verdict::Inconclusive;
    } else {
        report.verdict = all ? Verdict::Pass : Verdict::Fail;
    }
}

nlohmann::json to_json(const TestReport& report) {
    nlohmann::json j;
    j["name"] = report.name;
    j["N"] = report.N;
    j["statistic_name"] = report.statistic_name;
    j["statistic"] = report.statistic;
    j["p_value"] = report.p_value ? nlohmann::json(*report.p_value) : nlohmann::json(nullptr);
    j["tolerance"] = report.tolerance;
    j["verdict"] = std::string(to_string(report.verdict));
    if (report.conjecture) j["label"] = "conjecture evidence";
    auto& checks = j["checks"] = nlohmann::json::array();
    for (const auto& c : report.checks) {
        checks.push_back({{"label", c.label},
                          {"estimate", c.estimate},
                          {"reference", c.reference},
                          {"se", c.se},
                          {"tolerance", c.tolerance},
                          {"pass", c.pass},
                          {"informational", c.informational}});
    }
    j["notes"] = report.notes;
    return j;
}

TestReport test_srd_covariance(const ReplicationBatch& batch, const LimitModel& limit,
                               const std::vector<std::pair<double, double>>& t_pairs, const HarnessOptions& options) {
    TestReport rep;
    rep.name = "srd_covariance";
    rep.N = batch.N;
    rep.statistic_name = "max |z|";
    rep.tolerance = "|empirical - limit| <= " + fmt(options.se_band) + " bootstrap SE";
    const auto srd = limit.indices(Regime::SRD);
    if (srd.empty()) {
        rep.notes.push_back("no SRD components");
        finalize(rep);
        return rep;
    }
    std::uint64_t counter = 0;
    for (const auto& [t1, t2] : t_pairs) {
        const std::size_t a1 = batch.time_index(t1);
        const std::size_t a2 = batch.time_index(t2);
        for (std::size_t i : srd) {
            for (std::size_t j : srd) {
                // At t1 == t2 the matrix is symmetric.
                if (a1 == a2 && j < i) continue;
                const auto x = batch.column(i, a1);
                const auto y = batch.column(j, a2);
                const double est = resampled_cov(x, y, all_indices(batch.R));
                const double se = bootstrap_se(
                    batch.R, [&](std::span<const std::size_t> idx) { return resampled_cov(x, y, idx); },
                    options.bootstrap_resamples, stream(batch.master_seed, kTagCovariance, counter++));
                const double ref = limit.srd_covariance(i, j, t1, t2);
                rep.checks.push_back(band_check(
                    at_label("cov[" + batch.labels[i] + "," + batch.labels[j] + "]", t1, t2), est, ref, se,
                    options.se_band));
                const double z = se > 0.0 ? std::abs(est - ref) / se : (est == ref ? 0.0 : INFINITY);
                rep.statistic = std::max(rep.statistic, z);
            }
        }
    }
    finalize(rep);
    return rep;
}

TestReport test_marginal_normality(const ReplicationBatch& batch, std::size_t component, double t,
                                   const HarnessOptions& options) {
    TestReport rep;
    rep.name = "marginal_normality[" + batch.labels.at(component) + "]@t=" + fmt(t);
    rep.N = batch.N;
    rep.statistic_name = "KS D";
    rep.tolerance = "p > " + fmt(options.alpha);
    auto x = batch.column(component, batch.time_index(t));
    const double scale = std::sqrt(t);
    for (double& v : x) v /= scale;
    const auto ks = ks_test_normal(x);
    rep.statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.checks.push_back(p_value_check("ks_p_value", ks.p_value, options.alpha));
    if (batch.regimes.at(component) == Regime::LRD) {
        rep.notes.push_back("regime mismatch: component is LRD, its limit is not Gaussian");
    }
    finalize(rep);
    return rep;
}

TestReport test_lrd_limit(const ReplicationBatch& batch, std::size_t component, double t,
                          std::span<const double> reference, double hurst, const HarnessOptions& options) {
    TestReport rep;
    rep.name = "lrd_limit[" + batch.labels.at(component) + "]@t=" + fmt(t);
    rep.N = batch.N;
    rep.statistic_name = "two-sample KS D";
    rep.tolerance = "variance and kurtosis within " + fmt(options.se_band) +
                    " SE, 95% skewness intervals overlap, KS p > " + fmt(options.alpha);
    if (batch.regimes.at(component) != Regime::LRD) {
        rep.notes.push_back("regime mismatch: component is not LRD");
    }
    const auto x = batch.column(component, batch.time_index(t));
    const std::size_t R = x.size();
    const std::size_t Rr = reference.size();

    // Second moment against t^{2H} (the limit is centered).
    std::vector<double> sq(R);
    for (std::size_t i = 0; i < R; ++i) sq[i] = x[i] * x[i];
    const auto msq = sample_moments(sq);
    rep.checks.push_back(band_check("variance", msq.mean, std::pow(t, 2.0 * hurst),
                                    std::sqrt(msq.variance / static_cast<double>(R)), options.se_band));

    const auto skew = [](std::span<const double> v, std::span<const std::size_t> idx) {
        return sample_moments(gather(v, idx)).skewness;
    };
    const auto kurt = [](std::span<const double> v, std::span<const std::size_t> idx) {
        return sample_moments(gather(v, idx)).excess_kurtosis;
    };
    const auto mx = sample_moments(x);
    const auto mr = sample_moments(reference);
    const std::span<const double> xs(x);
    const double se_skew_x = bootstrap_se(
        R, [&](auto idx) { return skew(xs, idx); }, options.bootstrap_resamples,
        stream(batch.master_seed, kTagLrd, 2 * component));
    const double se_skew_r = bootstrap_se(
        Rr, [&](auto idx) { return skew(reference, idx); }, options.bootstrap_resamples,
        stream(batch.master_seed, kTagLrd, 2 * component + 1));
    Check sk;
    sk.label = "skewness";
    sk.estimate = mx.skewness;
    sk.reference = mr.skewness;
    sk.se = std::hypot(se_skew_x, se_skew_r);
    sk.tolerance = 1.959963984540054 * (se_skew_x + se_skew_r);
    sk.pass = std::abs(sk.estimate - sk.reference) <= sk.tolerance;
    rep.checks.push_back(sk);

    const double se_kurt_x = bootstrap_se(
        R, [&](auto idx) { return kurt(xs, idx); }, options.bootstrap_resamples,
        stream(batch.master_seed, kTagLrd, 1000 + 2 * component));
    const double se_kurt_r = bootstrap_se(
        Rr, [&](auto idx) { return kurt(reference, idx); }, options.bootstrap_resamples,
        stream(batch.master_seed, kTagLrd, 1001 + 2 * component));
    rep.checks.push_back(band_check("excess_kurtosis", mx.excess_kurtosis, mr.excess_kurtosis,
                                    std::hypot(se_kurt_x, se_kurt_r), options.se_band));

    const auto ks = ks_test_two_sample(x, reference);
    rep.statistic = ks.statistic;
    rep.p_value = ks.p_value;
    rep.checks.push_back(p_value_check("ks_p_value", ks.p_value, options.alpha));
    finalize(rep);
    return rep;
}

TestReport test_mixed_independence(const ReplicationBatch& batch,
                                   const std::vector<std::pair<double, double>>& t_pairs,
                                   const HarnessOptions& options) {
    std::vector<std::size_t> srd, lrd;
    for (std::size_t j = 0; j < batch.components(); ++j) {
        (batch.regimes[j] == Regime::LRD ? lrd : srd).push_back(j);
    }
    auto rep = test_mixed_independence(batch, srd, lrd, t_pairs, options);
    bool beyond = false;
    for (std::size_t j : lrd) beyond = beyond || batch.ranks[j] >= 3;
    if (beyond) {
        rep.conjecture = true;
        rep.notes.push_back("LRD rank >= 3: outside the proven scope, reported as conjecture evidence");
        finalize(rep);
    }
    return rep;
}

TestReport test_mixed_independence(const ReplicationBatch& batch, const std::vector<std::size_t>& first_block,
                                   const std::vector<std::size_t>& second_block,
                                   const std::vector<std::pair<double, double>>& t_pairs,
                                   const HarnessOptions& options) {
    TestReport rep;
    rep.name = "mixed_independence";
    rep.N = batch.N;
    rep.statistic_name = "distance correlation";
    rep.tolerance = "permutation p > " + fmt(options.alpha) + ", cross-moment gaps within " + fmt(options.se_band) +
                    " bootstrap SE of 0";
    if (first_block.empty() || second_block.empty()) {
        rep.notes.push_back("one of the blocks is empty");
        finalize(rep);
        return rep;
    }
    const auto R = static_cast<Eigen::Index>(batch.R);
    std::uint64_t counter = 0;
    double min_p = 1.0;
    for (const auto& [t1, t2] : t_pairs) {
        const std::size_t a1 = batch.time_index(t1);
        const std::size_t a2 = batch.time_index(t2);
        Eigen::MatrixXd X(R, static_cast<Eigen::Index>(first_block.size()));
        Eigen::MatrixXd Y(R, static_cast<Eigen::Index>(second_block.size()));
        for (Eigen::Index r = 0; r < R; ++r) {
            for (std::size_t c = 0; c < first_block.size(); ++c) {
                X(r, static_cast<Eigen::Index>(c)) = batch(static_cast<std::size_t>(r), first_block[c], a1);
            }
            for (std::size_t c = 0; c < second_block.size(); ++c) {
                Y(r, static_cast<Eigen::Index>(c)) = batch(static_cast<std::size_t>(r), second_block[c], a2);
            }
        }
        const auto perm = dcor_permutation_test(X, Y, options.permutations,
                                                stream(batch.master_seed, kTagMixed, counter++));
        if (perm.p_value <= min_p) {
            min_p = perm.p_value;
            rep.statistic = perm.statistic;
        }
        rep.checks.push_back(p_value_check(at_label("dcor_p_value", t1, t2), perm.p_value, options.alpha));

        for (std::size_t s : first_block) {
            for (std::size_t l : second_block) {
                const auto x = batch.column(s, a1);
                const auto y = batch.column(l, a2);
                const std::string pair = "[" + batch.labels[s] + "," + batch.labels[l] + "]";
                const auto all = all_indices(batch.R);
                for (int b : {1, 2}) {
                    const double gap = moment_gap(x, y, all, 2, b);
                    const double se = bootstrap_se(
                        batch.R, [&](std::span<const std::size_t> idx) { return moment_gap(x, y, idx, 2, b); },
                        options.bootstrap_resamples, stream(batch.master_seed, kTagMixed, counter++));
                    const std::string name = b == 1 ? "gap_S2L" : "gap_S2L2";
                    rep.checks.push_back(band_check(at_label(name + pair, t1, t2), gap, 0.0, se, options.se_band));
                }
                const double corr = resampled_cov(x, y, all) /
                                    std::sqrt(resampled_cov(x, x, all) * resampled_cov(y, y, all));
                const double se_corr = bootstrap_se(
                    batch.R,
                    [&](std::span<const std::size_t> idx) {
                        return resampled_cov(x, y, idx) /
                               std::sqrt(resampled_cov(x, x, idx) * resampled_cov(y, y, idx));
                    },
                    options.bootstrap_resamples, stream(batch.master_seed, kTagMixed, counter++));
                auto c = band_check(at_label("correlation" + pair, t1, t2), corr, 0.0, se_corr, options.se_band);
                c.informational = true;
                rep.checks.push_back(c);
            }
        }
    }
    rep.p_value = min_p;
    finalize(rep);
    return rep;
}

std::vector<double> hermite_reference_sample(int k, double d, double t, std::size_t R, std::uint64_t seed,
                                             unsigned threads, std::size_t resolution) {
    HermiteProcessSpec spec;
    spec.k = k;
    spec.h0 = d + 0.5;
    spec.representation = Representation::FiniteInterval;
    spec.resolution = resolution;
    const HermiteProcessSimulator sim(spec, {t});
    return sim.sample_many(R, seed, threads);
}

std::vector<std::string> SweepResult::failing_tests() const {
    std::vector<std::string> out;
    if (reports.empty()) return out;
    for (const auto& r : final_reports()) {
        if (r.verdict == Verdict::Fail) out.push_back(r.name);
    }
    return out;
}

namespace {

void add_trend(SweepResult& out, std::size_t N, const TestReport& rep) {
    out.trend.push_back({N, rep.name, "statistic", rep.statistic});
    if (rep.p_value) out.trend.push_back({N, rep.name, "p_value", *rep.p_value});
    double worst = 0.0;
    bool any = false;
    for (const auto& c : rep.checks) {
        if (c.informational || c.label.find("p_value") != std::string::npos) continue;
        worst = std::max(worst, std::abs(c.estimate - c.reference));
        any = true;
    }
    if (any) out.trend.push_back({N, rep.name, "max_abs_error", worst});
}

}  // namespace

SweepResult convergence_sweep(const std::vector<ComponentSpec>& specs, const CovarianceModel& model,
                              const std::vector<std::size_t>& N_grid, std::span<const double> t_grid, std::size_t R,
                              std::uint64_t seed, const SweepOptions& options, unsigned threads) {
    if (N_grid.empty()) throw std::invalid_argument("N grid is empty");
    for (std::size_t i = 1; i < N_grid.size(); ++i) {
        if (N_grid[i] <= N_grid[i - 1]) throw std::invalid_argument("N grid must be strictly increasing");
    }
    const LimitModel limit(specs, model);
    const double t_last = t_grid.empty() ? 1.0 : t_grid.back();
    const auto srd = limit.indices(Regime::SRD);
    const auto lrd = limit.indices(Regime::LRD);

    // Hermite limit references do not depend on N.
    std::vector<std::vector<double>> references(limit.size());
    const auto d = model.memory_parameter();
    for (std::size_t j : lrd) {
        const int k = limit.components()[j].rank;
        if (!d || k > 3) continue;
        references[j] = hermite_reference_sample(k, *d, t_last, R * options.reference_factor,
                                                 stream(seed, kTagReference, j), threads,
                                                 options.reference_resolution);
    }

    std::set<int> srd_ranks;
    for (std::size_t j : srd) srd_ranks.insert(limit.components()[j].rank);

    SweepResult out;
    out.N_grid = N_grid;
    for (std::size_t i = 0; i < N_grid.size(); ++i) {
        const std::size_t N = N_grid[i];
        const auto batch = run_batch(limit, N, t_grid, R, derive_seed(seed, i), threads, options.mode);
        std::vector<TestReport> reports;
        if (!srd.empty()) {
            reports.push_back(test_srd_covariance(batch, limit, options.t_pairs, options.harness));
        }
        for (std::size_t j = 0; j < limit.size(); ++j) {
            if (limit.components()[j].regime != Regime::LRD) {
                reports.push_back(test_marginal_normality(batch, j, t_last, options.harness));
            } else if (!references[j].empty()) {
                reports.push_back(test_lrd_limit(batch, j, t_last, references[j],
                                                 limit.components()[j].hurst.value_or(0.5), options.harness));
            }
        }
        if (!srd.empty() && !lrd.empty()) {
            reports.push_back(test_mixed_independence(batch, options.t_pairs, options.harness));
        }
        for (const auto& rep : reports) add_trend(out, N, rep);
        for (int m : srd_ranks) {
            for (const auto& [t1, t2] : options.t_pairs) {
                try {
                    const double lim = std::min(t1, t2) * lag_power_sum(model, m).value;
                    const double sn = cov_limit_lemma(model, m, t1, t2, N);
                    out.trend.push_back({N, "lag_sum_lemma", at_label("abs_error_m" + std::to_string(m), t1, t2),
                                         std::abs(sn - lim)});
                } catch (const std::domain_error&) {
                    // Divergent lag sum: nothing to compare.
                }
            }
        }
        out.reports.push_back(std::move(reports));
    }
    return out;
}

nlohmann::json to_json(const SweepResult& result) {
    nlohmann::json j;
    j["N_grid"] = result.N_grid;
    auto& per_n = j["reports"] = nlohmann::json::array();
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
        nlohmann::json entry;
        entry["N"] = result.N_grid[i];
        entry["role"] = i + 1 == result.reports.size() ? "verdict" : "diagnostic";
        auto& list = entry["tests"] = nlohmann::json::array();
        for (const auto& r : result.reports[i]) list.push_back(to_json(r));
        per_n.push_back(std::move(entry));
    }
    auto& trend = j["trend"] = nlohmann::json::array();
    for (const auto& row : result.trend) {
        trend.push_back({{"N", row.N}, {"test", row.test}, {"quantity", row.quantity}, {"value", row.value}});
    }
    j["failing_tests"] = result.failing_tests();
    return j;
}

void write_trend_csv(const SweepResult& result, std::ostream& os) {
    os << "N,test,quantity,value\n";
    for (const auto& row : result.trend) {
        os << row.N << ',' << detail::csv_field(row.test) << ',' << detail::csv_field(row.quantity) << ','
           << detail::format_double(row.value) << '\n';
    }
}

}  // namespace lrdlab
