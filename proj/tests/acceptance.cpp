// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and nowhere else.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lidbounds/lidbounds.hpp"

using namespace lidbounds;

namespace {

constexpr double kMedianLo = 3.0, kMedianHi = 5.0;
constexpr double kEstimatorSeconds = 60.0;
constexpr double kClassBand = 1e-9;
constexpr double kCollapseTol = 1e-6;
constexpr double kChainSlack = 1e-9;
constexpr double kSpearmanFloor = 0.9;
constexpr double kSweepSeconds = 600.0;
constexpr double kTowardCeiling = 0.15;
constexpr double kKdeTol = 1e-6;
constexpr int kTrials = 10000;

struct Outcome {
    bool pass;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) { return format_double(v); }

// 1. MLE estimator recovers the intrinsic dimension of a 4-dimensional subspace.
Outcome estimator_ground_truth() {
    const auto t0 = Clock::now();
    const auto d = generate_synthetic({4, 50, 5000, SynthKind::uniform_ball_subspace, 1});
    std::vector<double> est;
    for (std::size_t q : select_queries(d.size(), 50, 1)) est.push_back(mle_lid(knn(d, q, 100)).value);
    const double med = median(est);
    const double secs = seconds_since(t0);
    const bool ok = med >= kMedianLo && med <= kMedianHi && secs <= kEstimatorSeconds;
    return {ok, "median LID " + fmt(med) + " (want [3, 5]), " + fmt(secs) + " s"};
}

// 2. (δ, θ) classification agrees with comparing y and x directly.
Outcome direction_rule_oracle() {
    Rng rng(2);
    int violations = 0, banded = 0;
    for (int i = 0; i < kTrials; ++i) {
        const std::size_t dim = 2 + rng.index(63);
        std::vector<double> a(dim), c(dim);
        for (auto& v : a) v = rng.uniform(-1, 1);
        for (auto& v : c) v = rng.uniform(-1, 1);
        const auto u = random_unit_vector(dim, rng);
        const double delta = rng.uniform(1e-3, 3.0);
        const auto t = make_triple(a, u, delta, c);
        const double gap = (t.y - t.x) / t.x;
        if (std::abs(gap) <= kClassBand) {
            ++banded;
            continue;
        }
        const Direction truth = gap > 0 ? Direction::away : Direction::toward;
        violations += direction_class(t) != truth;
    }
    return {violations == 0, std::to_string(violations) + " violations in " + std::to_string(kTrials) +
                                  " triples (" + std::to_string(banded) + " inside the 1e-9 band)"};
}

// Random planar triple with y > δx and an η drawn from the feasible part of the grid.
struct Fixture {
    PerturbationTriple t;
    double eta;
};

template <class Accept>
Fixture draw_fixture(Rng& rng, double m, BoundKind kind, double delta_hi, Accept accept) {
    for (;;) {
        const double delta = rng.uniform(0.02, delta_hi);
        const double theta = rng.uniform(0.0, std::numbers::pi);
        auto t = planar_triple(rng.uniform(0.1, 1.0), delta, theta);
        if (!accept(t) || !(t.y > t.delta_x() * (1 + 1e-6))) continue;
        if (kind != BoundKind::sandwich && direction_class(t) == Direction::boundary) continue;
        std::vector<double> etas;
        for (const auto& e : eta_grid(t, m, kind, 50))
            if (e.feasible) etas.push_back(e.eta);
        if (etas.empty()) continue;
        return {std::move(t), etas[rng.index(etas.size())]};
    }
}

// 3. On an exact power-law CDF the exponent lies inside every feasible sandwich.
Outcome exact_sandwich() {
    Rng rng(3);
    int outside = 0, unstable = 0, trials = 0;
    double worst_collapse = 0;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
        const PowerLawCdf f(m, 100.0);
        for (int i = 0; i < kTrials; ++i, ++trials) {
            const auto fx = draw_fixture(rng, m, BoundKind::sandwich, 3.0, [](const auto&) { return true; });
            const auto r = sandwich_bounds(fx.t, f, fx.eta);
            unstable += r.unstable;
            outside += !(r.lower <= m && m <= r.upper);
            if (fx.t.y / fx.t.delta_x() > 1.01) {
                const auto z = sandwich_bounds(fx.t, f, 1e-10);
                worst_collapse = std::max({worst_collapse, std::abs(z.lower - m), std::abs(z.upper - m)});
            }
        }
    }
    const bool ok = outside == 0 && worst_collapse <= kCollapseTol;
    return {ok, std::to_string(outside) + " of " + std::to_string(trials) + " feasible trials exclude m (" +
                    std::to_string(unstable) + " flagged unstable); eta->0 worst gap " + fmt(worst_collapse)};
}

// 4. Directional chains. Away: L2 < L3 < m <= U2 < U3; toward: L3 < L2 <= m < U3 < U2,
// where L2/U2 are the sandwich bounds and L3/U3 the directional ones at the same η.
Outcome directional_chains() {
    Rng rng(4);
    int away = 0, toward = 0;
    int away_fail[4] = {0, 0, 0, 0};
    int toward_fail[4] = {0, 0, 0, 0};
    const auto lt = [](double a, double b) { return a < b + kChainSlack * std::max(std::abs(a), std::abs(b)); };
    for (int i = 0; i < kTrials; ++i) {
        const double m = 1.0 + rng.index(10);
        const PowerLawCdf f(m, 100.0);
        const auto fx = draw_fixture(rng, m, BoundKind::directional_away, 0.98, [](const auto&) { return true; });
        const auto s = sandwich_bounds(fx.t, f, fx.eta);
        const auto d = directional_bounds(fx.t, f, fx.eta);
        if (d.kind == BoundKind::directional_away) {
            ++away;
            away_fail[0] += !lt(s.lower, d.lower);
            away_fail[1] += !lt(d.lower, m);
            away_fail[2] += !lt(m, s.upper);
            away_fail[3] += !lt(s.upper, d.upper);
        } else {
            ++toward;
            toward_fail[0] += !lt(d.lower, s.lower);
            toward_fail[1] += !lt(s.lower, m);
            toward_fail[2] += !lt(m, d.upper);
            toward_fail[3] += !lt(d.upper, s.upper);
        }
    }
    int total = 0;
    for (int k = 0; k < 4; ++k) total += away_fail[k] + toward_fail[k];
    std::ostringstream os;
    os << total << " link violations; away " << away << " fixtures [L2<L3 " << away_fail[0] << ", L3<LID "
       << away_fail[1] << ", LID<=U2 " << away_fail[2] << ", U2<U3 " << away_fail[3] << "]; toward " << toward
       << " fixtures [L3<L2 " << toward_fail[0] << ", L2<=LID " << toward_fail[1] << ", LID<U3 " << toward_fail[2]
       << ", U3<U2 " << toward_fail[3] << "]";
    return {total == 0, os.str()};
}

ExperimentConfig mnist_config(unsigned threads) {
    const std::filesystem::path root = LIDBOUNDS_DATA_DIR;
    ExperimentConfig cfg;
    cfg.source.format = DataFormat::mnist;
    cfg.source.paths = {root / "mnist/mnist5k-images-idx3-ubyte", root / "mnist/mnist5k-labels-idx1-ubyte"};
    cfg.n = 1000;
    cfg.k = 100;
    cfg.n_q = 50;
    cfg.seed = 0;
    cfg.threads = threads;
    return cfg;
}

std::string csv_text(std::span<const SweepRow> rows) {
    std::ostringstream out;
    write_sweep_csv(out, rows);
    return out.str();
}

unsigned worker_count() { return std::max(2u, std::thread::hardware_concurrency()); }

// 5. Lower bound, LID estimate and upper bound all grow with δ on MNIST.
Outcome mnist_trend(const SweepResult& res, double secs) {
    const auto summary = aggregate_by_delta(res.rows);
    std::vector<double> deltas, lower;
    for (const auto& s : summary) {
        if (!std::isfinite(s.lower_mean)) continue;
        deltas.push_back(s.delta);
        lower.push_back(s.lower_mean);
    }
    const double rho = deltas.size() >= 2 ? spearman(deltas, lower) : std::nan("");
    const auto& first = summary.front();
    const auto& last = summary.back();
    const bool rising = first.delta == 0.25 && last.delta == 2.5 && last.lower_mean > first.lower_mean &&
                        last.lid_mean > first.lid_mean && last.upper_mean > first.upper_mean;
    const bool ok = rho >= kSpearmanFloor && rising && secs <= kSweepSeconds;
    std::ostringstream os;
    os << "spearman " << fmt(rho) << "; delta 0.25 -> 2.5: lower " << fmt(first.lower_mean) << " -> "
       << fmt(last.lower_mean) << ", lid " << fmt(first.lid_mean) << " -> " << fmt(last.lid_mean) << ", upper "
       << fmt(first.upper_mean) << " -> " << fmt(last.upper_mean) << "; " << fmt(secs) << " s";
    return {ok, os.str()};
}

// 6. Most attack steps move away from the reference point.
Outcome mnist_directions(const SweepResult& res) {
    const auto s = direction_stats(res.rows);
    std::ostringstream os;
    os << "toward " << fmt(s.toward) << ", away " << fmt(s.away) << ", boundary " << fmt(s.boundary) << " over "
       << s.total << " rows";
    if (res.diagnostics.surrogate_accuracy) os << "; surrogate accuracy " << fmt(*res.diagnostics.surrogate_accuracy);
    return {s.toward < kTowardCeiling, os.str()};
}

// 7. Byte-identical CSV across repeated runs and thread counts.
Outcome determinism(const std::string& reference) {
    const auto again = csv_text(run_sweep(mnist_config(worker_count())).rows);
    const auto serial = csv_text(run_sweep(mnist_config(1)).rows);
    ExperimentConfig syn;
    syn.source.format = DataFormat::synth;
    syn.source.synth = SynthSpec{5, 20, 800, SynthKind::gaussian_subspace, 9, 3};
    syn.n = 800;
    syn.k = 50;
    syn.n_q = 20;
    syn.seed = 9;
    const auto s1 = csv_text(run_sweep(syn).rows);
    syn.threads = 3;
    const auto s3 = csv_text(run_sweep(syn).rows);
    const bool ok = again == reference && serial == reference && s1 == s3;
    std::ostringstream os;
    os << "mnist repeat " << (again == reference ? "identical" : "differs") << ", 1 vs " << worker_count()
       << " threads " << (serial == reference ? "identical" : "differs") << ", synthetic 1 vs 3 threads "
       << (s1 == s3 ? "identical" : "differs") << " (" << reference.size() << " bytes)";
    return {ok, os.str()};
}

// 8. Φ-sum CDF against trapezoid integration of the KDE density.
double kde_oracle_gap(const std::vector<double>& sample) {
    const auto cdf = fit_cdf(sample);
    const double h = cdf.bandwidth();
    const auto [mn, mx] = std::minmax_element(sample.begin(), sample.end());
    const double lo = *mn - 12 * h, hi = *mx + 5 * h;
    const std::size_t steps = 40000;
    const double step = (hi - lo) / steps;
    const double norm = 1.0 / (std::sqrt(2 * std::numbers::pi) * h * static_cast<double>(sample.size()));
    const auto density = [&](double r) {
        double s = 0;
        for (double d : sample) s += std::exp(-0.5 * ((r - d) / h) * ((r - d) / h));
        return s * norm;
    };
    double acc = 0, prev = density(lo), worst = 0;
    for (std::size_t i = 1; i <= steps; ++i) {
        const double r = lo + step * static_cast<double>(i);
        const double cur = density(r);
        acc += 0.5 * (prev + cur) * step;
        prev = cur;
        if (i % 80 == 0 && r >= 0) worst = std::max(worst, std::abs(cdf(r) - acc));
    }
    return worst;
}

Outcome kde_correctness(const Dataset& mnist) {
    std::vector<std::vector<double>> samples;
    Rng rng(8);
    std::vector<double> chi(1000);
    for (auto& v : chi) {
        double s = 0;
        for (int j = 0; j < 10; ++j) s += std::pow(rng.normal(), 2);
        v = std::sqrt(s);
    }
    samples.push_back(chi);
    const auto sub = subsample(mnist, 1001, 8);
    samples.push_back(all_distances(sub, sub.row(0), std::size_t{0}));

    double worst = 0;
    int monotone_breaks = 0, out_of_range = 0;
    for (const auto& s : samples) {
        worst = std::max(worst, kde_oracle_gap(s));
        const auto cdf = fit_cdf(s);
        const double top = *std::max_element(s.begin(), s.end()) + 10 * cdf.bandwidth();
        double prev = -1;
        for (int i = 0; i < kTrials; ++i) {
            const double f = cdf(top * i / (kTrials - 1));
            monotone_breaks += f < prev;
            out_of_range += f < 0 || f > 1;
            prev = f;
        }
    }
    const bool ok = worst <= kKdeTol && monotone_breaks == 0 && out_of_range == 0;
    return {ok, "oracle gap " + fmt(worst) + " on 2 samples of 1000; " + std::to_string(monotone_breaks) +
                    " monotonicity breaks, " + std::to_string(out_of_range) + " values outside [0,1] on the grid"};
}

} // namespace

int main() {
    int failures = 0;
    const auto report = [&](int id, const char* name, const std::function<Outcome()>& run) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
        std::fflush(stdout);
    };

    report(1, "estimator ground truth", estimator_ground_truth);
    report(2, "direction rule oracle", direction_rule_oracle);
    report(3, "exact sandwich on power-law CDFs", exact_sandwich);
    report(4, "directional chain ordering", directional_chains);

    SweepResult mnist_run;
    std::string mnist_csv;
    double mnist_secs = 0;
    std::string mnist_error;
    try {
        const auto t0 = Clock::now();
        mnist_run = run_sweep(mnist_config(worker_count()));
        mnist_secs = seconds_since(t0);
        mnist_csv = csv_text(mnist_run.rows);
    } catch (const std::exception& e) {
        mnist_error = e.what();
    }
    const auto guarded = [&](auto fn) {
        return [&, fn]() -> Outcome {
            if (!mnist_error.empty()) return {false, "mnist sweep failed: " + mnist_error};
            return fn();
        };
    };
    report(5, "mnist trend in delta", guarded([&] { return mnist_trend(mnist_run, mnist_secs); }));
    report(6, "mnist direction statistics", guarded([&] { return mnist_directions(mnist_run); }));
    report(7, "determinism", guarded([&] { return determinism(mnist_csv); }));
    report(8, "kde correctness", [] {
        const std::filesystem::path root = LIDBOUNDS_DATA_DIR;
        return kde_correctness(
            load_mnist(root / "mnist/mnist5k-images-idx3-ubyte", root / "mnist/mnist5k-labels-idx1-ubyte"));
    });

    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
