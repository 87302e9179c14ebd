#pragma once

// δ-sweep harness: pick queries, take the rank-k/2 neighbour as reference,
// perturb along an attack direction by δx for every δ in the grid, and
// record the LID estimate of the perturbed point with η-averaged bounds.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lidbounds/bounds.hpp"
#include "lidbounds/dataset.hpp"
#include "lidbounds/distance_cdf.hpp"
#include "lidbounds/error.hpp"
#include "lidbounds/geometry.hpp"
#include "lidbounds/io.hpp"
#include "lidbounds/lid.hpp"
#include "lidbounds/metric.hpp"
#include "lidbounds/random.hpp"
#include "lidbounds/stats.hpp"
#include "lidbounds/surrogate.hpp"
#include "lidbounds/synthetic.hpp"

namespace lidbounds {

enum class DataFormat { mnist, cifar10, csv, synth };

/// Where the data comes from. mnist takes two paths (images, labels);
/// cifar10 takes one or more batch files; csv one file.
struct DatasetSource {
    DataFormat format = DataFormat::synth;
    std::vector<std::filesystem::path> paths;
    bool csv_labels = true;
    SynthSpec synth{};
};

inline Dataset load_dataset(const DatasetSource& src) {
    switch (src.format) {
        case DataFormat::mnist:
            require(src.paths.size() == 2, "mnist needs an images path and a labels path");
            return load_mnist(src.paths[0], src.paths[1]);
        case DataFormat::cifar10: return load_cifar10(src.paths);
        case DataFormat::csv:
            require(src.paths.size() == 1, "csv needs exactly one path");
            return load_csv(src.paths[0], src.csv_labels);
        case DataFormat::synth: return generate_synthetic(src.synth);
    }
    fail(Errc::argument, "unknown data format");
}

inline std::vector<double> default_delta_grid() {
    std::vector<double> g;
    for (int i = 1; i <= 10; ++i) g.push_back(0.25 * i);
    return g;
}

struct ExperimentConfig {
    DatasetSource source;
    std::size_t n = 1000;
    std::size_t k = 100;
    std::size_t n_q = 50;
    std::vector<double> delta_grid = default_delta_grid();
    std::uint64_t seed = 0;
    std::size_t eta_grid_size = 50;
    std::filesystem::path output;
    /// One unit vector per query, in query order; replaces the surrogate.
    std::optional<std::vector<std::vector<double>>> directions;
    int surrogate_epochs = 20;
    double surrogate_lr = 0.1;
    unsigned threads = 1;
};

struct SweepRow {
    std::string dataset;
    std::size_t n = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::size_t query = 0;
    double delta = 0;
    double y = 0;
    double x = 0;
    double theta = 0;
    Direction direction = Direction::boundary;
    double f_y = 0;
    double f_delta_x = 0;
    double lid_estimate = 0;
    double lower_mean = 0;
    double upper_mean = 0;
    std::size_t n_feasible_eta = 0;
    std::size_t instability_count = 0;
};

/// Run-level facts that have no SweepRow column.
struct SweepDiagnostics {
    std::vector<std::size_t> fallback_queries;    // zero gradient, random direction used
    std::vector<std::string> row_errors;          // rows whose computation failed
    std::size_t delta_ratio_violations = 0;       // rows with δ >= y/x
    std::optional<double> surrogate_accuracy;
    std::size_t kde_sample_size = 0;
};

struct SweepResult {
    std::vector<SweepRow> rows;
    SweepDiagnostics diagnostics;
};

namespace stream {
inline constexpr std::uint64_t subsample = 1;
inline constexpr std::uint64_t queries = 2;
inline constexpr std::uint64_t surrogate = 3;
inline constexpr std::uint64_t fallback_base = 1ULL << 32;
} // namespace stream

inline void validate(const ExperimentConfig& cfg, std::size_t available) {
    require(cfg.n >= 1 && cfg.n <= available,
            "n = " + std::to_string(cfg.n) + " must be in [1, " + std::to_string(available) + "]");
    require(cfg.k >= 2 && cfg.k < cfg.n, "k must satisfy 2 <= k < n");
    require(cfg.n_q >= 1 && cfg.n_q <= cfg.n, "n_q must satisfy 1 <= n_q <= n");
    require(!cfg.delta_grid.empty(), "delta grid is empty");
    for (std::size_t i = 0; i < cfg.delta_grid.size(); ++i) {
        require(cfg.delta_grid[i] > 0 && std::isfinite(cfg.delta_grid[i]), "delta values must be positive");
        require(i == 0 || cfg.delta_grid[i] > cfg.delta_grid[i - 1], "delta grid must be strictly ascending");
    }
    require(cfg.eta_grid_size >= 1, "eta grid size must be >= 1");
    require(cfg.threads >= 1, "thread count must be >= 1");
    if (cfg.directions) require(cfg.directions->size() == cfg.n_q, "directions file needs one row per query");
}

/// The subsample the sweep runs on.
inline Dataset sweep_subsample(const Dataset& data, const ExperimentConfig& cfg) {
    return subsample(data, cfg.n, derive_seed(cfg.seed, stream::subsample));
}

/// Query indices into the subsample, ascending.
inline std::vector<std::size_t> select_queries(std::size_t n, std::size_t n_q, std::uint64_t seed) {
    return subsample_indices(n, n_q, derive_seed(seed, stream::queries));
}

inline AttackModel sweep_surrogate(const Dataset& sub, const ExperimentConfig& cfg) {
    return train_surrogate(sub, cfg.surrogate_epochs, cfg.surrogate_lr, derive_seed(cfg.seed, stream::surrogate));
}

/// Unit directions for each query: the attack surrogate's, or a seeded random
/// direction where the loss gradient vanishes.
inline std::vector<std::vector<double>> surrogate_directions(const Dataset& sub, const AttackModel& model,
                                                             std::span<const std::size_t> queries, std::uint64_t seed,
                                                             std::vector<std::size_t>* fallbacks = nullptr) {
    std::vector<std::vector<double>> out;
    out.reserve(queries.size());
    for (std::size_t q = 0; q < queries.size(); ++q) {
        try {
            out.push_back(attack_direction(model, sub.row(queries[q]), sub.label(queries[q])));
        } catch (const Error& e) {
            if (e.code() != Errc::degenerate) throw;
            Rng rng(derive_seed(seed, stream::fallback_base + q));
            out.push_back(random_unit_vector(sub.dim(), rng));
            if (fallbacks) fallbacks->push_back(q);
        }
    }
    return out;
}

namespace detail {

inline SweepRow sweep_row(const Dataset& sub, const ExperimentConfig& cfg, std::size_t query, Point direction,
                          std::size_t reference, double delta) {
    SweepRow row;
    row.dataset = sub.name();
    row.n = sub.size();
    row.k = cfg.k;
    row.seed = cfg.seed;
    row.query = query;
    row.delta = delta;

    const auto t = make_triple(sub.row(query), direction, delta, sub.row(reference));
    row.y = t.y;
    row.x = t.x;
    row.theta = t.theta;
    row.direction = direction_class(t);

    // F_b is fit on all n distances from b; b is not a member, so none is excluded
    const auto cdf = fit_cdf(all_distances(sub, t.b));
    row.f_y = cdf(t.y);
    row.f_delta_x = cdf(t.delta_x());
    row.lid_estimate = mle_lid(knn(sub, t.b, cfg.k)).value;

    const auto avg = averaged_bounds(t, cdf, row.lid_estimate, cfg.eta_grid_size);
    row.lower_mean = avg.lower_mean;
    row.upper_mean = avg.upper_mean;
    row.n_feasible_eta = avg.n_feasible;
    row.instability_count = avg.n_unstable;
    return row;
}

} // namespace detail

/// Runs the sweep on an already loaded dataset. Rows are ordered by query,
/// then δ; each row depends only on (config, query), so the output is the
/// same for every thread count.
inline SweepResult run_sweep(const Dataset& data, const ExperimentConfig& cfg) {
    validate(cfg, data.size());
    SweepResult result;
    auto& diag = result.diagnostics;

    const Dataset sub = sweep_subsample(data, cfg);
    diag.kde_sample_size = sub.size();
    const auto queries = select_queries(sub.size(), cfg.n_q, cfg.seed);

    std::vector<std::vector<double>> directions;
    if (cfg.directions) {
        directions = *cfg.directions;
        for (const auto& d : directions)
            require(d.size() == sub.dim(), "direction dimension does not match the dataset");
    } else {
        require(sub.has_labels(), "dataset has no labels; supply a directions file");
        const auto model = sweep_surrogate(sub, cfg);
        diag.surrogate_accuracy = accuracy(model, sub);
        directions = surrogate_directions(sub, model, queries, cfg.seed, &diag.fallback_queries);
    }

    const std::size_t per_query = cfg.delta_grid.size();
    result.rows.resize(queries.size() * per_query);
    std::vector<std::string> errors(result.rows.size());

    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mutex;
    const auto worker = [&] {
        for (std::size_t q = next++; q < queries.size(); q = next++) {
            try {
                const auto nl = knn(sub, queries[q], cfg.k);
                const std::size_t reference = nl.indices[cfg.k / 2 - 1]; // rank floor(k/2), 1-based
                for (std::size_t j = 0; j < per_query; ++j) {
                    const double delta = cfg.delta_grid[j];
                    auto& slot = result.rows[q * per_query + j];
                    try {
                        slot = detail::sweep_row(sub, cfg, queries[q], directions[q], reference, delta);
                    } catch (const Error& e) {
                        const double nan = std::numeric_limits<double>::quiet_NaN();
                        slot = SweepRow{sub.name(), sub.size(), cfg.k, cfg.seed, queries[q], delta,
                                        nan, nan, nan, Direction::boundary, nan, nan, nan, nan, nan, 0, 1};
                        errors[q * per_query + j] = "query " + std::to_string(queries[q]) + " delta " +
                                                    format_double(delta) + ": " + e.what();
                    }
                }
            } catch (...) {
                std::lock_guard lock(fatal_mutex);
                if (!fatal) fatal = std::current_exception();
            }
        }
    };

    const unsigned threads = std::min<unsigned>(cfg.threads, static_cast<unsigned>(queries.size()));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (unsigned i = 0; i < threads; ++i) pool.emplace_back(worker);
    }
    if (fatal) std::rethrow_exception(fatal);

    for (const auto& e : errors)
        if (!e.empty()) diag.row_errors.push_back(e);
    for (const auto& r : result.rows)
        if (std::isfinite(r.y) && !(r.delta < r.y / r.x)) ++diag.delta_ratio_violations;
    return result;
}

inline SweepResult run_sweep(const ExperimentConfig& cfg) { return run_sweep(load_dataset(cfg.source), cfg); }

struct DirectionStats {
    double toward = 0;
    double away = 0;
    double boundary = 0;
    std::size_t total = 0;
};

inline DirectionStats direction_stats(std::span<const SweepRow> rows) {
    require(!rows.empty(), "direction statistics need at least one row");
    std::size_t toward = 0, away = 0, boundary = 0;
    for (const auto& r : rows) {
        switch (r.direction) {
            case Direction::toward: ++toward; break;
            case Direction::away: ++away; break;
            case Direction::boundary: ++boundary; break;
        }
    }
    const auto total = static_cast<double>(rows.size());
    return {toward / total, away / total, boundary / total, rows.size()};
}

/// Per-δ aggregate of a sweep: means and standard errors of the η-averaged
/// bounds (rows with at least one feasible η) and of the LID estimate.
struct DeltaSummary {
    double delta = 0;
    std::size_t rows = 0;
    std::size_t rows_with_bounds = 0;
    double lower_mean = 0, lower_se = 0;
    double lid_mean = 0, lid_se = 0;
    double upper_mean = 0, upper_se = 0;
};

inline std::vector<DeltaSummary> aggregate_by_delta(std::span<const SweepRow> rows) {
    std::map<double, std::vector<const SweepRow*>> groups;
    for (const auto& r : rows) groups[r.delta].push_back(&r);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<DeltaSummary> out;
    for (const auto& [delta, members] : groups) {
        std::vector<double> lo, hi, lid;
        for (const auto* r : members) {
            if (std::isfinite(r->lid_estimate)) lid.push_back(r->lid_estimate);
            if (r->n_feasible_eta > 0 && std::isfinite(r->lower_mean) && std::isfinite(r->upper_mean)) {
                lo.push_back(r->lower_mean);
                hi.push_back(r->upper_mean);
            }
        }
        DeltaSummary s;
        s.delta = delta;
        s.rows = members.size();
        s.rows_with_bounds = lo.size();
        s.lower_mean = lo.empty() ? nan : mean(lo);
        s.lower_se = standard_error(lo);
        s.upper_mean = hi.empty() ? nan : mean(hi);
        s.upper_se = standard_error(hi);
        s.lid_mean = lid.empty() ? nan : mean(lid);
        s.lid_se = standard_error(lid);
        out.push_back(s);
    }
    return out;
}

// --- CSV ---------------------------------------------------------------------

inline constexpr const char* kSweepHeader =
    "dataset,n,k,seed,query,delta,y,x,theta,direction,F_b_y,F_b_delta_x,lid_estimate,lower_mean,upper_mean,"
    "n_feasible_eta,instability_count";

/// RFC 4180 field quoting.
inline std::string csv_field(std::string_view s) {
    if (s.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(s);
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"') out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

/// Splits one RFC 4180 record (no embedded newlines).
inline std::vector<std::string> parse_csv_record(std::string_view line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    fields.back() += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                fields.back() += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            fields.emplace_back();
        } else {
            fields.back() += ch;
        }
    }
    if (quoted) fail(Errc::format, "unterminated quoted CSV field");
    return fields;
}

inline void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
    out << kSweepHeader << "\r\n";
    for (const auto& r : rows) {
        out << csv_field(r.dataset) << ',' << r.n << ',' << r.k << ',' << r.seed << ',' << r.query << ','
            << format_double(r.delta) << ',' << format_double(r.y) << ',' << format_double(r.x) << ','
            << format_double(r.theta) << ',' << to_string(r.direction) << ',' << format_double(r.f_y) << ','
            << format_double(r.f_delta_x) << ',' << format_double(r.lid_estimate) << ','
            << format_double(r.lower_mean) << ',' << format_double(r.upper_mean) << ',' << r.n_feasible_eta << ','
            << r.instability_count << "\r\n";
    }
}

inline void emit_csv(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
    write_sweep_csv(out, rows);
    if (!out) fail(Errc::io, "write to '" + path.string() + "' failed");
}

namespace detail {

inline double parse_double(const std::string& s) {
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail(Errc::format, "cannot parse number '" + s + "'");
    return v;
}

inline std::uint64_t parse_uint(const std::string& s) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) fail(Errc::format, "cannot parse integer '" + s + "'");
    return v;
}

inline Direction parse_direction(const std::string& s) {
    if (s == "toward") return Direction::toward;
    if (s == "away") return Direction::away;
    if (s == "boundary") return Direction::boundary;
    fail(Errc::format, "unknown direction '" + s + "'");
}

} // namespace detail

inline std::vector<SweepRow> read_sweep_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::io, "cannot open '" + path.string() + "'");
    std::string line;
    if (!std::getline(in, line)) fail(Errc::format, "'" + path.string() + "' is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSweepHeader) fail(Errc::format, "unexpected sweep CSV header");
    std::vector<SweepRow> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = parse_csv_record(line);
        if (f.size() != 17) fail(Errc::format, "sweep CSV row has " + std::to_string(f.size()) + " fields, expected 17");
        using detail::parse_double, detail::parse_uint;
        rows.push_back(SweepRow{f[0], parse_uint(f[1]), parse_uint(f[2]), parse_uint(f[3]), parse_uint(f[4]),
                                parse_double(f[5]), parse_double(f[6]), parse_double(f[7]), parse_double(f[8]),
                                detail::parse_direction(f[9]), parse_double(f[10]), parse_double(f[11]),
                                parse_double(f[12]), parse_double(f[13]), parse_double(f[14]), parse_uint(f[15]),
                                parse_uint(f[16])});
    }
    return rows;
}

inline constexpr const char* kPlotHeader =
    "delta,rows,rows_with_bounds,lower_mean,lower_se,lid_mean,lid_se,upper_mean,upper_se";

inline void emit_plotdata(std::span<const SweepRow> rows, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
    out << kPlotHeader << "\r\n";
    for (const auto& s : aggregate_by_delta(rows)) {
        out << format_double(s.delta) << ',' << s.rows << ',' << s.rows_with_bounds << ','
            << format_double(s.lower_mean) << ',' << format_double(s.lower_se) << ',' << format_double(s.lid_mean)
            << ',' << format_double(s.lid_se) << ',' << format_double(s.upper_mean) << ','
            << format_double(s.upper_se) << "\r\n";
    }
    if (!out) fail(Errc::io, "write to '" + path.string() + "' failed");
}

// --- direction files -----------------------------------------------------------

/// One unit vector per CSV row. Rows must have unit norm to 1e-6 and are
/// renormalized exactly.
inline std::vector<std::vector<double>> read_directions(const std::filesystem::path& path) {
    const Dataset raw = load_csv(path, false);
    std::vector<std::vector<double>> out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const auto r = raw.row(i);
        const double nrm = norm(r);
        if (std::abs(nrm - 1.0) > 1e-6)
            fail(Errc::format, "direction row " + std::to_string(i + 1) + " is not a unit vector");
        std::vector<double> v(r.begin(), r.end());
        for (double& t : v) t /= nrm;
        out.push_back(std::move(v));
    }
    return out;
}

inline void write_directions(std::span<const std::vector<double>> dirs, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
    for (const auto& d : dirs) {
        for (std::size_t j = 0; j < d.size(); ++j) {
            if (j) out << ',';
            out << format_double(d[j]);
        }
        out << '\n';
    }
    if (!out) fail(Errc::io, "write to '" + path.string() + "' failed");
}

} // namespace lidbounds
