// lidbounds: LID estimation and perturbation-bound sweeps from the command line.
//
//   lidbounds synth  --m 4 --d 50 --n 5000 --out synth.csv
//   lidbounds lid    --dataset synth.csv --format csv --k 100 --out lid.csv
//   lidbounds attack --dataset data/mnist --format mnist --n 1000 --nq 50 --out dirs.csv
//   lidbounds sweep  --dataset data/mnist --format mnist --n 1000 --k 100 --nq 50 --out sweep.csv
//   lidbounds stats  --in sweep.csv
//
// Exit codes: 0 success, 2 argument errors, 3 I/O or input-format errors,
// 1 anything else.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lidbounds/lidbounds.hpp"

namespace fs = std::filesystem;
using namespace lidbounds;

namespace {

constexpr int kExitArgument = 2;
constexpr int kExitIo = 3;

struct DataOptions {
    std::vector<std::string> dataset;
    std::string format = "csv";
    bool csv_no_labels = false;
    int m = 4;
    int d = 50;
    std::size_t synth_n = 0;
    std::string kind = "uniform";
    int classes = 2;
};

void add_data_options(CLI::App* cmd, DataOptions& o) {
    cmd->add_option("--dataset", o.dataset,
                    "Input path(s). mnist: images+labels files or a directory; cifar10: batch files or a "
                    "directory; csv: one file");
    cmd->add_option("--format", o.format, "mnist | cifar10 | csv | synth")
        ->check(CLI::IsMember({"mnist", "cifar10", "csv", "synth"}));
    cmd->add_flag("--csv-no-labels", o.csv_no_labels, "CSV has no trailing label column");
    cmd->add_option("--m", o.m, "synth: intrinsic dimension");
    cmd->add_option("--d", o.d, "synth: ambient dimension");
    cmd->add_option("--synth-n", o.synth_n, "synth: points generated (default: --n)");
    cmd->add_option("--kind", o.kind, "synth: uniform | gaussian")->check(CLI::IsMember({"uniform", "gaussian"}));
    cmd->add_option("--classes", o.classes, "synth: label bins along the first latent axis");
}

fs::path find_one(const fs::path& dir, std::string_view suffix) {
    std::vector<fs::path> hits;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().filename().string().ends_with(suffix)) hits.push_back(e.path());
    if (hits.size() != 1)
        fail(Errc::io, "expected exactly one '*" + std::string(suffix) + "' in '" + dir.string() + "'");
    return hits.front();
}

DatasetSource make_source(const DataOptions& o, std::size_t n, std::uint64_t seed) {
    DatasetSource src;
    const auto need_paths = [&] { require(!o.dataset.empty(), "--dataset is required for format " + o.format); };
    if (o.format == "mnist") {
        need_paths();
        src.format = DataFormat::mnist;
        if (o.dataset.size() == 1 && fs::is_directory(o.dataset[0])) {
            src.paths = {find_one(o.dataset[0], "images-idx3-ubyte"), find_one(o.dataset[0], "labels-idx1-ubyte")};
        } else {
            require(o.dataset.size() == 2, "mnist needs --dataset IMAGES --dataset LABELS or a directory");
            src.paths = {o.dataset[0], o.dataset[1]};
        }
    } else if (o.format == "cifar10") {
        need_paths();
        src.format = DataFormat::cifar10;
        for (const auto& p : o.dataset) {
            if (fs::is_directory(p)) {
                std::vector<fs::path> batches;
                for (const auto& e : fs::directory_iterator(p))
                    if (e.path().extension() == ".bin") batches.push_back(e.path());
                std::sort(batches.begin(), batches.end());
                src.paths.insert(src.paths.end(), batches.begin(), batches.end());
            } else {
                src.paths.emplace_back(p);
            }
        }
    } else if (o.format == "csv") {
        need_paths();
        require(o.dataset.size() == 1, "csv takes a single --dataset");
        src.format = DataFormat::csv;
        src.paths = {o.dataset[0]};
        src.csv_labels = !o.csv_no_labels;
    } else {
        src.format = DataFormat::synth;
        src.synth.intrinsic_dim = o.m;
        src.synth.ambient_dim = o.d;
        src.synth.n = o.synth_n ? o.synth_n : n;
        src.synth.kind = o.kind == "gaussian" ? SynthKind::gaussian_subspace : SynthKind::uniform_ball_subspace;
        src.synth.seed = seed;
        src.synth.n_classes = o.classes;
    }
    return src;
}

/// "0.25,0.5,1" or "start:stop:step".
std::vector<double> parse_delta_grid(const std::string& text) {
    std::vector<double> out;
    if (text.find(':') != std::string::npos) {
        double start = 0, stop = 0, step = 0;
        char c1 = 0, c2 = 0;
        std::istringstream in(text);
        if (!(in >> start >> c1 >> stop >> c2 >> step) || c1 != ':' || c2 != ':' || !(step > 0))
            fail(Errc::argument, "delta grid range must be start:stop:step with step > 0");
        const auto count = static_cast<long>(std::floor((stop - start) / step + 1e-9)) + 1;
        for (long i = 0; i < count; ++i) out.push_back(start + step * static_cast<double>(i));
        return out;
    }
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        std::size_t used = 0;
        double v = 0;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            fail(Errc::argument, "cannot parse delta value '" + item + "'");
        }
        if (used != item.size()) fail(Errc::argument, "cannot parse delta value '" + item + "'");
        out.push_back(v);
    }
    return out;
}

void write_metadata(const ExperimentConfig& cfg, const SweepResult& res, const fs::path& path) {
    nlohmann::json j;
    j["n"] = cfg.n;
    j["k"] = cfg.k;
    j["n_q"] = cfg.n_q;
    j["seed"] = cfg.seed;
    j["delta_grid"] = cfg.delta_grid;
    j["eta_grid_size"] = cfg.eta_grid_size;
    j["reference_rank"] = cfg.k / 2;
    j["kde_sample"] = "all distances from b to the n subsampled points";
    j["kde_sample_size"] = res.diagnostics.kde_sample_size;
    j["bandwidth_rule"] = "silverman";
    j["directions"] = cfg.directions ? "file" : "surrogate";
    if (res.diagnostics.surrogate_accuracy) j["surrogate_training_accuracy"] = *res.diagnostics.surrogate_accuracy;
    j["surrogate_epochs"] = cfg.surrogate_epochs;
    j["surrogate_lr"] = cfg.surrogate_lr;
    j["fallback_direction_queries"] = res.diagnostics.fallback_queries;
    j["row_errors"] = res.diagnostics.row_errors;
    j["delta_ratio_violations"] = res.diagnostics.delta_ratio_violations;
    std::size_t unstable = 0, no_bounds = 0;
    for (const auto& r : res.rows) {
        unstable += r.instability_count;
        no_bounds += r.n_feasible_eta == 0;
    }
    j["unstable_eta_excluded"] = unstable;
    j["rows_without_feasible_eta"] = no_bounds;
    std::ofstream out(path);
    if (!out) fail(Errc::io, "cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

void print_stats(std::span<const SweepRow> rows) {
    const auto ds = direction_stats(rows);
    std::cout << "rows " << ds.total << "\n"
              << "toward " << format_double(ds.toward) << "\n"
              << "away " << format_double(ds.away) << "\n"
              << "boundary " << format_double(ds.boundary) << "\n";
    std::cout << kPlotHeader << "\n";
    std::vector<double> deltas, lowers;
    for (const auto& s : aggregate_by_delta(rows)) {
        std::cout << format_double(s.delta) << ',' << s.rows << ',' << s.rows_with_bounds << ','
                  << format_double(s.lower_mean) << ',' << format_double(s.lower_se) << ','
                  << format_double(s.lid_mean) << ',' << format_double(s.lid_se) << ','
                  << format_double(s.upper_mean) << ',' << format_double(s.upper_se) << "\n";
        if (std::isfinite(s.lower_mean)) {
            deltas.push_back(s.delta);
            lowers.push_back(s.lower_mean);
        }
    }
    if (deltas.size() >= 2) std::cout << "spearman_delta_lower " << format_double(spearman(deltas, lowers)) << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local intrinsic dimensionality estimates and bounds under adversarial perturbation"};
    app.require_subcommand(1);

    DataOptions data;
    std::size_t n = 1000, k = 100, nq = 50, eta_grid = 50;
    std::uint64_t seed = 0;
    std::string out, delta_grid = "0.25:2.5:0.25", directions, plot, in;
    unsigned threads = 1;
    int epochs = 20;
    double lr = 0.1;

    auto* synth = app.add_subcommand("synth", "Generate points in a random m-dimensional subspace");
    synth->add_option("--m", data.m, "Intrinsic dimension")->required();
    synth->add_option("--d", data.d, "Ambient dimension")->required();
    synth->add_option("--n", n, "Number of points");
    synth->add_option("--kind", data.kind, "uniform | gaussian")->check(CLI::IsMember({"uniform", "gaussian"}));
    synth->add_option("--classes", data.classes, "Label bins along the first latent axis (0 = unlabeled)");
    synth->add_option("--seed", seed, "Random seed");
    synth->add_option("--out", out, "Output CSV")->required();

    auto* lid = app.add_subcommand("lid", "MLE LID estimate per point");
    add_data_options(lid, data);
    lid->add_option("--n", n, "Subsample size (0 = all)");
    lid->add_option("--k", k, "Neighborhood size");
    lid->add_option("--nq", nq, "Query points (0 = every point)");
    lid->add_option("--seed", seed, "Random seed");
    lid->add_option("--out", out, "Output CSV (default: stdout)");

    auto* attack = app.add_subcommand("attack", "Train the attack surrogate and write query directions");
    add_data_options(attack, data);
    attack->add_option("--n", n, "Subsample size");
    attack->add_option("--nq", nq, "Number of queries");
    attack->add_option("--seed", seed, "Random seed");
    attack->add_option("--epochs", epochs, "Surrogate training epochs");
    attack->add_option("--lr", lr, "Surrogate learning rate");
    attack->add_option("--out", out, "Directions CSV")->required();

    auto* sweep = app.add_subcommand("sweep", "Perturbation sweep over delta with averaged bounds");
    add_data_options(sweep, data);
    sweep->add_option("--n", n, "Subsample size");
    sweep->add_option("--k", k, "Neighborhood size");
    sweep->add_option("--nq", nq, "Number of queries");
    sweep->add_option("--delta-grid", delta_grid, "Comma list or start:stop:step");
    sweep->add_option("--eta-grid", eta_grid, "Eta candidates per row");
    sweep->add_option("--seed", seed, "Random seed");
    sweep->add_option("--directions", directions, "Directions CSV, one unit vector per query");
    sweep->add_option("--epochs", epochs, "Surrogate training epochs");
    sweep->add_option("--lr", lr, "Surrogate learning rate");
    sweep->add_option("--threads", threads, "Worker threads");
    sweep->add_option("--plot", plot, "Per-delta plot data (default: OUT with .plot.csv)");
    sweep->add_option("--out", out, "Sweep CSV")->required();

    auto* stats = app.add_subcommand("stats", "Direction fractions and per-delta means of a sweep CSV");
    stats->add_option("--in", in, "Sweep CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitArgument;
    }

    try {
        if (*synth) {
            SynthSpec spec;
            spec.intrinsic_dim = data.m;
            spec.ambient_dim = data.d;
            spec.n = n;
            spec.kind = data.kind == "gaussian" ? SynthKind::gaussian_subspace : SynthKind::uniform_ball_subspace;
            spec.seed = seed;
            spec.n_classes = data.classes;
            write_csv(generate_synthetic(spec), out);
        } else if (*lid) {
            Dataset full = load_dataset(make_source(data, n, seed));
            const Dataset sub = n == 0 || n >= full.size() ? full : subsample(full, n, derive_seed(seed, stream::subsample));
            std::vector<std::size_t> queries;
            if (nq == 0) {
                queries.resize(sub.size());
                std::iota(queries.begin(), queries.end(), std::size_t{0});
            } else {
                queries = select_queries(sub.size(), nq, seed);
            }
            std::ofstream file;
            if (!out.empty()) {
                file.open(out);
                if (!file) fail(Errc::io, "cannot write '" + out + "'");
            }
            std::ostream& os = out.empty() ? std::cout : file;
            os << "query,lid,r_max\n";
            for (std::size_t q : queries) {
                const auto est = mle_lid(knn(sub, q, k));
                os << q << ',' << format_double(est.value) << ',' << format_double(est.r_max) << '\n';
            }
        } else if (*attack) {
            ExperimentConfig cfg;
            cfg.n = n;
            cfg.n_q = nq;
            cfg.seed = seed;
            cfg.surrogate_epochs = epochs;
            cfg.surrogate_lr = lr;
            const Dataset full = load_dataset(make_source(data, n, seed));
            require(n >= 1 && n <= full.size(), "--n out of range");
            const Dataset sub = sweep_subsample(full, cfg);
            const auto queries = select_queries(sub.size(), nq, seed);
            const auto model = sweep_surrogate(sub, cfg);
            std::vector<std::size_t> fallbacks;
            const auto dirs = surrogate_directions(sub, model, queries, seed, &fallbacks);
            write_directions(dirs, out);
            std::cerr << "surrogate training accuracy " << format_double(accuracy(model, sub)) << ", "
                      << fallbacks.size() << " fallback direction(s)\n";
        } else if (*sweep) {
            ExperimentConfig cfg;
            cfg.source = make_source(data, n, seed);
            cfg.n = n;
            cfg.k = k;
            cfg.n_q = nq;
            cfg.delta_grid = parse_delta_grid(delta_grid);
            cfg.seed = seed;
            cfg.eta_grid_size = eta_grid;
            cfg.output = out;
            cfg.surrogate_epochs = epochs;
            cfg.surrogate_lr = lr;
            cfg.threads = threads;
            if (!directions.empty()) cfg.directions = read_directions(directions);
            const auto res = run_sweep(cfg);
            emit_csv(res.rows, out);
            emit_plotdata(res.rows, plot.empty() ? fs::path(out).replace_extension(".plot.csv") : fs::path(plot));
            write_metadata(cfg, res, fs::path(out).replace_extension(".meta.json"));
            print_stats(res.rows);
        } else if (*stats) {
            print_stats(read_sweep_csv(in));
        }
    } catch (const Error& e) {
        std::cerr << "lidbounds: " << e.what() << "\n";
        switch (e.code()) {
            case Errc::argument: return kExitArgument;
            case Errc::io:
            case Errc::format: return kExitIo;
            default: return 1;
        }
    } catch (const fs::filesystem_error& e) {
        std::cerr << "lidbounds: " << e.what() << "\n";
        return kExitIo;
    }
    return 0;
}
