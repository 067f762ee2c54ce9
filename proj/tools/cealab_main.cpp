// cealab command-line laboratory.
//
// Subcommands map onto the experiment recipes: `takeover` measures selection
// pressure (growth curves, takeover times), `sweep` runs replicated beta
// sweeps on QAP or NK problems, `pem` estimates per-mating-type improvement
// probabilities and the beta maximizing the improvement chance, and
// `plotdata` reshapes result files into plot-ready series.
//
// Every command accepts --recipe FILE (key = value lines, # comments;
// unknown keys are rejected) with explicit flags taking precedence, writes
// CSV files with one header row, and drops a .meta.txt sidecar echoing the
// effective settings. Data files are byte-identical across reruns with the
// same recipe and seed; timestamps live only in the sidecar.
//
// Exit codes: 0 success, 1 usage, 2 input error, 3 internal invariant
// violation.

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <CLI11.hpp>

#include "cealab/cealab.hpp"

namespace fs = std::filesystem;
using namespace cealab;

namespace {

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

GridShape parse_grid(const std::string& text) {
    const auto x = text.find('x');
    if (x == std::string::npos)
        throw InputError("grid must look like WIDTHxHEIGHT, got \"" + text + "\"");
    try {
        const auto w = std::uint32_t(io::parse_u64(text.substr(0, x)));
        const auto h = std::uint32_t(io::parse_u64(text.substr(x + 1)));
        return GridShape(w, h);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
}

/// "a:b:s" (inclusive endpoints) or a comma-separated list of values.
std::vector<double> parse_beta_values(const std::string& text) {
    std::vector<double> betas;
    if (text.find(':') != std::string::npos) {
        const auto c1 = text.find(':');
        const auto c2 = text.find(':', c1 + 1);
        if (c2 == std::string::npos)
            throw InputError("beta grid must look like start:stop:step, got \"" + text + "\"");
        const double start = io::parse_double(text.substr(0, c1));
        const double stop = io::parse_double(text.substr(c1 + 1, c2 - c1 - 1));
        const double step = io::parse_double(text.substr(c2 + 1));
        if (step <= 0.0 || stop < start)
            throw InputError("beta grid needs step > 0 and stop >= start");
        const auto count = std::size_t((stop - start) / step + 1e-9) + 1;
        for (std::size_t i = 0; i < count; ++i)
            betas.push_back(start + double(i) * step);
    } else {
        std::size_t pos = 0;
        while (pos <= text.size()) {
            const auto comma = std::min(text.find(',', pos), text.size());
            betas.push_back(io::parse_double(text.substr(pos, comma - pos)));
            pos = comma + 1;
        }
    }
    for (const double b : betas)
        if (!(b >= 0.0 && b <= 1.0))
            throw InputError("beta " + io::format_double(b) + " outside [0,1]");
    if (betas.empty())
        throw InputError("empty beta list");
    return betas;
}

fs::path resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty())
        return flag_value;
    if (const char* env = std::getenv("CEALAB_OUT"); env && *env)
        return env;
    return "out";
}

std::ofstream open_output(const fs::path& dir, const std::string& name) {
    fs::create_directories(dir);
    std::ofstream out(dir / name, std::ios::trunc);
    if (!out)
        throw InputError("cannot write " + (dir / name).string());
    return out;
}

// ---------------------------------------------------------------------------
// Problem binding
// ---------------------------------------------------------------------------

using ProblemHolder = std::variant<problems::QapInstance, problems::NkLandscape>;

struct ProblemFlags {
    std::string qap_path;
    std::string nk_inline; // "N,K,kind,seed"
    std::string nk_file;
    std::string save_nk;

    void add_to(CLI::App& cmd) {
        cmd.add_option("--qap", qap_path, "QAP instance file (QAPLIB layout)");
        cmd.add_option("--nk", nk_inline, "generate an NK landscape: N,K,kind,seed");
        cmd.add_option("--nk-file", nk_file, "load an NK landscape file");
        cmd.add_option("--save-nk", save_nk, "persist the generated NK landscape to this file");
    }

    ProblemHolder load(io::KeyValues& meta) const {
        const int given = int(!qap_path.empty()) + int(!nk_inline.empty()) + int(!nk_file.empty());
        if (given != 1)
            throw InputError("specify exactly one of --qap, --nk, --nk-file");
        if (!qap_path.empty()) {
            std::ifstream in(qap_path);
            if (!in)
                throw InputError("cannot read QAP instance " + qap_path);
            meta["problem"] = "qap:" + qap_path;
            return problems::qap_load(in, fs::path(qap_path).stem().string());
        }
        if (!nk_file.empty()) {
            std::ifstream in(nk_file);
            if (!in)
                throw InputError("cannot read NK landscape " + nk_file);
            meta["problem"] = "nk-file:" + nk_file;
            return problems::nk_load(in);
        }
        // N,K,kind,seed
        std::vector<std::string> parts;
        std::size_t pos = 0;
        while (pos <= nk_inline.size()) {
            const auto comma = std::min(nk_inline.find(',', pos), nk_inline.size());
            parts.push_back(nk_inline.substr(pos, comma - pos));
            pos = comma + 1;
        }
        if (parts.size() != 4)
            throw InputError("--nk expects N,K,kind,seed, got \"" + nk_inline + "\"");
        auto L = problems::nk_generate(std::uint32_t(io::parse_u64(parts[0])),
                                       std::uint32_t(io::parse_u64(parts[1])),
                                       problems::nk_neighborhood_from_string(parts[2]),
                                       io::parse_u64(parts[3]));
        meta["problem"] = "nk:" + nk_inline;
        if (!save_nk.empty()) {
            std::ofstream out(save_nk, std::ios::trunc);
            if (!out)
                throw InputError("cannot write NK landscape " + save_nk);
            problems::nk_save(L, out);
        }
        return L;
    }
};

template <typename Fn>
auto with_model(const ProblemHolder& problem, Fn&& fn) {
    if (std::holds_alternative<problems::QapInstance>(problem))
        return fn(problems::QapModel(std::get<problems::QapInstance>(problem)), false);
    return fn(problems::NkModel(std::get<problems::NkLandscape>(problem)), true);
}

// ---------------------------------------------------------------------------
// takeover
// ---------------------------------------------------------------------------

struct TakeoverFlags {
    std::string grid;
    double beta = -1.0;
    std::string beta_grid;
    std::uint32_t replicates = 100;
    std::uint32_t cap = 0;
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = default_worker_count();
};

void cmd_takeover(const TakeoverFlags& flags) {
    const GridShape shape = parse_grid(flags.grid);
    std::vector<double> betas;
    if (flags.beta >= 0.0 && !flags.beta_grid.empty())
        throw InputError("give either --beta or --beta-grid, not both");
    if (flags.beta >= 0.0)
        betas.push_back(flags.beta);
    else if (!flags.beta_grid.empty())
        betas = parse_beta_values(flags.beta_grid);
    else
        throw InputError("takeover needs --beta or --beta-grid");

    TakeoverConfig cfg;
    cfg.shape = shape;
    cfg.replicates = flags.replicates;
    cfg.max_generations = flags.cap;
    cfg.seed = flags.seed;
    cfg.workers = flags.threads;
    const auto sweep = takeover_sweep(betas, cfg);

    const fs::path dir = resolve_out_dir(flags.out);
    {
        auto out = open_output(dir, "curves.csv");
        io::CsvWriter csv(out, {"beta", "replicate", "t", "n", "dn"});
        for (std::size_t b = 0; b < betas.size(); ++b)
            for (std::uint32_t r = 0; r < cfg.replicates; ++r) {
                const auto& curve = sweep.curves[b][r];
                for (std::size_t t = 0; t < curve.counts.size(); ++t) {
                    const std::int64_t dn =
                        t == 0 ? 0
                               : std::int64_t(curve.counts[t]) - std::int64_t(curve.counts[t - 1]);
                    csv.row({io::format_double(betas[b]), std::to_string(r), std::to_string(t),
                             std::to_string(curve.counts[t]), std::to_string(dn)});
                }
            }
    }
    {
        auto out = open_output(dir, "takeover.csv");
        io::CsvWriter csv(out, {"beta", "replicates", "defined", "undefined", "mean_takeover",
                                "sd_takeover"});
        for (const auto& row : sweep.rows) {
            const std::uint32_t defined = row.replicates - row.undefined_count;
            csv.row({io::format_double(row.beta), std::to_string(row.replicates),
                     std::to_string(defined), std::to_string(row.undefined_count),
                     defined > 0 ? io::format_double(row.mean_takeover) : "",
                     defined > 0 ? io::format_double(row.sd_takeover) : ""});
        }
    }
    io::write_metadata(dir / "takeover.meta.txt",
                       {{"kind", "takeover"},
                        {"grid", flags.grid},
                        {"betas", flags.beta >= 0.0 ? io::format_double(flags.beta)
                                                    : flags.beta_grid},
                        {"replicates", std::to_string(flags.replicates)},
                        {"cap", std::to_string(flags.cap)},
                        {"seed", std::to_string(flags.seed)},
                        {"version", kVersion}},
                       utc_timestamp());

    for (const auto& row : sweep.rows) {
        std::cout << "beta " << io::format_double(row.beta) << ": ";
        if (row.undefined_count == row.replicates)
            std::cout << "takeover undefined for all replicates (cap " << cfg.cap() << ")\n";
        else
            std::cout << "mean takeover " << io::format_double(row.mean_takeover) << " (sd "
                      << io::format_double(row.sd_takeover) << ", undefined "
                      << row.undefined_count << "/" << row.replicates << ")\n";
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepFlags {
    ProblemFlags problem;
    std::string betas;
    std::string grid = "20x20";
    std::uint32_t replicates = 30;
    std::uint32_t generations = 1500;
    double crossover_rate = 1.0;
    std::uint64_t seed = 0;
    std::string out;
    std::string significance; // "beta_a,beta_b"
    bool resume = false;
    unsigned threads = default_worker_count();
};

std::vector<SweepRun> load_partial_runs(const fs::path& path, const SweepSpec& spec) {
    if (!fs::exists(path))
        return {};
    const auto csv = io::read_csv_file(path);
    const auto beta_col = csv.column("beta");
    const auto rep_col = csv.column("replicate");
    const auto seed_col = csv.column("seed");
    const auto fit_col = csv.column("final_fitness");
    const auto gen_col = csv.column("generations_to_best");
    std::vector<SweepRun> runs;
    for (const auto& row : csv.rows) {
        SweepRun run;
        run.beta = io::parse_double(row[beta_col]);
        run.replicate = std::uint32_t(io::parse_u64(row[rep_col]));
        run.seed = io::parse_u64(row[seed_col]);
        run.final_fitness = io::parse_double(row[fit_col]);
        run.generations_to_best = std::uint32_t(io::parse_u64(row[gen_col]));
        if (run.seed != replicate_seed(spec.base_seed, run.beta, run.replicate))
            throw InputError(path.string() + ": seed of (beta " + row[beta_col] + ", replicate " +
                             row[rep_col] + ") does not match this recipe; refusing to resume");
        runs.push_back(run);
    }
    return runs;
}

std::vector<std::string> sweep_run_cells(const SweepRun& run) {
    return {io::format_double(run.beta), std::to_string(run.replicate), std::to_string(run.seed),
            io::format_double(run.final_fitness), std::to_string(run.generations_to_best)};
}

void cmd_sweep(const SweepFlags& flags) {
    SweepSpec spec;
    spec.betas = parse_beta_values(flags.betas);
    spec.replicates = flags.replicates;
    spec.max_generations = flags.generations;
    spec.crossover_rate = flags.crossover_rate;
    spec.shape = parse_grid(flags.grid);
    spec.base_seed = flags.seed;
    spec.workers = flags.threads;

    io::KeyValues meta{{"kind", "sweep"},
                       {"betas", flags.betas},
                       {"grid", flags.grid},
                       {"replicates", std::to_string(flags.replicates)},
                       {"generations", std::to_string(flags.generations)},
                       {"crossover_rate", io::format_double(flags.crossover_rate)},
                       {"seed", std::to_string(flags.seed)},
                       {"version", kVersion}};
    const ProblemHolder problem = flags.problem.load(meta);

    const fs::path dir = resolve_out_dir(flags.out);
    const fs::path partial_path = dir / "runs.partial.csv";

    std::vector<SweepRun> done;
    if (flags.resume)
        done = load_partial_runs(partial_path, spec);
    else if (fs::exists(partial_path))
        fs::remove(partial_path);

    // every finished run is appended and flushed immediately, so an
    // interrupted sweep can resume from the completed cells
    fs::create_directories(dir);
    std::ofstream partial;
    if (done.empty() && !fs::exists(partial_path)) {
        partial.open(partial_path, std::ios::trunc);
        partial << "beta,replicate,seed,final_fitness,generations_to_best\n";
    } else {
        partial.open(partial_path, std::ios::app);
    }
    std::mutex partial_mutex;
    const auto on_complete = [&](const SweepRun& run) {
        std::lock_guard lock(partial_mutex);
        const auto cells = sweep_run_cells(run);
        for (std::size_t i = 0; i < cells.size(); ++i)
            partial << (i ? "," : "") << cells[i];
        partial << '\n' << std::flush;
    };

    const auto [result, maximize] = with_model(problem, [&](const auto& model, bool max_sense) {
        return std::pair{run_sweep(model, spec, done, on_complete), max_sense};
    });
    partial.close();

    {
        auto out = open_output(dir, "runs.csv");
        io::CsvWriter csv(out, {"beta", "replicate", "seed", "final_fitness",
                                "generations_to_best"});
        for (const auto& run : result.runs)
            csv.row(sweep_run_cells(run));
    }
    {
        auto out = open_output(dir, "summary.csv");
        io::CsvWriter csv(out, {"beta", "n", "mean", "std", "best"});
        for (const auto& row : summarize_sweep(result, maximize))
            csv.row({io::format_double(row.beta), std::to_string(row.n),
                     io::format_double(row.mean), io::format_double(row.sd),
                     io::format_double(row.best)});
    }
    if (!flags.significance.empty()) {
        const auto pair = parse_beta_values(flags.significance);
        if (pair.size() != 2)
            throw InputError("--significance expects two betas, got \"" + flags.significance +
                             "\"");
        const auto report = compare_settings(result, pair[0], pair[1], maximize);
        auto out = open_output(dir, "significance.csv");
        io::CsvWriter csv(out,
                          {"beta_a", "beta_b", "n_a", "n_b", "u", "p_value", "better_beta"});
        const std::string better =
            report.direction > 0 ? io::format_double(report.beta_a)
                                 : (report.direction < 0 ? io::format_double(report.beta_b) : "");
        csv.row({io::format_double(report.beta_a), io::format_double(report.beta_b),
                 std::to_string(report.n_a), std::to_string(report.n_b),
                 io::format_double(report.u), io::format_double(report.p_value), better});
        std::cout << "significance: p = " << io::format_double(report.p_value)
                  << (better.empty() ? " (no direction)" : " favoring beta " + better) << '\n';
        meta["significance"] = flags.significance;
    }
    fs::remove(partial_path);
    io::write_metadata(dir / "sweep.meta.txt", meta, utc_timestamp());

    for (const auto& row : summarize_sweep(result, maximize))
        std::cout << "beta " << io::format_double(row.beta) << ": mean "
                  << io::format_double(row.mean) << " sd " << io::format_double(row.sd)
                  << " best " << io::format_double(row.best) << " (n=" << row.n << ")\n";
}

// ---------------------------------------------------------------------------
// pem
// ---------------------------------------------------------------------------

struct PemFlags {
    ProblemFlags problem;
    std::string sigma_table_path;
    bool build_sigma = false;
    std::string sigma_betas = "0:1:0.05";
    std::uint32_t sigma_horizon = 100;
    std::uint32_t sigma_replicates = 200;
    bool refine = false;
    std::string beta_grid; // restrict the argmax search; must be covered by the table
    double run_beta = 0.2;
    std::uint32_t runs = 100;
    std::uint32_t generations = 1500;
    std::uint32_t window = 50;
    std::string grid = "20x20";
    std::string prior = "1,1";
    std::uint64_t seed = 0;
    std::string out;
    unsigned threads = default_worker_count();
};

void cmd_pem(const PemFlags& flags) {
    const GridShape shape = parse_grid(flags.grid);
    io::KeyValues meta{{"kind", "pem"},
                       {"grid", flags.grid},
                       {"run_beta", io::format_double(flags.run_beta)},
                       {"runs", std::to_string(flags.runs)},
                       {"generations", std::to_string(flags.generations)},
                       {"window", std::to_string(flags.window)},
                       {"prior", flags.prior},
                       {"seed", std::to_string(flags.seed)},
                       {"version", kVersion}};
    const ProblemHolder problem = flags.problem.load(meta);

    const auto prior_values = parse_beta_values(flags.prior); // reuse the comma parser
    if (prior_values.size() != 2)
        throw InputError("--prior expects a,b");
    BetaPrior prior;
    try {
        prior = BetaPrior(prior_values[0], prior_values[1]);
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }

    if (flags.build_sigma == !flags.sigma_table_path.empty())
        throw InputError("give exactly one of --build-sigma or --sigma-table FILE");
    if (flags.refine && !flags.build_sigma)
        throw ConfigError("--refine needs --build-sigma (a fixed table cannot grow rows)");

    const std::uint64_t sigma_seed = derive_seed(flags.seed, {0x5167});
    SigmaTable table;
    if (flags.build_sigma) {
        table = build_sigma_table(parse_beta_values(flags.sigma_betas), flags.sigma_horizon, shape,
                                  flags.sigma_replicates, sigma_seed);
        meta["sigma"] = "built:" + flags.sigma_betas + " T=" + std::to_string(flags.sigma_horizon) +
                        " replicates=" + std::to_string(flags.sigma_replicates);
    } else {
        table = io::read_sigma_table_file(flags.sigma_table_path);
        meta["sigma"] = "file:" + flags.sigma_table_path;
    }
    for (const auto& row : table.rows())
        if (row.lambda != shape.size())
            throw ConfigError("sigma table was built for lambda = " + std::to_string(row.lambda) +
                              ", this experiment uses lambda = " + std::to_string(shape.size()));

    if (!flags.beta_grid.empty()) {
        std::vector<SigmaRow> subset;
        for (const double beta : parse_beta_values(flags.beta_grid)) {
            const auto* row = table.find(beta);
            if (!row)
                throw ConfigError("sigma table does not cover beta = " + io::format_double(beta));
            subset.push_back(*row);
        }
        table = SigmaTable(std::move(subset));
        meta["beta_grid"] = flags.beta_grid;
    }

    // instrumented runs at the fixed run beta
    std::vector<RunObservations> observations(flags.runs);
    with_model(problem, [&](const auto& model, bool) {
        parallel_for(flags.runs, flags.threads, [&](std::size_t r) {
            EngineConfig cfg;
            cfg.beta = flags.run_beta;
            cfg.max_generations = flags.generations;
            cfg.seed = replicate_seed(flags.seed, flags.run_beta, std::uint32_t(r));
            CellularEngine<std::remove_cvref_t<decltype(model)>> engine(model, shape, cfg);
            observations[r] = observe_run(engine.run());
        });
        return 0;
    });

    // the beta* pipeline uses the running (online) posterior, which stays
    // informed after the population converges; the per-window series is
    // emitted alongside for inspection
    auto series = estimate_pij_running(observations, flags.window, prior);
    const auto window_series = estimate_pij(observations, flags.window, prior);
    auto points = optimal_beta(series, table);

    if (flags.refine) {
        // refine the grid to 0.01 steps around the modal coarse optimum
        std::map<double, std::size_t> votes;
        for (const auto& pt : points)
            ++votes[pt.beta_star];
        double modal = points.empty() ? 0.0 : points.front().beta_star;
        std::size_t best_votes = 0;
        for (const auto& [beta, n] : votes)
            if (n > best_votes) {
                best_votes = n;
                modal = beta;
            }
        std::vector<double> extra;
        for (int i = -5; i <= 5; ++i) {
            const double beta = modal + 0.01 * double(i);
            if (beta >= 0.0 && beta <= 1.0 && !table.find(beta))
                extra.push_back(beta);
        }
        if (!extra.empty()) {
            table.merge(build_sigma_table(extra, flags.sigma_horizon, shape,
                                          flags.sigma_replicates, sigma_seed));
            points = optimal_beta(series, table);
            meta["refined_around"] = io::format_double(modal);
        }
    }

    const fs::path dir = resolve_out_dir(flags.out);
    const auto write_series = [&](const std::string& name,
                                  const std::vector<WindowEstimate>& estimates) {
        auto out = open_output(dir, name);
        io::CsvWriter csv(out, {"window_start", "p00", "p01", "p11", "trials00", "trials01",
                                "trials11"});
        for (const auto& w : estimates)
            csv.row({std::to_string(w.window_start), io::format_double(w.probs.p00),
                     io::format_double(w.probs.p01), io::format_double(w.probs.p11),
                     std::to_string(w.trials[0]), std::to_string(w.trials[1]),
                     std::to_string(w.trials[2])});
    };
    write_series("pij.csv", series);
    write_series("pij_window.csv", window_series);
    {
        auto out = open_output(dir, "betastar.csv");
        io::CsvWriter csv(out,
                          {"window_start", "beta_star", "eq1_residual", "ties", "low_confidence"});
        std::size_t tied_windows = 0;
        for (const auto& pt : points) {
            csv.row({std::to_string(pt.window_start), io::format_double(pt.beta_star),
                     io::format_double(pt.eq1_residual), std::to_string(pt.tied_betas.size()),
                     std::to_string(int(pt.low_confidence))});
            tied_windows += pt.tied_betas.size() > 1;
        }
        if (tied_windows > 0)
            std::cerr << "warning: " << tied_windows
                      << " window(s) have several betas tied at the maximum probability\n";
    }
    {
        auto out = open_output(dir, "sigma.csv");
        io::write_sigma_table(table, out);
    }
    io::write_metadata(dir / "pem.meta.txt", meta, utc_timestamp());

    for (const auto& pt : points)
        std::cout << "window " << pt.window_start << ": beta* = "
                  << io::format_double(pt.beta_star)
                  << (pt.low_confidence ? " (low confidence: no improvements observed)" : "")
                  << '\n';
}

// ---------------------------------------------------------------------------
// plotdata
// ---------------------------------------------------------------------------

struct PlotFlags {
    std::string kind;
    std::string in;
    std::string out;
};

void cmd_plotdata(const PlotFlags& flags) {
    const fs::path in_dir = flags.in.empty() ? resolve_out_dir("") : fs::path(flags.in);
    const fs::path dir = resolve_out_dir(flags.out);

    const auto write_meta = [&](const std::string& name) {
        io::write_metadata(dir / (name + ".meta.txt"),
                           {{"kind", "plotdata"}, {"series", flags.kind},
                            {"input", in_dir.string()}, {"version", kVersion}},
                           utc_timestamp());
    };

    if (flags.kind == "takeover-mean") {
        const auto csv = io::read_csv_file(in_dir / "takeover.csv");
        const auto beta = csv.column("beta");
        const auto mean = csv.column("mean_takeover");
        auto out = open_output(dir, "plot_takeover_mean.csv");
        io::CsvWriter w(out, {"beta", "mean_takeover"});
        for (const auto& row : csv.rows)
            if (!row[mean].empty())
                w.row({row[beta], row[mean]});
        write_meta("plot_takeover_mean");
    } else if (flags.kind == "growth") {
        const auto csv = io::read_csv_file(in_dir / "curves.csv");
        const auto beta = csv.column("beta");
        const auto t = csv.column("t");
        const auto n = csv.column("n");
        const auto dn = csv.column("dn");
        std::map<std::pair<double, std::uint64_t>, std::pair<std::vector<double>, std::vector<double>>>
            values;
        for (const auto& row : csv.rows) {
            const auto key = std::pair{io::parse_double(row[beta]), io::parse_u64(row[t])};
            values[key].first.push_back(io::parse_double(row[n]));
            values[key].second.push_back(io::parse_double(row[dn]));
        }
        auto out = open_output(dir, "plot_growth.csv");
        io::CsvWriter w(out, {"beta", "t", "n_mean", "dn_mean"});
        for (const auto& [key, pair] : values)
            w.row({io::format_double(key.first), std::to_string(key.second),
                   io::format_double(stats::summarize(pair.first).mean),
                   io::format_double(stats::summarize(pair.second).mean)});
        write_meta("plot_growth");
    } else if (flags.kind == "sweep") {
        const auto csv = io::read_csv_file(in_dir / "summary.csv");
        const auto beta = csv.column("beta");
        const auto mean = csv.column("mean");
        const auto sd = csv.column("std");
        auto out = open_output(dir, "plot_sweep.csv");
        io::CsvWriter w(out, {"beta", "mean", "std"});
        for (const auto& row : csv.rows)
            w.row({row[beta], row[mean], row[sd]});
        write_meta("plot_sweep");
    } else if (flags.kind == "pij") {
        const auto csv = io::read_csv_file(in_dir / "pij.csv");
        const auto ws = csv.column("window_start");
        const auto p00 = csv.column("p00");
        const auto p01 = csv.column("p01");
        const auto p11 = csv.column("p11");
        auto out = open_output(dir, "plot_pij.csv");
        io::CsvWriter w(out, {"window_start", "p00", "p01", "p11"});
        for (const auto& row : csv.rows)
            w.row({row[ws], row[p00], row[p01], row[p11]});
        write_meta("plot_pij");
    } else if (flags.kind == "betastar") {
        const auto csv = io::read_csv_file(in_dir / "betastar.csv");
        const auto ws = csv.column("window_start");
        const auto bs = csv.column("beta_star");
        auto out = open_output(dir, "plot_betastar.csv");
        io::CsvWriter w(out, {"window_start", "beta_star"});
        for (const auto& row : csv.rows)
            w.row({row[ws], row[bs]});
        write_meta("plot_betastar");
    } else {
        throw InputError("unknown plotdata kind \"" + flags.kind +
                         "\" (takeover-mean|growth|sweep|pij|betastar)");
    }
}

// ---------------------------------------------------------------------------

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Recipe support: key = value lines map onto the long flag names of the
/// subcommand, explicit flags win, unknown keys are rejected, and a `kind`
/// key must match the subcommand. Implemented by expanding the recipe into
/// synthetic arguments ahead of the explicit ones.
std::vector<std::string> expand_recipe(const CLI::App& app, int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);

    const CLI::App* sub = nullptr;
    std::size_t recipe_at = args.size();
    std::string recipe_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!sub && !args[i].starts_with("-")) {
            for (const auto* candidate : app.get_subcommands({}))
                if (candidate->get_name() == args[i])
                    sub = candidate;
            continue;
        }
        if (args[i] == "--recipe" && i + 1 < args.size()) {
            recipe_at = i;
            recipe_path = args[i + 1];
        } else if (args[i].starts_with("--recipe=")) {
            recipe_at = i;
            recipe_path = args[i].substr(9);
        }
    }
    if (recipe_path.empty())
        return args;
    if (!sub)
        throw UsageError("--recipe needs a subcommand");

    // drop the --recipe tokens and remember which flags were set explicitly
    std::vector<std::string> explicit_args;
    std::set<std::string> given;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i == recipe_at) {
            i += args[i] == "--recipe" ? 1 : 0;
            continue;
        }
        explicit_args.push_back(args[i]);
        if (args[i].starts_with("--"))
            given.insert(args[i].substr(0, std::min(args[i].find('='), args[i].size())));
    }

    std::vector<std::string> expanded{sub->get_name()};
    for (const auto& [key, value] : io::read_recipe_file(recipe_path)) {
        if (key == "kind") {
            if (value != sub->get_name())
                throw UsageError("recipe kind \"" + value + "\" does not match command \"" +
                                 sub->get_name() + "\"");
            continue;
        }
        const std::string flag = "--" + key;
        const auto* option = sub->get_option_no_throw(flag);
        if (!option)
            throw UsageError("recipe key \"" + key + "\" is not a flag of " + sub->get_name());
        if (given.contains(flag))
            continue; // explicit flag wins
        if (option->get_expected_min() == 0) {
            // boolean flag
            if (value == "true" || value == "1" || value == "yes" || value == "on")
                expanded.push_back(flag);
            else if (value != "false" && value != "0" && value != "no" && value != "off")
                throw UsageError("recipe key \"" + key + "\" expects a boolean, got \"" + value +
                                 "\"");
        } else {
            expanded.push_back(flag);
            expanded.push_back(value);
        }
    }
    // the subcommand name leads, so append the explicit args minus that name
    bool skipped_name = false;
    for (const auto& arg : explicit_args) {
        if (!skipped_name && arg == sub->get_name()) {
            skipped_name = true;
            continue;
        }
        expanded.push_back(arg);
    }
    return expanded;
}

void add_recipe_flag(CLI::App* cmd) {
    // parsed manually in expand_recipe; declared so help shows it and CLI11
    // accepts the token when it survives expansion
    cmd->add_option("--recipe")
        ->description("recipe file with key = value lines (flags take precedence)")
        ->expected(1);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cellular evolutionary algorithm laboratory"};
    app.require_subcommand(1);

    TakeoverFlags takeover;
    auto* cmd_tk = app.add_subcommand("takeover",
                                      "growth curves and takeover times under selection only");
    cmd_tk->add_option("--grid", takeover.grid, "grid WIDTHxHEIGHT")->required();
    cmd_tk->add_option("--beta", takeover.beta, "single beta value");
    cmd_tk->add_option("--beta-grid", takeover.beta_grid, "beta grid start:stop:step");
    cmd_tk->add_option("--replicates", takeover.replicates, "replicates per beta");
    cmd_tk->add_option("--cap", takeover.cap, "generation cap (0 = 10 * lambda)");
    cmd_tk->add_option("--seed", takeover.seed, "base seed");
    cmd_tk->add_option("--out", takeover.out, "output directory (default $CEALAB_OUT or ./out)");
    cmd_tk->add_option("--threads", takeover.threads, "worker threads");
    add_recipe_flag(cmd_tk);
    cmd_tk->callback([&] { cmd_takeover(takeover); });

    SweepFlags sweep;
    auto* cmd_sw = app.add_subcommand("sweep", "replicated beta sweep on a problem instance");
    sweep.problem.add_to(*cmd_sw);
    cmd_sw->add_option("--betas", sweep.betas, "beta list a,b,... or grid start:stop:step")
        ->required();
    cmd_sw->add_option("--grid", sweep.grid, "grid WIDTHxHEIGHT");
    cmd_sw->add_option("--replicates", sweep.replicates, "replicates per beta");
    cmd_sw->add_option("--generations", sweep.generations, "generations per run");
    cmd_sw->add_option("--crossover-rate", sweep.crossover_rate, "crossover application rate");
    cmd_sw->add_option("--seed", sweep.seed, "base seed");
    cmd_sw->add_option("--out", sweep.out, "output directory");
    cmd_sw->add_option("--significance", sweep.significance,
                       "compare two betas: beta_a,beta_b (Mann-Whitney)");
    cmd_sw->add_flag("--resume", sweep.resume, "complete missing cells of an interrupted sweep");
    cmd_sw->add_option("--threads", sweep.threads, "worker threads");
    add_recipe_flag(cmd_sw);
    cmd_sw->callback([&] { cmd_sweep(sweep); });

    PemFlags pem;
    auto* cmd_pm = app.add_subcommand(
        "pem", "improvement-probability estimation and optimal-beta trajectory");
    pem.problem.add_to(*cmd_pm);
    cmd_pm->add_option("--sigma-table", pem.sigma_table_path, "load a sigma table file");
    cmd_pm->add_flag("--build-sigma", pem.build_sigma, "build the sigma table from scratch");
    cmd_pm->add_option("--sigma-betas", pem.sigma_betas, "betas for a built table");
    cmd_pm->add_option("--sigma-horizon", pem.sigma_horizon, "sigma horizon T");
    cmd_pm->add_option("--sigma-replicates", pem.sigma_replicates, "replicates per sigma beta");
    cmd_pm->add_flag("--refine", pem.refine, "refine the beta grid to 0.01 around the optimum");
    cmd_pm->add_option("--beta-grid", pem.beta_grid,
                       "restrict the argmax search to these betas (must be in the table)");
    cmd_pm->add_option("--run-beta", pem.run_beta, "beta of the instrumented runs");
    cmd_pm->add_option("--runs", pem.runs, "instrumented runs");
    cmd_pm->add_option("--generations", pem.generations, "generations per run");
    cmd_pm->add_option("--window", pem.window, "estimation window width (generations)");
    cmd_pm->add_option("--grid", pem.grid, "grid WIDTHxHEIGHT");
    cmd_pm->add_option("--prior", pem.prior, "Beta prior a,b");
    cmd_pm->add_option("--seed", pem.seed, "base seed");
    cmd_pm->add_option("--out", pem.out, "output directory");
    cmd_pm->add_option("--threads", pem.threads, "worker threads");
    add_recipe_flag(cmd_pm);
    cmd_pm->callback([&] { cmd_pem(pem); });

    PlotFlags plot;
    auto* cmd_pl = app.add_subcommand("plotdata", "reshape results into plot-ready series");
    cmd_pl->add_option("--kind", plot.kind, "takeover-mean|growth|sweep|pij|betastar")->required();
    cmd_pl->add_option("--in", plot.in, "directory holding the result files");
    cmd_pl->add_option("--out", plot.out, "output directory");
    cmd_pl->callback([&] { cmd_plotdata(plot); });

    try {
        auto args = expand_recipe(app, argc, argv);
        std::reverse(args.begin(), args.end()); // CLI11 consumes from the back
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
