#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "cealab/engine.hpp"
#include "cealab/io.hpp"
#include "cli_driver.hpp"

namespace fs = std::filesystem;
using cli_driver::run;
using cli_driver::slurp;

namespace {

fs::path fresh_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("cealab_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

} // namespace

TEST_CASE("missing required flags are usage errors") {
    REQUIRE(run("takeover --beta 0.5").exit_code == 1); // no --grid
    REQUIRE(run("").exit_code == 1);                    // no subcommand
    REQUIRE(run("plotdata --kind nope --in x --out y").exit_code == 2);
}

TEST_CASE("help exits cleanly") {
    REQUIRE(run("--help").exit_code == 0);
    REQUIRE(run("takeover --help").exit_code == 0);
}

TEST_CASE("takeover at beta 1 reports undefined takeover") {
    const auto dir = fresh_dir("tk_beta1");
    const auto r = run("takeover --grid 6x6 --beta 1 --cap 30 --replicates 3 --seed 5 --out " +
                       dir.string());
    REQUIRE(r.exit_code == 0);
    REQUIRE(r.output.find("undefined") != std::string::npos);

    const auto table = cealab::io::read_csv_file(dir / "takeover.csv");
    REQUIRE(table.rows.size() == 1);
    REQUIRE(table.rows[0][table.column("undefined")] == "3");
    REQUIRE(table.rows[0][table.column("mean_takeover")].empty());

    const auto curves = cealab::io::read_csv_file(dir / "curves.csv");
    for (const auto& row : curves.rows)
        REQUIRE(row[curves.column("n")] == "1");
}

TEST_CASE("takeover writes growth curves with rates and a summary") {
    const auto dir = fresh_dir("tk_small");
    const auto r = run("takeover --grid 6x6 --beta-grid 0:0.4:0.2 --replicates 4 --seed 3 --out " +
                       dir.string());
    REQUIRE(r.exit_code == 0);
    const auto summary = cealab::io::read_csv_file(dir / "takeover.csv");
    REQUIRE(summary.rows.size() == 3); // betas 0, 0.2, 0.4
    REQUIRE(summary.header ==
            std::vector<std::string>{"beta", "replicates", "defined", "undefined",
                                     "mean_takeover", "sd_takeover"});
    const auto curves = cealab::io::read_csv_file(dir / "curves.csv");
    REQUIRE(curves.column("dn") == 4);
    REQUIRE(fs::exists(dir / "takeover.meta.txt"));
}

TEST_CASE("identical recipes and seeds give byte-identical outputs") {
    const auto a = fresh_dir("tk_det_a");
    const auto b = fresh_dir("tk_det_b");
    const std::string args = "takeover --grid 6x6 --beta-grid 0:0.4:0.2 --replicates 3 --seed 11";
    REQUIRE(run(args + " --out " + a.string()).exit_code == 0);
    REQUIRE(run(args + " --out " + b.string()).exit_code == 0);
    REQUIRE(slurp(a / "curves.csv") == slurp(b / "curves.csv"));
    REQUIRE(slurp(a / "takeover.csv") == slurp(b / "takeover.csv"));
}

TEST_CASE("sweep runs NK problems end to end with a significance report") {
    const auto dir = fresh_dir("sw_nk");
    const auto r = run("sweep --nk 12,2,random,7 --betas 0.2,1 --grid 3x3 --replicates 3 "
                       "--generations 30 --seed 2 --significance 0.2,1 --out " +
                       dir.string());
    REQUIRE(r.exit_code == 0);
    const auto runs = cealab::io::read_csv_file(dir / "runs.csv");
    REQUIRE(runs.rows.size() == 6);
    const auto summary = cealab::io::read_csv_file(dir / "summary.csv");
    REQUIRE(summary.rows.size() == 2);
    REQUIRE(fs::exists(dir / "significance.csv"));
    REQUIRE(!fs::exists(dir / "runs.partial.csv")); // scratch file cleaned up

    const auto again = fresh_dir("sw_nk2");
    REQUIRE(run("sweep --nk 12,2,random,7 --betas 0.2,1 --grid 3x3 --replicates 3 "
                "--generations 30 --seed 2 --significance 0.2,1 --out " +
                again.string())
                .exit_code == 0);
    REQUIRE(slurp(dir / "runs.csv") == slurp(again / "runs.csv"));
}

TEST_CASE("sweep loads QAP instances and rejects unreadable paths") {
    const auto dir = fresh_dir("sw_qap");
    REQUIRE(run("sweep --qap " + std::string(CEALAB_DATA_DIR) +
                "/nug12.dat --betas 0.2 --grid 3x3 --replicates 2 --generations 10 --out " +
                dir.string())
                .exit_code == 0);
    const auto bad = run("sweep --qap /nonexistent.dat --betas 0.2 --out " + dir.string());
    REQUIRE(bad.exit_code == 2);
    REQUIRE(bad.output.find("/nonexistent.dat") != std::string::npos);
}

TEST_CASE("interrupted sweeps resume without recomputing finished cells") {
    const auto full_dir = fresh_dir("sw_full");
    const std::string base = "sweep --nk 12,2,random,7 --betas 0.2,1 --grid 3x3 --replicates 3 "
                             "--generations 30 --seed 2 --out ";
    REQUIRE(run(base + full_dir.string()).exit_code == 0);
    const auto full = cealab::io::read_csv_file(full_dir / "runs.csv");

    // simulate an interrupted sweep: one finished cell with a sentinel value
    const auto resume_dir = fresh_dir("sw_resume");
    {
        std::ofstream partial(resume_dir / "runs.partial.csv");
        partial << "beta,replicate,seed,final_fitness,generations_to_best\n";
        partial << "0.2,0," << cealab::replicate_seed(2, 0.2, 0) << ",-77,0\n";
    }
    REQUIRE(run(base + resume_dir.string() + " --resume").exit_code == 0);
    const auto resumed = cealab::io::read_csv_file(resume_dir / "runs.csv");
    REQUIRE(resumed.rows.size() == full.rows.size());
    const auto fit = resumed.column("final_fitness");
    REQUIRE(resumed.rows[0][fit] == "-77"); // kept verbatim, not recomputed
    for (std::size_t i = 1; i < resumed.rows.size(); ++i)
        REQUIRE(resumed.rows[i][fit] == full.rows[i][fit]);

    // a partial file from a different recipe is refused
    const auto clash_dir = fresh_dir("sw_clash");
    {
        std::ofstream partial(clash_dir / "runs.partial.csv");
        partial << "beta,replicate,seed,final_fitness,generations_to_best\n";
        partial << "0.2,0,12345,-77,0\n";
    }
    REQUIRE(run(base + clash_dir.string() + " --resume").exit_code == 2);
}

TEST_CASE("recipes drive commands, flags win, unknown keys are rejected") {
    const auto dir = fresh_dir("recipe");
    const fs::path recipe = dir / "takeover.recipe";
    {
        std::ofstream r(recipe);
        r << "kind = takeover\ngrid = 4x4\nbeta = 0.5\nreplicates = 2\nseed = 4\nout = "
          << (dir / "from_recipe").string() << "\n";
    }
    REQUIRE(run("takeover --recipe " + recipe.string()).exit_code == 0);
    REQUIRE(fs::exists(dir / "from_recipe" / "takeover.csv"));

    // explicit flag overrides the recipe value
    REQUIRE(run("takeover --recipe " + recipe.string() + " --out " +
                (dir / "flag_wins").string())
                .exit_code == 0);
    REQUIRE(fs::exists(dir / "flag_wins" / "takeover.csv"));

    const fs::path bad = dir / "bad.recipe";
    {
        std::ofstream r(bad);
        r << "kind = takeover\ngrid = 4x4\nbeta = 0.5\nnot_a_flag = 9\n";
    }
    REQUIRE(run("takeover --recipe " + bad.string()).exit_code == 1);

    const fs::path mismatched = dir / "mismatch.recipe";
    {
        std::ofstream r(mismatched);
        r << "kind = sweep\ngrid = 4x4\nbeta = 0.5\n";
    }
    REQUIRE(run("takeover --recipe " + mismatched.string()).exit_code == 1);
}

TEST_CASE("pem pipeline produces probability and beta-star series") {
    const auto dir = fresh_dir("pem");
    const std::string args =
        "pem --nk 10,2,random,3 --build-sigma --sigma-betas 0.2,0.6,1 --sigma-horizon 10 "
        "--sigma-replicates 5 --runs 3 --generations 100 --window 25 --grid 4x4 --seed 9 --out " +
        dir.string();
    REQUIRE(run(args).exit_code == 0);
    const auto pij = cealab::io::read_csv_file(dir / "pij.csv");
    REQUIRE(pij.rows.size() == 4); // 100 generations / window 25
    const auto betastar = cealab::io::read_csv_file(dir / "betastar.csv");
    REQUIRE(betastar.rows.size() == 4);
    REQUIRE(fs::exists(dir / "sigma.csv"));

    const auto again = fresh_dir("pem2");
    const std::string args2 =
        "pem --nk 10,2,random,3 --build-sigma --sigma-betas 0.2,0.6,1 --sigma-horizon 10 "
        "--sigma-replicates 5 --runs 3 --generations 100 --window 25 --grid 4x4 --seed 9 --out " +
        again.string();
    REQUIRE(run(args2).exit_code == 0);
    REQUIRE(slurp(dir / "pij.csv") == slurp(again / "pij.csv"));
    REQUIRE(slurp(dir / "betastar.csv") == slurp(again / "betastar.csv"));
    REQUIRE(slurp(dir / "sigma.csv") == slurp(again / "sigma.csv"));
}

TEST_CASE("pem rejects sigma tables that do not match the experiment") {
    const auto dir = fresh_dir("pem_mismatch");
    REQUIRE(run("pem --nk 10,2,random,3 --build-sigma --sigma-betas 0.2,1 --sigma-horizon 5 "
                "--sigma-replicates 3 --runs 2 --generations 50 --window 25 --grid 4x4 --seed 1 "
                "--out " +
                dir.string())
                .exit_code == 0);

    // same table, wrong grid
    REQUIRE(run("pem --nk 10,2,random,3 --sigma-table " + (dir / "sigma.csv").string() +
                " --runs 2 --generations 50 --window 25 --grid 5x5 --seed 1 --out " +
                (dir / "x").string())
                .exit_code == 2);

    // beta grid not covered by the table
    REQUIRE(run("pem --nk 10,2,random,3 --sigma-table " + (dir / "sigma.csv").string() +
                " --beta-grid 0.5 --runs 2 --generations 50 --window 25 --grid 4x4 --seed 1 "
                "--out " +
                (dir / "y").string())
                .exit_code == 2);
}

TEST_CASE("plotdata reshapes each series") {
    const auto dir = fresh_dir("plot_src");
    REQUIRE(run("takeover --grid 5x5 --beta-grid 0:0.4:0.2 --replicates 2 --seed 1 --out " +
                dir.string())
                .exit_code == 0);
    REQUIRE(run("sweep --nk 10,1,adjacent,4 --betas 0.2,1 --grid 3x3 --replicates 2 "
                "--generations 20 --seed 3 --out " +
                dir.string())
                .exit_code == 0);

    const auto plots = fresh_dir("plot_out");
    for (const std::string kind : {"takeover-mean", "growth", "sweep"})
        REQUIRE(run("plotdata --kind " + kind + " --in " + dir.string() + " --out " +
                    plots.string())
                    .exit_code == 0);
    const auto mean = cealab::io::read_csv_file(plots / "plot_takeover_mean.csv");
    REQUIRE(mean.header == std::vector<std::string>{"beta", "mean_takeover"});
    REQUIRE(mean.rows.size() == 3);
    const auto growth = cealab::io::read_csv_file(plots / "plot_growth.csv");
    REQUIRE(growth.header == std::vector<std::string>{"beta", "t", "n_mean", "dn_mean"});
    const auto sweep = cealab::io::read_csv_file(plots / "plot_sweep.csv");
    REQUIRE(sweep.rows.size() == 2);

    // missing inputs are input errors naming the file
    const auto missing = run("plotdata --kind pij --in " + dir.string() + " --out " +
                             plots.string());
    REQUIRE(missing.exit_code == 2);
    REQUIRE(missing.output.find("pij.csv") != std::string::npos);
}

TEST_CASE("CEALAB_OUT provides the default output directory") {
    const auto dir = fresh_dir("envout");
    const auto r = run("takeover --grid 4x4 --beta 0.3 --replicates 2 --seed 6",
                       "CEALAB_OUT=" + dir.string() + " ");
    REQUIRE(r.exit_code == 0);
    REQUIRE(fs::exists(dir / "takeover.csv"));
}
